"""
Deterministic synthetic fixtures: a module catalog and a matching hardware inventory.
"""
import logging
import random
from typing import Dict, List, Tuple

import config
from catalog import BASE_TAG, CATALOG_HEADER, SYMBOLS_SUFFIX
from errors import ConfigError
from hardware import INVENTORY_HEADER

logger = logging.getLogger(__name__)

_PREFIXES = ("if_", "snd_", "usb_", "geom_", "fs_", "crypto_", "acpi_", "drm_", "net_", "hid_")
_VENDORS = ("Intel", "Realtek", "Broadcom", "AMD", "NVIDIA", "Qualcomm", "Marvell")
_DEVICE_KINDS = ("Controller", "Adapter", "Bridge", "Device")
_NOISE_DEVICES = ("ACPI Power Button", "PS/2 Generic Mouse", "System Timer", "PCI Root Complex")


def generate_fixture(modules: int, max_depth: int, seed: int,
                     hw_coverage: float) -> Tuple[str, str]:
    """
    Generate catalog and inventory file contents.

    Args:
        modules: Number of real modules (decoys come on top)
        max_depth: Longest dependency chain allowed
        seed: Random seed; equal arguments give byte-identical output
        hw_coverage: Fraction of hardware-gated modules whose device is present

    Returns:
        Tuple of (catalog text, inventory text)
    """
    if modules < 1:
        raise ConfigError(f"module count must be at least 1, got {modules}")
    if max_depth < 1:
        raise ConfigError(f"max depth must be at least 1, got {max_depth}")
    if not 0.0 <= hw_coverage <= 1.0:
        raise ConfigError(f"hardware coverage must be within [0, 1], got {hw_coverage}")

    rng = random.Random(seed)
    names = [f"{rng.choice(_PREFIXES)}{i:04d}" for i in range(modules)]

    # The first max_depth modules pin one module to every level.
    levels = [i + 1 if i < max_depth else rng.randint(1, max_depth) for i in range(modules)]
    by_level: Dict[int, List[str]] = {}
    for name, level in zip(names, levels):
        by_level.setdefault(level, []).append(name)

    lines = []
    devices = list(_NOISE_DEVICES[: rng.randint(0, len(_NOISE_DEVICES))])
    gated_count = 0
    for i, (name, level) in enumerate(zip(names, levels)):
        deps: List[str] = []
        if level > 1:
            # One dependency one level down fixes the level exactly.
            deps.append(rng.choice(by_level[level - 1]))
            lower = [n for lv in range(1, level) for n in by_level[lv]]
            for extra in rng.sample(lower, min(len(lower), rng.randint(0, 2))):
                if extra not in deps:
                    deps.append(extra)

        tags: List[str] = []
        gated = i == 0 or rng.random() < config.GEN_GATED_FRACTION
        if gated:
            tags.append(name)
            gated_count += 1
            if rng.random() < hw_coverage:
                devices.append(f"{rng.choice(_VENDORS)} {name} {rng.choice(_DEVICE_KINDS)}")
        elif level == 1 and rng.random() < config.GEN_BASE_FRACTION:
            tags.append(BASE_TAG)

        size_kb = rng.randint(*config.GEN_SIZE_RANGE_KB)
        lines.append(f"{name}|{size_kb}|{','.join(deps)}|{','.join(tags)}")

    for _ in range(max(1, modules // 20)):
        lines.append(f"{rng.choice(names)}{SYMBOLS_SUFFIX}|{rng.randint(1, 16)}||")

    rng.shuffle(lines)
    rng.shuffle(devices)
    logger.info("Generated %d modules (%d gated), %d devices, seed %d",
                modules, gated_count, len(devices), seed)

    catalog_text = "\n".join(
        [CATALOG_HEADER, f"# modattach gen modules={modules} max_depth={max_depth} "
                         f"seed={seed} hw_coverage={hw_coverage:g}"] + lines
    ) + "\n"
    inventory_text = "\n".join([INVENTORY_HEADER] + devices) + "\n"
    return catalog_text, inventory_text
