"""
Hardware inventory and the hardware-support check that gates module loading.

Inventory files stand in for what a hardware information tool (lshw, dmesg,
sysctl) would report:

    HWINV v1
    # comment
    Intel e1000 Gigabit Ethernet
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Tuple

from catalog import ModuleRecord
from errors import MalformedInventory

logger = logging.getLogger(__name__)

INVENTORY_HEADER = "HWINV v1"


def _words(text: str) -> Tuple[str, ...]:
    """Casefolded words; anything other than letters, digits and '_' separates words."""
    cleaned = "".join(ch if ch.isalnum() or ch == "_" else " " for ch in text.casefold())
    return tuple(cleaned.split())


def _contains_words(haystack: Tuple[str, ...], needle: Tuple[str, ...]) -> bool:
    if not needle:
        return False
    width = len(needle)
    return any(haystack[i:i + width] == needle for i in range(len(haystack) - width + 1))


@dataclass(frozen=True)
class HardwareInventory:
    """Device descriptions as reported by the machine."""

    devices: Tuple[str, ...] = ()

    def __post_init__(self):
        if any(not d.strip() for d in self.devices):
            raise MalformedInventory("device descriptions must not be empty")

    @cached_property
    def normalized(self) -> Tuple[Tuple[str, ...], ...]:
        """Word tuples of every device, computed once and shared by readers."""
        return tuple(_words(d) for d in self.devices)

    def __len__(self) -> int:
        return len(self.devices)

    def serialize(self) -> str:
        return "\n".join([INVENTORY_HEADER, *self.devices]) + "\n"


def parse_inventory(text: str) -> HardwareInventory:
    """
    Parse an inventory file.

    Args:
        text: Inventory content starting with the ``HWINV v1`` header

    Returns:
        HardwareInventory with one trimmed device per non-comment line
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != INVENTORY_HEADER:
        raise MalformedInventory(f"missing '{INVENTORY_HEADER}' header")
    devices = []
    for raw in lines[1:]:
        line = raw.strip()
        if line and not line.startswith("#"):
            devices.append(line)
    if not devices:
        logger.warning("Inventory lists no devices; every hardware-gated module will be skipped")
    return HardwareInventory(tuple(devices))


def inventory_from_tool_output(lines: Iterable[str]) -> HardwareInventory:
    """Build an inventory from raw tool output, one device per non-blank line."""
    devices = [" ".join(line.split()) for line in lines]
    return HardwareInventory(tuple(d for d in devices if d))


def check_hardware_support(module: ModuleRecord, inv: HardwareInventory) -> bool:
    """
    True if the module may load on this hardware.

    Modules without hardware tags are not gated. Otherwise some tag must
    appear as whole words, ignoring case, inside some device description.
    """
    if not module.hw_tags:
        return True
    devices = inv.normalized
    for tag in module.hw_tags:
        needle = _words(tag)
        if any(_contains_words(device, needle) for device in devices):
            return True
    return False
