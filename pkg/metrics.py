"""
Session metrics: load timing from traces, space savings from load state,
and text/CSV rendering of reports.
"""
import csv
import io
from dataclasses import dataclass
from typing import Iterable, List, Tuple

from catalog import ModuleCatalog
from loader import EventKind, LoadEvent, LoadState


@dataclass(frozen=True)
class SessionTiming:
    first_load_us: int = 0
    last_load_us: int = 0
    wall_us: int = 0
    loads: int = 0
    skips_hw: int = 0
    skips_flag: int = 0
    skips_base: int = 0
    dup_attempts: int = 0


@dataclass(frozen=True)
class SpaceReport:
    total_kb: int
    loaded_kb: int
    saved_kb: int
    base_only_kb: int
    unloaded: Tuple[Tuple[str, int], ...] = ()  # (name, size_kb), largest first


def timing_from_trace(trace: Iterable[LoadEvent]) -> SessionTiming:
    """
    Summarize a trace the way a loader-side logger would.

    The first LOAD starts the clock and the last LOAD stops it; other events
    are only counted.
    """
    counts = {kind: 0 for kind in EventKind}
    first = last = None
    for event in trace:
        counts[event.kind] += 1
        if event.kind is EventKind.LOAD:
            if first is None or event.timestamp_us < first:
                first = event.timestamp_us
            if last is None or event.timestamp_us > last:
                last = event.timestamp_us

    if first is None:
        first = last = 0
    return SessionTiming(
        first_load_us=first,
        last_load_us=last,
        wall_us=last - first,
        loads=counts[EventKind.LOAD],
        skips_hw=counts[EventKind.SKIP_HW],
        skips_flag=counts[EventKind.SKIP_FLAG],
        skips_base=counts[EventKind.SKIP_BASE],
        dup_attempts=counts[EventKind.DUP_ATTEMPT],
    )


def space_report(catalog: ModuleCatalog, state: LoadState) -> SpaceReport:
    """Kilobytes kept out of the kernel by not loading modules."""
    loaded = set(state.loaded_names())
    total_kb = catalog.total_kb
    base_only_kb = catalog.base_only_kb
    loaded_kb = sum(r.size_kb for r in catalog if r.name in loaded)
    unloaded = sorted(
        ((r.name, r.size_kb) for r in catalog if not r.base_kernel_only and r.name not in loaded),
        key=lambda item: (-item[1], item[0]),
    )
    return SpaceReport(
        total_kb=total_kb,
        loaded_kb=loaded_kb,
        saved_kb=total_kb - loaded_kb - base_only_kb,
        base_only_kb=base_only_kb,
        unloaded=tuple(unloaded),
    )


TIMING_FIELDS = ["first_load_us", "last_load_us", "wall_us", "loads",
                 "skips_hw", "skips_flag", "skips_base", "dup_attempts"]
SPACE_FIELDS = ["total_kb", "loaded_kb", "saved_kb", "base_only_kb"]


def format_session_text(timing: SessionTiming, space: SpaceReport, top: int = 5) -> str:
    lines = ["Session timing"]
    lines.extend(f"  {name:<14s} {getattr(timing, name)}" for name in TIMING_FIELDS)
    lines.append("Space")
    lines.extend(f"  {name:<14s} {getattr(space, name)} KB" for name in SPACE_FIELDS)
    if space.unloaded:
        lines.append(f"Largest unloaded modules (top {min(top, len(space.unloaded))})")
        lines.extend(f"  {name:<24s} {size_kb} KB" for name, size_kb in space.unloaded[:top])
    return "\n".join(lines) + "\n"


def format_session_csv(timing: SessionTiming, space: SpaceReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TIMING_FIELDS + SPACE_FIELDS)
    writer.writerow([getattr(timing, f) for f in TIMING_FIELDS] + [getattr(space, f) for f in SPACE_FIELDS])
    return buffer.getvalue()


def format_table(header: List[str], rows: List[List[object]]) -> str:
    """Left-aligned plain-text table."""
    cells = [header] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in cells
    ) + "\n"
