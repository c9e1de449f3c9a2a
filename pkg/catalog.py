"""
Module catalog - the in-memory model of a kernel modules directory.

Catalog files are line based:

    MODCAT v1
    # comment
    name|size_kb|dep1,dep2|tag1,tag2

Records are kept in bytewise alphabetical order; the position of a record is
the index every IndexFile refers to.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Sequence, Set, Tuple

import networkx as nx

from errors import (
    CircularDependency,
    DuplicateModule,
    MalformedRecord,
    UnknownDependency,
)

logger = logging.getLogger(__name__)

CATALOG_HEADER = "MODCAT v1"
BASE_TAG = "@base"
SYMBOLS_SUFFIX = ".symbols"
MODULE_EXTENSION = ".ko"

_FORBIDDEN_NAME_CHARS = set("|,# \t\r\n")


@dataclass(frozen=True)
class ModuleRecord:
    """One loadable module as listed in the catalog."""

    name: str
    size_kb: int
    deps: Tuple[str, ...] = ()
    hw_tags: Tuple[str, ...] = ()
    base_kernel_only: bool = False

    def to_line(self) -> str:
        tags = list(self.hw_tags)
        if self.base_kernel_only:
            tags.append(BASE_TAG)
        return f"{self.name}|{self.size_kb}|{','.join(self.deps)}|{','.join(tags)}"


def _sort_key(name: str) -> bytes:
    return name.encode("utf-8")


def _strip_extension(name: str) -> str:
    if name.endswith(MODULE_EXTENSION) and len(name) > len(MODULE_EXTENSION):
        return name[: -len(MODULE_EXTENSION)]
    return name


def _check_name(name: str, line_no: int, what: str = "module name") -> str:
    if not name:
        raise MalformedRecord(f"empty {what}", line_no)
    bad = _FORBIDDEN_NAME_CHARS.intersection(name)
    if bad:
        raise MalformedRecord(f"{what} '{name}' contains {sorted(bad)!r}", line_no)
    return name


def _split_list(field: str) -> List[str]:
    if not field.strip():
        return []
    return [item.strip() for item in field.split(",")]


class ModuleCatalog:
    """
    Immutable, validated set of module records.

    Construction sorts the records, rejects duplicates and unknown
    dependencies, and refuses dependency cycles.
    """

    def __init__(self, records: Iterable[ModuleRecord]):
        by_name: Dict[str, ModuleRecord] = {}
        for record in records:
            if record.name in by_name:
                raise DuplicateModule(record.name)
            by_name[record.name] = record

        self.records: Tuple[ModuleRecord, ...] = tuple(
            by_name[name] for name in sorted(by_name, key=_sort_key)
        )
        self.index_of: Dict[str, int] = {r.name: i for i, r in enumerate(self.records)}

        for record in self.records:
            for dep in record.deps:
                if dep not in self.index_of:
                    raise UnknownDependency(record.name, dep)
                if record.base_kernel_only and not by_name[dep].base_kernel_only:
                    raise MalformedRecord(f"base module '{record.name}' depends on loadable module '{dep}'")

        # Edges point from a module to the modules it needs.
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(r.name for r in self.records)
        for record in self.records:
            self.graph.add_edges_from((record.name, dep) for dep in record.deps)

        try:
            cycle_edges = nx.find_cycle(self.graph)
        except nx.NetworkXNoCycle:
            cycle_edges = None
        if cycle_edges:
            cycle = [edge[0] for edge in cycle_edges]
            start = cycle.index(min(cycle, key=_sort_key))
            raise CircularDependency(cycle[start:] + cycle[:start])

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ModuleRecord]:
        return iter(self.records)

    def __contains__(self, name: object) -> bool:
        return name in self.index_of

    def __getitem__(self, name: str) -> ModuleRecord:
        return self.records[self.index_of[name]]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModuleCatalog):
            return NotImplemented
        return self.records == other.records

    def __repr__(self) -> str:
        return f"ModuleCatalog({len(self.records)} modules)"

    def names(self) -> List[str]:
        return [r.name for r in self.records]

    def deps_of(self, name: str) -> Tuple[str, ...]:
        return self.records[self.index_of[name]].deps

    def dependency_closure(self, names: Iterable[str]) -> Set[str]:
        """Return ``names`` plus every module they transitively depend on."""
        closure: Set[str] = set()
        for name in names:
            if name not in closure:
                closure.add(name)
                closure.update(nx.descendants(self.graph, name))
        return closure

    @property
    def total_kb(self) -> int:
        return sum(r.size_kb for r in self.records)

    @property
    def base_only_kb(self) -> int:
        return sum(r.size_kb for r in self.records if r.base_kernel_only)

    def serialize(self) -> str:
        lines = [CATALOG_HEADER] + [r.to_line() for r in self.records]
        return "\n".join(lines) + "\n"


def parse_records(text: str) -> List[ModuleRecord]:
    """
    Parse catalog text into records, dropping ``.symbols`` helper entries.

    Args:
        text: Catalog file content starting with the ``MODCAT v1`` header

    Returns:
        Records in file order
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != CATALOG_HEADER:
        raise MalformedRecord(f"missing '{CATALOG_HEADER}' header", 1)

    records: List[ModuleRecord] = []
    skipped = 0
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        fields = line.split("|")
        if len(fields) != 4:
            raise MalformedRecord(f"expected 4 '|' separated fields, got {len(fields)}", line_no)
        name_field, size_field, deps_field, tags_field = (f.strip() for f in fields)

        name = _strip_extension(name_field)
        if name.endswith(SYMBOLS_SUFFIX):
            skipped += 1
            continue
        _check_name(name, line_no)

        try:
            size_kb = int(size_field)
        except ValueError:
            raise MalformedRecord(f"size '{size_field}' of '{name}' is not an integer", line_no)
        if size_kb < 0:
            raise MalformedRecord(f"size of '{name}' is negative", line_no)

        deps = [_strip_extension(_check_name(d, line_no, "dependency")) for d in _split_list(deps_field)]
        if len(set(deps)) != len(deps):
            raise MalformedRecord(f"'{name}' lists a dependency twice", line_no)

        tags = _split_list(tags_field)
        base_only = BASE_TAG in tags
        tags = [t for t in tags if t != BASE_TAG]
        if any(not t for t in tags):
            raise MalformedRecord(f"'{name}' has an empty hardware tag", line_no)

        records.append(ModuleRecord(name, size_kb, tuple(deps), tuple(tags), base_only))

    if skipped:
        logger.debug("Ignored %d .symbols helper entries", skipped)
    return records


def parse_catalog(text: str) -> ModuleCatalog:
    """Parse one catalog file into a validated ModuleCatalog."""
    return ModuleCatalog(parse_records(text))


def parse_catalogs(texts: Sequence[str]) -> ModuleCatalog:
    """
    Merge one or two catalog files into a single catalog.

    Dependencies may point across files; a module listed in both files
    is rejected rather than given a precedence.
    """
    if not 1 <= len(texts) <= 2:
        raise MalformedRecord(f"expected one or two catalog files, got {len(texts)}")
    records: List[ModuleRecord] = []
    for text in texts:
        records.extend(parse_records(text))
    return ModuleCatalog(records)


def topo_levels(catalog: ModuleCatalog) -> Dict[str, int]:
    """
    Dependency level of every module: 1 for leaves, else 1 + deepest dependency.

    Computed from a topological order of the catalog graph; this is the
    reference the registry's handle_dependency must agree with.
    """
    levels: Dict[str, int] = {}
    # Edges run module -> dependency, so the reversed order visits dependencies first.
    for name in reversed(list(nx.topological_sort(catalog.graph))):
        deps = catalog.deps_of(name)
        levels[name] = 1 + max((levels[d] for d in deps), default=0)
    return levels


def catalog_from_proc_modules(text: str) -> ModuleCatalog:
    """
    Build a catalog from a ``/proc/modules`` snapshot.

    Each line is ``name size refcount users state address``; ``users`` lists
    the modules that depend on this one, so edges are inverted here. Sizes
    are bytes and rounded up to whole kilobytes.
    """
    sizes: Dict[str, int] = {}
    deps: Dict[str, List[str]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        elems = raw.split()
        if not elems:
            continue
        if len(elems) < 4:
            raise MalformedRecord("expected at least 4 columns in /proc/modules line", line_no)
        name, size_bytes, users = elems[0], elems[1], elems[3]
        _check_name(name, line_no)
        try:
            sizes[name] = -(-int(size_bytes) // 1024)
        except ValueError:
            raise MalformedRecord(f"size '{size_bytes}' of '{name}' is not an integer", line_no)
        deps.setdefault(name, [])
        if users != "-":
            for user in users.split(","):
                if user:
                    deps.setdefault(user, []).append(name)

    for user, needed in deps.items():
        if user not in sizes:
            raise MalformedRecord(f"'{needed[0]}' is used by '{user}', which is not listed")

    records = [
        ModuleRecord(name, size_kb, tuple(sorted(set(deps[name]), key=_sort_key)))
        for name, size_kb in sizes.items()
    ]
    return ModuleCatalog(records)
