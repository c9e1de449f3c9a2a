"""
Module registration: build index files from a user selection.

v0 index files hold one load bit per catalog position. v1 index files hold
one dependency-depth byte per position:

    0        not supported by hardware / not selected
    1        independent module
    2 - 255  dependent module
"""
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import config
from catalog import ModuleCatalog
from errors import (
    DepthOverflow,
    PositionMismatch,
    UnknownSelection,
    ValueOutOfRange,
    VersionMismatch,
)
from hardware import HardwareInventory, check_hardware_support

logger = logging.getLogger(__name__)

INDEX_HEADER = "MODINDEX"
V0 = "v0"
V1 = "v1"
_VALUE_LIMITS = {V0: 1, V1: config.MAX_LEVEL}


class PolicyKind(str, Enum):
    ALL_LOAD = "all_load"
    ALL_SKIP = "all_skip"
    FROM_FILE = "from_file"
    INTERACTIVE = "interactive"


@dataclass(frozen=True)
class SelectionPolicy:
    """How registration decides which modules the user wants."""

    kind: PolicyKind
    names: FrozenSet[str] = frozenset()
    ask: Optional[Callable[[str], bool]] = field(default=None, compare=False)

    @classmethod
    def all_load(cls) -> "SelectionPolicy":
        return cls(PolicyKind.ALL_LOAD)

    @classmethod
    def all_skip(cls) -> "SelectionPolicy":
        return cls(PolicyKind.ALL_SKIP)

    @classmethod
    def from_file(cls, names: Sequence[str]) -> "SelectionPolicy":
        return cls(PolicyKind.FROM_FILE, frozenset(names))

    @classmethod
    def interactive(cls, ask: Callable[[str], bool]) -> "SelectionPolicy":
        return cls(PolicyKind.INTERACTIVE, ask=ask)

    def validate(self, catalog: ModuleCatalog):
        if self.kind is PolicyKind.FROM_FILE:
            missing = sorted(n for n in self.names if n not in catalog)
            if missing:
                raise UnknownSelection(missing)

    def decide(self, name: str) -> bool:
        """Answer for one module; interactive policies ask exactly once per call."""
        if self.kind is PolicyKind.ALL_LOAD:
            return True
        if self.kind is PolicyKind.ALL_SKIP:
            return False
        if self.kind is PolicyKind.FROM_FILE:
            return name in self.names
        return bool(self.ask(name))

    def freeze(self, catalog: ModuleCatalog) -> "SelectionPolicy":
        """Resolve the policy once, in catalog order, into an equivalent from_file policy."""
        self.validate(catalog)
        if self.kind is not PolicyKind.INTERACTIVE:
            return self
        return SelectionPolicy.from_file([r.name for r in catalog if self.decide(r.name)])


def parse_selection(text: str) -> List[str]:
    """Selection files list one module name per line; '#' starts a comment."""
    names = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            names.append(line)
    return names


@dataclass(frozen=True)
class IndexFile:
    """Registration outcome, aligned position by position with the catalog."""

    version: str
    entries: Tuple[Tuple[str, int], ...]

    def values(self) -> List[int]:
        return [value for _, value in self.entries]

    def as_dict(self) -> Dict[str, int]:
        return dict(self.entries)

    def selected(self) -> List[str]:
        return [name for name, value in self.entries if value]

    def max_value(self) -> int:
        return max(self.values(), default=0)

    def aligned_with(self, catalog: ModuleCatalog) -> bool:
        return [name for name, _ in self.entries] == catalog.names()

    def ordering_violations(self, catalog: ModuleCatalog) -> List[Tuple[str, str]]:
        """(module, dependency) pairs breaking 0 < value(dep) < value(module) in a v1 index."""
        if self.version != V1:
            return []
        values = self.as_dict()
        violations = []
        for name, value in self.entries:
            if value >= 2:
                for dep in catalog.deps_of(name):
                    if not 0 < values.get(dep, 0) < value:
                        violations.append((name, dep))
        return violations


def register_v0(catalog: ModuleCatalog, policy: SelectionPolicy) -> IndexFile:
    """Flag each catalog position 1 if the user selects it, else 0."""
    policy.validate(catalog)
    entries = tuple((r.name, 1 if policy.decide(r.name) else 0) for r in catalog)
    logger.info("Registered v0 index: %d of %d modules flagged",
                sum(v for _, v in entries), len(entries))
    return IndexFile(V0, entries)


class _DependencyLeveler:
    """handle_dependency: memoized depth of a module's dependency chain."""

    def __init__(self, catalog: ModuleCatalog, query_cost_us: float = 0.0):
        self.catalog = catalog
        self.query_cost_us = query_cost_us
        self.levels: Dict[str, int] = {}

    def _query(self, name: str) -> Tuple[str, ...]:
        if self.query_cost_us > 0:
            time.sleep(self.query_cost_us / 1_000_000)
        return self.catalog.deps_of(name)

    def level(self, root: str) -> int:
        if root in self.levels:
            return self.levels[root]
        # Explicit stack so long chains cannot hit the recursion limit.
        stack = [(root, iter(self._query(root)))]
        while stack:
            name, pending = stack[-1]
            descended = False
            for dep in pending:
                if dep not in self.levels:
                    stack.append((dep, iter(self._query(dep))))
                    descended = True
                    break
            if descended:
                continue
            stack.pop()
            level = 1 + max((self.levels[d] for d in self.catalog.deps_of(name)), default=0)
            if level > config.MAX_LEVEL:
                raise DepthOverflow(name, level)
            self.levels[name] = level
        return self.levels[root]


def register_v1(catalog: ModuleCatalog, policy: SelectionPolicy,
                inventory: HardwareInventory, query_cost_us: float = 0.0) -> IndexFile:
    """
    Build a v1 index of dependency levels.

    Args:
        catalog: Validated catalog
        policy: User selection
        inventory: Hardware the selection is checked against
        query_cost_us: Simulated cost of looking up one module's dependencies

    Returns:
        IndexFile whose nonzero values are dependency levels
    """
    policy.validate(catalog)
    values = {r.name: 0 for r in catalog}
    leveler = _DependencyLeveler(catalog, query_cost_us)

    for record in catalog:
        if not policy.decide(record.name):
            continue
        if not check_hardware_support(record, inventory):
            logger.debug("%s selected but not supported by hardware", record.name)
            continue
        leveler.level(record.name)
        # Dependencies inherit loadability from their dependent.
        for name in catalog.dependency_closure([record.name]):
            values[name] = max(values[name], leveler.levels[name])

    entries = tuple((r.name, values[r.name]) for r in catalog)
    logger.info("Registered v1 index: %d of %d modules leveled, max level %d",
                sum(1 for _, v in entries if v), len(entries),
                max((v for _, v in entries), default=0))
    return IndexFile(V1, entries)


def write_index(index: IndexFile) -> str:
    lines = [f"{INDEX_HEADER} {index.version}"]
    lines.extend(f"{name} {value}" for name, value in index.entries)
    return "\n".join(lines) + "\n"


def read_index(text: str, catalog: ModuleCatalog,
               expected_version: Optional[str] = None) -> IndexFile:
    """
    Parse an index file and check it lines up with the catalog.

    Raises:
        VersionMismatch: unknown header, or not the expected version
        PositionMismatch: names missing, extra or out of catalog order
        ValueOutOfRange: value outside 0-1 (v0) or 0-255 (v1)
    """
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    header = lines[0].split() if lines else []
    if len(header) != 2 or header[0] != INDEX_HEADER or header[1] not in _VALUE_LIMITS:
        raise VersionMismatch(f"unrecognized index header {' '.join(header)!r}")
    version = header[1]
    if expected_version is not None and version != expected_version:
        raise VersionMismatch(f"index is {version}, expected {expected_version}")

    limit = _VALUE_LIMITS[version]
    names = catalog.names()
    body = lines[1:]
    if len(body) != len(names):
        raise PositionMismatch(f"index has {len(body)} entries, catalog has {len(names)} modules")

    entries = []
    for position, (line, expected_name) in enumerate(zip(body, names)):
        parts = line.split()
        if len(parts) != 2:
            raise PositionMismatch(f"position {position}: malformed entry {line!r}")
        name, raw_value = parts
        if name != expected_name:
            raise PositionMismatch(f"position {position}: found '{name}', catalog has '{expected_name}'")
        try:
            value = int(raw_value)
        except ValueError:
            raise ValueOutOfRange(f"'{name}': value {raw_value!r} is not an integer")
        if not 0 <= value <= limit:
            raise ValueOutOfRange(f"'{name}': value {value} outside 0-{limit} for {version}")
        entries.append((name, value))
    return IndexFile(version, tuple(entries))
