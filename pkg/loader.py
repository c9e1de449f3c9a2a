"""
Module loading engine.

Runs one loading session over a catalog, an index file and a hardware
inventory with one of four strategies:

    stage0  sequential, depth-first dependency loading, v0 index
    stage1  sequential depth sweep over a v1 index
    stage2  every worker scans all modules, handle_module under one lock
    stage3  each worker owns a contiguous range, no lock; loads are claimed
            with a per-module test-and-set
"""
import logging
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Set, Tuple

from atomics import AtomicFlag, AtomicInt, SessionClock
from catalog import ModuleCatalog, ModuleRecord
from errors import ConfigError, IndexMismatch, MalformedTrace
from hardware import HardwareInventory, check_hardware_support
from registry import V0, V1, IndexFile

logger = logging.getLogger(__name__)

UNLOADED = "unloaded"
LOADED = "loaded"
RESIDENT = "resident"  # base-kernel module, present from the start


class EventKind(str, Enum):
    LOAD = "LOAD"
    SKIP_HW = "SKIP_HW"
    SKIP_FLAG = "SKIP_FLAG"
    SKIP_BASE = "SKIP_BASE"
    DUP_ATTEMPT = "DUP_ATTEMPT"


class Strategy(str, Enum):
    STAGE0 = "stage0"
    STAGE1 = "stage1"
    STAGE2 = "stage2"
    STAGE3 = "stage3"

    @property
    def index_version(self) -> str:
        return V1 if self is Strategy.STAGE1 else V0

    @property
    def parallel(self) -> bool:
        return self in (Strategy.STAGE2, Strategy.STAGE3)


@dataclass(frozen=True)
class LoadEvent:
    timestamp_us: int
    worker_id: int
    kind: EventKind
    module: str

    def to_line(self) -> str:
        return f"{self.timestamp_us} {self.worker_id} {self.kind.value} {self.module}"


@dataclass(frozen=True)
class LoadCost:
    """Simulated latency, all in microseconds."""

    base_us: float = 0.0
    per_kb_us: float = 0.0
    dep_query_us: float = 0.0

    def nominal_us(self, size_kb: int) -> float:
        return self.base_us + size_kb * self.per_kb_us


@dataclass(frozen=True)
class StrategyConfig:
    strategy: Strategy = Strategy.STAGE0
    workers: int = 1
    load_cost: LoadCost = field(default_factory=LoadCost)

    def validate(self):
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        if self.strategy.parallel and self.workers < 2:
            raise ConfigError(f"{self.strategy.value} needs at least 2 workers, got {self.workers}")


@dataclass(frozen=True)
class PartitionPlan:
    n_modules: int
    workers: int
    loading_workers: int
    step: int
    ranges: Tuple[Tuple[int, int], ...]


def plan_partitions(n_modules: int, workers: int) -> PartitionPlan:
    """
    Split [0, n_modules) into one contiguous range per loading worker.

    One of ``workers`` threads reads hardware, so workers - 1 threads load.
    The step is rounded up so no tail of modules is left without an owner.
    """
    if workers < 2:
        raise ConfigError(f"partitioned loading needs at least 2 workers, got {workers}")
    if n_modules < 0:
        raise ConfigError(f"module count must not be negative, got {n_modules}")
    loading = workers - 1
    step = -(-n_modules // loading)
    ranges = tuple(
        (min(i * step, n_modules), min((i + 1) * step, n_modules)) for i in range(loading)
    )
    return PartitionPlan(n_modules, workers, loading, step, ranges)


def simulate_load(module: ModuleRecord, config: StrategyConfig) -> float:
    """Sleep for the module's nominal load cost; return the elapsed microseconds."""
    nominal = config.load_cost.nominal_us(module.size_kb)
    if nominal <= 0:
        return 0.0
    start = time.perf_counter()
    time.sleep(nominal / 1_000_000)
    return (time.perf_counter() - start) * 1_000_000


class LoadState:
    """
    Shared per-module load table for one session.

    Status moves unloaded -> loaded exactly once, guarded by a test-and-set
    claim. Readers never block except to wait for a module another worker
    is still loading.
    """

    def __init__(self, catalog: ModuleCatalog):
        self.catalog = catalog
        self.clock = SessionClock()
        n = len(catalog)
        self._status = [RESIDENT if r.base_kernel_only else UNLOADED for r in catalog]
        self._claims = [AtomicFlag() for _ in range(n)]
        self._owner: List[Optional[int]] = [None] * n
        self._done = [threading.Event() for _ in range(n)]
        self._attempts = [AtomicInt() for _ in range(n)]
        for i, status in enumerate(self._status):
            if status == RESIDENT:
                self._done[i].set()

    def _pos(self, name: str) -> int:
        return self.catalog.index_of[name]

    def status(self, name: str) -> str:
        return self._status[self._pos(name)]

    def is_loaded(self, name: str) -> bool:
        return self._status[self._pos(name)] != UNLOADED

    def is_claimed(self, name: str) -> bool:
        return self._claims[self._pos(name)].is_set()

    def owner_of(self, name: str) -> Optional[int]:
        return self._owner[self._pos(name)]

    def claimed_by_other(self, name: str, worker_id: int) -> bool:
        # An owner of None means the claim is still being published by another worker.
        i = self._pos(name)
        return self._claims[i].is_set() and self._owner[i] != worker_id

    def claim(self, name: str, worker_id: int) -> bool:
        """Try to become the one worker that loads ``name``."""
        i = self._pos(name)
        if self._claims[i].test_and_set():
            return False
        self._owner[i] = worker_id
        return True

    def complete(self, name: str):
        i = self._pos(name)
        if self._status[i] != UNLOADED:
            raise RuntimeError(f"module '{name}' completed twice")
        self._status[i] = LOADED
        self._done[i].set()

    def wait_loaded(self, name: str):
        self._done[self._pos(name)].wait()

    def record_attempt(self, name: str) -> int:
        return self._attempts[self._pos(name)].increment_and_get()

    def attempts(self, name: str) -> int:
        return self._attempts[self._pos(name)].get()

    def loaded_names(self) -> List[str]:
        """Dynamically loaded modules in catalog order."""
        return [r.name for r, s in zip(self.catalog, self._status) if s == LOADED]

    @classmethod
    def from_trace(cls, catalog: ModuleCatalog, trace: Iterable[LoadEvent]) -> "LoadState":
        """Rebuild the final load table of a recorded session."""
        state = cls(catalog)
        for event in trace:
            if event.kind is not EventKind.LOAD:
                continue
            if event.module not in catalog:
                raise MalformedTrace(f"trace loads '{event.module}', which is not in the catalog")
            state.record_attempt(event.module)
            if state.claim(event.module, event.worker_id):
                state.complete(event.module)
        return state


class TraceLog:
    """
    Append-only event log with one buffer per worker.

    Buffers are created before workers start; each worker only appends to
    its own, and the merged view is ordered by the session sequence.
    """

    def __init__(self, clock: SessionClock):
        self._clock = clock
        self._buffers: Dict[int, List[Tuple[int, LoadEvent]]] = {}

    def register(self, worker_id: int):
        self._buffers.setdefault(worker_id, [])

    def record(self, worker_id: int, kind: EventKind, module: str) -> LoadEvent:
        seq, now_us = self._clock.stamp()
        event = LoadEvent(now_us, worker_id, kind, module)
        self._buffers[worker_id].append((seq, event))
        logger.debug("%s", event.to_line())
        return event

    def events(self) -> List[LoadEvent]:
        merged = [item for buffer in list(self._buffers.values()) for item in list(buffer)]
        merged.sort(key=lambda item: item[0])
        return [event for _, event in merged]


class LoadSession:
    """One loading run; owns its state, trace and (for stage2) its lock."""

    def __init__(self, catalog: ModuleCatalog, index: IndexFile,
                 inventory: HardwareInventory, config: StrategyConfig):
        self.catalog = catalog
        self.index = index
        self.inventory = inventory
        self.config = config
        self.state = LoadState(catalog)
        self.trace = TraceLog(self.state.clock)
        self.elapsed_us = 0
        self._records = catalog.records
        self._handle_lock = threading.Lock()

    def run(self, strategy: Optional[Strategy] = None) -> Tuple[LoadState, List[LoadEvent]]:
        """
        Execute the session.

        Args:
            strategy: Overrides ``config.strategy`` when given

        Returns:
            Tuple of (final LoadState, ordered trace)
        """
        strategy = Strategy(strategy or self.config.strategy)
        replace(self.config, strategy=strategy).validate()
        self._check_index(strategy.index_version)

        runner = {
            Strategy.STAGE0: self._run_stage0,
            Strategy.STAGE1: self._run_stage1,
            Strategy.STAGE2: self._run_stage2,
            Strategy.STAGE3: self._run_stage3,
        }[strategy]

        logger.info("Starting %s session over %d modules", strategy.value, len(self.catalog))
        start = self.state.clock.now_us()
        try:
            runner()
        finally:
            self.elapsed_us = self.state.clock.now_us() - start
        trace = self.trace.events()
        logger.info("%s finished: %d loaded in %d us", strategy.value,
                    len(self.state.loaded_names()), self.elapsed_us)
        return self.state, trace

    # Setup

    def _check_index(self, version: str):
        if self.index.version != version:
            raise IndexMismatch(f"strategy needs a {version} index, got {self.index.version}")
        if len(self.index.entries) != len(self._records):
            raise IndexMismatch(
                f"index has {len(self.index.entries)} entries, catalog has {len(self._records)}")

    def _map_index(self, start: int, end: int) -> List[int]:
        """Map index positions [start, end) onto catalog modules; return their values."""
        values = []
        for i in range(start, end):
            name, value = self.index.entries[i]
            if name != self._records[i].name:
                raise IndexMismatch(f"position {i}: index has '{name}', catalog has '{self._records[i].name}'")
            values.append(value)
        return values

    def _read_hardware(self) -> int:
        return len(self.inventory.normalized)

    # Strategies

    def _run_stage0(self):
        flags = self._map_index(0, len(self._records))
        self._read_hardware()
        self.trace.register(0)
        self._scan(0, 0, len(self._records), flags)

    def _run_stage1(self):
        values = self._map_index(0, len(self._records))
        violations = self.index.ordering_violations(self.catalog)
        if violations:
            logger.warning("v1 index breaks dependency ordering for %d pairs, e.g. %s needs %s",
                           len(violations), *violations[0])
        self.trace.register(0)
        deepest = max(values, default=0)
        depth = 1
        while depth <= deepest:
            for record, value in zip(self._records, values):
                if value != depth:
                    continue
                if record.base_kernel_only:
                    self.trace.record(0, EventKind.SKIP_BASE, record.name)
                else:
                    self._attach(record.name, 0)
            depth += 1

    def _run_stage2(self):
        n = len(self._records)
        with ThreadPoolExecutor(max_workers=2, thread_name_prefix="stage2-setup") as pool:
            index_task = pool.submit(self._map_index, 0, n)
            hardware_task = pool.submit(self._read_hardware)
            flags = index_task.result()
            hardware_task.result()

        workers = self.config.workers
        for worker_id in range(workers):
            self.trace.register(worker_id)
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="stage2") as pool:
            tasks = [pool.submit(self._scan, w, 0, n, flags, True) for w in range(workers)]
            for task in tasks:
                task.result()

    def _run_stage3(self):
        plan = plan_partitions(len(self._records), self.config.workers)
        logger.debug("Partition plan: step %d, ranges %s", plan.step, plan.ranges)
        with ThreadPoolExecutor(max_workers=plan.workers, thread_name_prefix="stage3-setup") as pool:
            index_tasks = [pool.submit(self._map_index, start, end) for start, end in plan.ranges]
            hardware_task = pool.submit(self._read_hardware)
            flags = [value for task in index_tasks for value in task.result()]
            hardware_task.result()

        for worker_id in range(plan.loading_workers):
            self.trace.register(worker_id)
        with ThreadPoolExecutor(max_workers=plan.loading_workers, thread_name_prefix="stage3") as pool:
            tasks = [pool.submit(self._scan, w, start, end, flags)
                     for w, (start, end) in enumerate(plan.ranges)]
            for task in tasks:
                task.result()

    # Per-module work

    def _scan(self, worker_id: int, start: int, end: int, flags: List[int], locked: bool = False):
        for i in range(start, end):
            record = self._records[i]
            if not flags[i]:
                self.trace.record(worker_id, EventKind.SKIP_FLAG, record.name)
            elif record.base_kernel_only:
                self.trace.record(worker_id, EventKind.SKIP_BASE, record.name)
            elif not check_hardware_support(record, self.inventory):
                self.trace.record(worker_id, EventKind.SKIP_HW, record.name)
            elif locked:
                with self._handle_lock:
                    self._handle_module(record.name, worker_id)
            else:
                self._handle_module(record.name, worker_id)

    def _query_deps(self, name: str) -> Tuple[str, ...]:
        query_us = self.config.load_cost.dep_query_us
        if query_us > 0:
            time.sleep(query_us / 1_000_000)
        return self.catalog.deps_of(name)

    def _should_visit(self, name: str, worker_id: int) -> bool:
        """False if ``name`` is resident or already claimed; waits on other workers' claims."""
        if self._records[self.catalog.index_of[name]].base_kernel_only:
            return False
        if not self.state.is_claimed(name):
            return True
        if self.state.claimed_by_other(name, worker_id):
            self.state.record_attempt(name)
            self.trace.record(worker_id, EventKind.DUP_ATTEMPT, name)
            self.state.wait_loaded(name)
        return False

    def _handle_module(self, root: str, worker_id: int):
        """Load ``root`` after all of its dependencies, depth first."""
        if not self._should_visit(root, worker_id):
            return
        stack = [(root, iter(self._query_deps(root)))]
        while stack:
            name, pending = stack[-1]
            descended = False
            for dep in pending:
                if self._should_visit(dep, worker_id):
                    stack.append((dep, iter(self._query_deps(dep))))
                    descended = True
                    break
            if descended:
                continue
            stack.pop()
            self._attach(name, worker_id)

    def _attach(self, name: str, worker_id: int):
        self.state.record_attempt(name)
        if self.state.claim(name, worker_id):
            simulate_load(self._records[self.catalog.index_of[name]], self.config)
            # LOAD is logged before waiters are released so dependents sort after it.
            self.trace.record(worker_id, EventKind.LOAD, name)
            self.state.complete(name)
        else:
            self.trace.record(worker_id, EventKind.DUP_ATTEMPT, name)
            self.state.wait_loaded(name)


def run_strategy(catalog: ModuleCatalog, index: IndexFile, inventory: HardwareInventory,
                 config: StrategyConfig) -> Tuple[LoadState, List[LoadEvent]]:
    return LoadSession(catalog, index, inventory, config).run()


def load_stage0(catalog, index_v0, inventory, config):
    return LoadSession(catalog, index_v0, inventory, config).run(Strategy.STAGE0)


def load_stage1(catalog, index_v1, inventory, config):
    return LoadSession(catalog, index_v1, inventory, config).run(Strategy.STAGE1)


def load_stage2(catalog, index_v0, inventory, config):
    return LoadSession(catalog, index_v0, inventory, config).run(Strategy.STAGE2)


def load_stage3(catalog, index_v0, inventory, config):
    return LoadSession(catalog, index_v0, inventory, config).run(Strategy.STAGE3)


# Trace files and checks

def write_trace(events: Iterable[LoadEvent]) -> str:
    return "".join(event.to_line() + "\n" for event in events)


def parse_trace(text: str) -> List[LoadEvent]:
    events = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise MalformedTrace(f"line {line_no}: expected 4 fields, got {len(parts)}")
        try:
            events.append(LoadEvent(int(parts[0]), int(parts[1]), EventKind(parts[2]), parts[3]))
        except ValueError as e:
            raise MalformedTrace(f"line {line_no}: {e}")
    return events


def loaded_set(trace: Iterable[LoadEvent]) -> Set[str]:
    return {e.module for e in trace if e.kind is EventKind.LOAD}


def duplicate_loads(trace: Iterable[LoadEvent]) -> List[str]:
    counts = Counter(e.module for e in trace if e.kind is EventKind.LOAD)
    return sorted(name for name, count in counts.items() if count > 1)


def dependency_violations(catalog: ModuleCatalog, trace: List[LoadEvent]) -> List[Tuple[str, str]]:
    """(module, dependency) pairs where the dependency was not loaded before the module."""
    first_load: Dict[str, int] = {}
    for position, event in enumerate(trace):
        if event.kind is EventKind.LOAD:
            first_load.setdefault(event.module, position)

    violations = []
    for name, position in first_load.items():
        if name not in catalog:
            continue
        for dep in catalog.deps_of(name):
            if catalog[dep].base_kernel_only:
                continue
            if first_load.get(dep, len(trace)) > position:
                violations.append((name, dep))
    return violations
