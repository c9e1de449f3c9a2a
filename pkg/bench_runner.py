"""
Benchmark engine: runs loading strategies on identical inputs and compares them.
"""
import csv
import io
import logging
import statistics
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import config
from catalog import ModuleCatalog
from errors import ConfigError
from hardware import HardwareInventory
from loader import (
    LoadCost,
    LoadSession,
    Strategy,
    StrategyConfig,
    dependency_violations,
    duplicate_loads,
)
from metrics import SessionTiming, format_table, timing_from_trace
from registry import SelectionPolicy, register_v0, register_v1

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StrategyResult:
    strategy: Strategy
    workers: int
    timings: Tuple[SessionTiming, ...]
    median_wall_us: float
    median_elapsed_us: float
    normalized: float
    loaded: int
    violations: int
    duplicate_loads: int
    stable: bool  # same loaded set on every repetition

    @property
    def dup_attempts(self) -> int:
        return max(t.dup_attempts for t in self.timings)


@dataclass(frozen=True)
class CompositeCost:
    """One registration followed by several loads, for the v0 and v1 pipelines."""

    registrations: int
    loads: int
    v0_register_us: float
    v1_register_us: float
    v0_total_us: float
    v1_total_us: float

    @property
    def improvement(self) -> float:
        """v0 cost over v1 cost; above 1.0 means the v1 pipeline is cheaper."""
        return self.v0_total_us / self.v1_total_us if self.v1_total_us else float("inf")


@dataclass(frozen=True)
class BenchReport:
    workers: int
    repetitions: int
    load_cost: LoadCost
    results: Tuple[StrategyResult, ...]
    composite: Optional[CompositeCost] = None

    def result(self, strategy: Strategy) -> StrategyResult:
        for result in self.results:
            if result.strategy is Strategy(strategy):
                return result
        raise KeyError(strategy)


def _normalize(wall_us: float, baseline_us: float) -> float:
    if baseline_us > 0:
        return wall_us / baseline_us
    return 1.0 if wall_us == 0 else float("inf")


class BenchRunner:
    """
    Executes repeated loading sessions and collects comparable results.
    """

    def __init__(self, catalog: ModuleCatalog, policy: SelectionPolicy,
                 inventory: HardwareInventory, load_cost: Optional[LoadCost] = None):
        """
        Initialize bench runner.

        Args:
            catalog: Catalog every strategy loads from
            policy: Selection used for both index versions; resolved once
            inventory: Hardware inventory shared by every session
            load_cost: Simulated latency; instant when omitted
        """
        self.catalog = catalog
        self.policy = policy.freeze(catalog)
        self.inventory = inventory
        self.load_cost = load_cost or LoadCost()
        self.register_us: Dict[str, List[float]] = {"v0": [], "v1": []}

    def _register(self):
        start = time.perf_counter()
        index_v0 = register_v0(self.catalog, self.policy)
        self.register_us["v0"].append((time.perf_counter() - start) * 1_000_000)

        start = time.perf_counter()
        index_v1 = register_v1(self.catalog, self.policy, self.inventory,
                               query_cost_us=self.load_cost.dep_query_us)
        self.register_us["v1"].append((time.perf_counter() - start) * 1_000_000)
        return index_v0, index_v1

    def run_strategy(self, strategy: Strategy, workers: int, repetitions: int,
                     indexes) -> Tuple[List[SessionTiming], List[int], List[frozenset], int, int]:
        index_v0, index_v1 = indexes
        index = index_v1 if strategy is Strategy.STAGE1 else index_v0
        session_workers = workers if strategy.parallel else 1
        strategy_config = StrategyConfig(strategy, session_workers, self.load_cost)

        timings, elapsed, loaded_sets = [], [], []
        violations = duplicates = 0
        for _ in range(repetitions):
            session = LoadSession(self.catalog, index, self.inventory, strategy_config)
            state, trace = session.run()
            timings.append(timing_from_trace(trace))
            elapsed.append(session.elapsed_us)
            loaded_sets.append(frozenset(state.loaded_names()))
            violations += len(dependency_violations(self.catalog, trace))
            duplicates += len(duplicate_loads(trace))
        return timings, elapsed, loaded_sets, violations, duplicates

    def run(self, strategies: Sequence[Strategy], workers: int, repetitions: int) -> BenchReport:
        """
        Run every strategy ``repetitions`` times and build the report.

        stage0 is always run because it is the normalization baseline.
        """
        if repetitions < 1:
            raise ConfigError(f"repetitions must be at least 1, got {repetitions}")
        ordered = [Strategy(s) for s in strategies]
        if Strategy.STAGE0 not in ordered:
            logger.info("Adding stage0 as the normalization baseline")
            ordered.insert(0, Strategy.STAGE0)
        ordered = list(dict.fromkeys(ordered))
        for strategy in ordered:
            StrategyConfig(strategy, workers if strategy.parallel else 1).validate()

        indexes = self._register()
        for _ in range(repetitions - 1):
            self._register()

        raw = {}
        for strategy in ordered:
            logger.info("Benchmarking %s: %d repetition(s)", strategy.value, repetitions)
            raw[strategy] = self.run_strategy(strategy, workers, repetitions, indexes)

        baseline = statistics.median(t.wall_us for t in raw[Strategy.STAGE0][0])
        results = []
        for strategy in ordered:
            timings, elapsed, loaded_sets, violations, duplicates = raw[strategy]
            median_wall = statistics.median(t.wall_us for t in timings)
            normalized = 1.0 if strategy is Strategy.STAGE0 else _normalize(median_wall, baseline)
            results.append(StrategyResult(
                strategy=strategy,
                workers=workers if strategy.parallel else 1,
                timings=tuple(timings),
                median_wall_us=median_wall,
                median_elapsed_us=statistics.median(elapsed),
                normalized=normalized,
                loaded=len(loaded_sets[0]),
                violations=violations,
                duplicate_loads=duplicates,
                stable=len(set(loaded_sets)) == 1,
            ))

        composite = None
        if Strategy.STAGE1 in raw:
            loads = config.COMPOSITE_LOADS
            v0_register = statistics.median(self.register_us["v0"])
            v1_register = statistics.median(self.register_us["v1"])
            composite = CompositeCost(
                registrations=1,
                loads=loads,
                v0_register_us=v0_register,
                v1_register_us=v1_register,
                v0_total_us=v0_register + loads * statistics.median(raw[Strategy.STAGE0][1]),
                v1_total_us=v1_register + loads * statistics.median(raw[Strategy.STAGE1][1]),
            )

        return BenchReport(workers, repetitions, self.load_cost, tuple(results), composite)


def bench(catalog: ModuleCatalog, policy: SelectionPolicy, inventory: HardwareInventory,
          strategies: Sequence[Strategy], workers: int, repetitions: int = config.DEFAULT_REPETITIONS,
          load_cost: Optional[LoadCost] = None) -> BenchReport:
    return BenchRunner(catalog, policy, inventory, load_cost).run(strategies, workers, repetitions)


CSV_FIELDS = ["strategy", "workers", "median_wall_us", "normalized", "loads", "dup_attempts",
              "skips_hw", "skips_flag", "violations", "duplicate_loads", "stable"]


def _row(result: StrategyResult) -> List[object]:
    first = result.timings[0]
    return [
        result.strategy.value,
        result.workers,
        f"{result.median_wall_us:.0f}",
        f"{result.normalized:.3f}",
        first.loads,
        result.dup_attempts,
        first.skips_hw,
        first.skips_flag,
        result.violations,
        result.duplicate_loads,
        "yes" if result.stable else "no",
    ]


def format_bench_csv(report: BenchReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for result in report.results:
        writer.writerow(_row(result))
    return buffer.getvalue()


def format_bench_text(report: BenchReport) -> str:
    cost = report.load_cost
    lines = [
        f"# normalized to stage0 median wall_us; median of {report.repetitions} repetition(s)",
        f"# load cost: base {cost.base_us:g} us, {cost.per_kb_us:g} us/KB, "
        f"dependency query {cost.dep_query_us:g} us; workers {report.workers}",
    ]
    text = "\n".join(lines) + "\n" + format_table(CSV_FIELDS, [_row(r) for r in report.results])
    composite = report.composite
    if composite:
        text += (
            f"\nComposite ({composite.registrations} registration + {composite.loads} loads)\n"
            f"  v0 pipeline  {composite.v0_total_us:.0f} us (registration {composite.v0_register_us:.0f} us)\n"
            f"  v1 pipeline  {composite.v1_total_us:.0f} us (registration {composite.v1_register_us:.0f} us)\n"
            f"  improvement  {composite.improvement:.2f}x (expected {config.EXPECTED_V1_IMPROVEMENT})\n"
        )
    return text
