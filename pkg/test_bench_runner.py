"""
Test the benchmark runner and its reports.
"""
import csv
import io

import pytest

from bench_runner import BenchRunner, bench, format_bench_csv, format_bench_text
from catalog import parse_catalog
from errors import ConfigError
from generator import generate_fixture
from hardware import parse_inventory
from loader import LoadCost, Strategy
from registry import SelectionPolicy

ALL_STAGES = [Strategy.STAGE0, Strategy.STAGE1, Strategy.STAGE2, Strategy.STAGE3]


@pytest.fixture
def fixture_inputs():
    catalog_text, inventory_text = generate_fixture(40, 4, seed=3, hw_coverage=0.8)
    return parse_catalog(catalog_text), parse_inventory(inventory_text)


def test_stage0_self_comparison(diamond_catalog, empty_inventory):
    report = bench(diamond_catalog, SelectionPolicy.all_load(), empty_inventory,
                   [Strategy.STAGE0], workers=2, repetitions=3)
    assert [r.strategy for r in report.results] == [Strategy.STAGE0]
    assert report.result("stage0").normalized == 1.0
    assert report.composite is None


def test_baseline_is_always_added(diamond_catalog, empty_inventory):
    report = bench(diamond_catalog, SelectionPolicy.all_load(), empty_inventory,
                   [Strategy.STAGE3, Strategy.STAGE3], workers=3, repetitions=1)
    assert [r.strategy for r in report.results] == [Strategy.STAGE0, Strategy.STAGE3]


def test_instant_mode_all_strategies(fixture_inputs):
    catalog, inventory = fixture_inputs
    report = bench(catalog, SelectionPolicy.all_load(), inventory, ALL_STAGES, workers=4, repetitions=3)
    loaded = {r.loaded for r in report.results}
    assert len(loaded) == 1, f"strategies disagree on loaded count: {loaded}"
    for result in report.results:
        assert result.stable, f"{result.strategy.value} loaded different sets across repetitions"
        assert result.violations == 0
        assert result.duplicate_loads == 0
    assert report.result(Strategy.STAGE0).normalized == 1.0


def test_bench_csv(fixture_inputs):
    catalog, inventory = fixture_inputs
    report = bench(catalog, SelectionPolicy.all_load(), inventory, ALL_STAGES, workers=4, repetitions=1)
    rows = list(csv.DictReader(io.StringIO(format_bench_csv(report))))
    assert [row["strategy"] for row in rows] == ["stage0", "stage1", "stage2", "stage3"]
    assert rows[0]["normalized"] == "1.000"
    assert rows[2]["workers"] == "4"
    assert rows[1]["workers"] == "1"


def test_bench_text_mentions_normalization_and_composite(fixture_inputs):
    catalog, inventory = fixture_inputs
    report = bench(catalog, SelectionPolicy.all_load(), inventory,
                   [Strategy.STAGE0, Strategy.STAGE1], workers=2, repetitions=1)
    text = format_bench_text(report)
    assert "normalized to stage0" in text
    assert "Composite (1 registration + 4 loads)" in text
    assert "~150%" in text


def test_composite_favors_v1_when_queries_cost(make_catalog, empty_inventory):
    """Registration pays for dependency queries once; v0 pays on every load."""
    catalog = make_catalog("a|1||", "b|1|a|", "c|1|b|", "d|1|c|", "e|1|a,d|", "f|1|e|")
    runner = BenchRunner(catalog, SelectionPolicy.all_load(), empty_inventory,
                         LoadCost(dep_query_us=300))
    report = runner.run([Strategy.STAGE0, Strategy.STAGE1], workers=2, repetitions=3)
    assert report.composite.v1_total_us < report.composite.v0_total_us
    assert report.composite.improvement > 1.0


def test_interactive_policy_asked_once(diamond_catalog, empty_inventory):
    asked = []
    policy = SelectionPolicy.interactive(lambda name: asked.append(name) or True)
    bench(diamond_catalog, policy, empty_inventory, ALL_STAGES, workers=2, repetitions=2)
    assert asked == ["a", "b", "c", "d"]


@pytest.mark.parametrize("strategies, workers, repetitions", [
    ([Strategy.STAGE0], 2, 0),
    ([Strategy.STAGE2], 1, 1),
    ([Strategy.STAGE3], 1, 1),
])
def test_bad_bench_config(diamond_catalog, empty_inventory, strategies, workers, repetitions):
    with pytest.raises(ConfigError):
        bench(diamond_catalog, SelectionPolicy.all_load(), empty_inventory,
              strategies, workers=workers, repetitions=repetitions)
