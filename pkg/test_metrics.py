"""
Test session timing and space accounting.
"""
import csv
import io
import random

from loader import LoadState, load_stage0, load_stage3, parse_trace
from metrics import (
    format_session_csv,
    format_session_text,
    format_table,
    space_report,
    timing_from_trace,
)
from registry import IndexFile


def test_timing_two_loads():
    timing = timing_from_trace(parse_trace("100 0 LOAD a\n300 0 LOAD b\n"))
    assert (timing.first_load_us, timing.last_load_us, timing.wall_us, timing.loads) == (100, 300, 200, 2)


def test_timing_without_loads():
    timing = timing_from_trace(parse_trace("5 0 SKIP_HW a\n"))
    assert timing.loads == 0
    assert timing.skips_hw == 1
    assert timing.wall_us == 0


def test_timing_counts_every_kind():
    trace = parse_trace(
        "10 0 LOAD a\n11 1 DUP_ATTEMPT a\n12 0 SKIP_FLAG b\n13 0 SKIP_BASE k\n40 1 LOAD c\n")
    timing = timing_from_trace(trace)
    assert timing.dup_attempts == 1
    assert timing.skips_flag == 1
    assert timing.skips_base == 1
    assert timing.wall_us == 30


def test_timing_ignores_order_of_other_events():
    events = parse_trace("10 0 LOAD a\n20 0 SKIP_HW b\n25 1 DUP_ATTEMPT a\n30 0 SKIP_FLAG c\n50 0 LOAD d\n")
    expected = timing_from_trace(events)
    rng = random.Random(3)
    for _ in range(10):
        shuffled = list(events)
        rng.shuffle(shuffled)
        assert timing_from_trace(shuffled) == expected


def test_space_inet6_sized_module(make_catalog):
    catalog = make_catalog("kern|4000||@base", "net|500|kern|", "inet6|2112|net|")
    state = LoadState.from_trace(catalog, parse_trace("1 0 LOAD net\n"))
    report = space_report(catalog, state)
    assert report.saved_kb == 2112
    assert report.unloaded == (("inet6", 2112),)


def test_space_architecture_bundle(make_catalog):
    catalog = make_catalog("kern|9000||@base", "arch_a|1200|kern|", "arch_b|1131|arch_a|", "core|300||")
    state = LoadState.from_trace(catalog, parse_trace("1 0 LOAD core\n"))
    report = space_report(catalog, state)
    assert report.saved_kb == 2331
    assert report.base_only_kb == 9000
    assert [name for name, _ in report.unloaded] == ["arch_a", "arch_b"]


def test_space_everything_loaded(chain_catalog):
    state = LoadState.from_trace(chain_catalog, parse_trace("1 0 LOAD a\n2 0 LOAD b\n3 0 LOAD c\n"))
    report = space_report(chain_catalog, state)
    assert report.saved_kb == 0
    assert report.loaded_kb == report.total_kb == 60


def test_space_conservation_over_sessions(diamond_catalog, empty_inventory, instant):
    for flags in ([0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [1, 1, 1, 1]):
        index = IndexFile("v0", tuple(zip(diamond_catalog.names(), flags)))
        for state, _ in (load_stage0(diamond_catalog, index, empty_inventory, instant()),
                         load_stage3(diamond_catalog, index, empty_inventory, instant("stage3", 3))):
            report = space_report(diamond_catalog, state)
            assert report.total_kb == report.loaded_kb + report.saved_kb + report.base_only_kb


def test_session_csv(chain_catalog):
    trace = parse_trace("100 0 LOAD a\n300 0 LOAD b\n")
    state = LoadState.from_trace(chain_catalog, trace)
    rows = list(csv.DictReader(io.StringIO(format_session_csv(timing_from_trace(trace),
                                                             space_report(chain_catalog, state)))))
    assert len(rows) == 1
    assert rows[0]["wall_us"] == "200"
    assert rows[0]["saved_kb"] == "30"


def test_session_text_lists_largest_unloaded(make_catalog):
    catalog = make_catalog("a|10||", "b|30||", "c|20||")
    state = LoadState(catalog)
    text = format_session_text(timing_from_trace([]), space_report(catalog, state), top=2)
    assert "saved_kb       60 KB" in text
    largest = [line.split()[0] for line in text.split("Largest")[1].splitlines()[1:]]
    assert largest == ["b", "c"]


def test_format_table_alignment():
    table = format_table(["name", "kb"], [["inet6", 2112], ["x", 1]])
    assert table.splitlines() == ["name   kb", "inet6  2112", "x      1"]
