"""
Test the bench history database.
"""
import pytest

from bench_runner import bench
from database import Database
from loader import Strategy
from registry import SelectionPolicy


@pytest.fixture
def db(tmp_path):
    return Database(str(tmp_path / "history.db"))


@pytest.fixture
def report(diamond_catalog, empty_inventory):
    return bench(diamond_catalog, SelectionPolicy.all_load(), empty_inventory,
                 [Strategy.STAGE0, Strategy.STAGE1, Strategy.STAGE3], workers=3, repetitions=1)


def test_save_and_get(db, report):
    run_id = db.save_bench_report(report, modules=4, label="diamond")
    run = db.get_bench_run(run_id)
    assert run["label"] == "diamond"
    assert run["modules"] == 4
    assert run["workers"] == 3
    assert run["load_cost"] == {"base_us": 0.0, "per_kb_us": 0.0, "dep_query_us": 0.0}
    assert set(run["composite"]) == {"v0_total_us", "v1_total_us"}


def test_strategy_rows_keep_order(db, report):
    run_id = db.save_bench_report(report, modules=4)
    rows = db.get_strategy_results(run_id)
    assert [row["strategy"] for row in rows] == ["stage0", "stage1", "stage3"]
    assert rows[0]["normalized"] == 1.0
    assert all(row["loads"] == 4 for row in rows)


def test_list_newest_first(db, report):
    first = db.save_bench_report(report, modules=4, label="one")
    second = db.save_bench_report(report, modules=4, label="two")
    assert [run["id"] for run in db.list_bench_runs()] == [second, first]
    assert len(db.list_bench_runs(limit=1)) == 1


def test_missing_run(db):
    assert db.get_bench_run(999) is None
    assert db.get_strategy_results(999) == []
