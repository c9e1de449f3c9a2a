"""
Database module for keeping benchmark history.
"""
import json
import sqlite3
from contextlib import contextmanager
from typing import Dict, List, Optional

from bench_runner import BenchReport


class Database:
    """SQLite store for bench runs and their per-strategy results."""

    def __init__(self, db_path: str = "modattach.db"):
        self.db_path = db_path
        self.init_database()

    @contextmanager
    def get_connection(self):
        """Context manager for database connections."""
        conn = sqlite3.connect(self.db_path)
        conn.row_factory = sqlite3.Row
        try:
            yield conn
            conn.commit()
        except Exception:
            conn.rollback()
            raise
        finally:
            conn.close()

    def init_database(self):
        """Initialize database tables."""
        with self.get_connection() as conn:
            cursor = conn.cursor()

            cursor.execute("""
                CREATE TABLE IF NOT EXISTS bench_runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    label TEXT,
                    modules INTEGER NOT NULL,
                    workers INTEGER NOT NULL,
                    repetitions INTEGER NOT NULL,
                    load_cost TEXT,  -- JSON string
                    composite TEXT,  -- JSON string, NULL without stage1
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            """)

            cursor.execute("""
                CREATE TABLE IF NOT EXISTS strategy_results (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id INTEGER NOT NULL,
                    strategy TEXT NOT NULL,  -- stage0 .. stage3
                    workers INTEGER NOT NULL,
                    median_wall_us REAL NOT NULL,
                    normalized REAL NOT NULL,
                    loads INTEGER NOT NULL,
                    dup_attempts INTEGER NOT NULL,
                    violations INTEGER NOT NULL,
                    stable BOOLEAN NOT NULL,
                    FOREIGN KEY (run_id) REFERENCES bench_runs(id)
                )
            """)

    def save_bench_report(self, report: BenchReport, modules: int, label: str = "") -> int:
        """Store a report; returns the new run id."""
        cost = report.load_cost
        composite = report.composite
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute(
                """INSERT INTO bench_runs (label, modules, workers, repetitions, load_cost, composite)
                   VALUES (?, ?, ?, ?, ?, ?)""",
                (label, modules, report.workers, report.repetitions,
                 json.dumps({"base_us": cost.base_us, "per_kb_us": cost.per_kb_us,
                             "dep_query_us": cost.dep_query_us}),
                 json.dumps({"v0_total_us": composite.v0_total_us,
                             "v1_total_us": composite.v1_total_us}) if composite else None)
            )
            run_id = cursor.lastrowid
            for result in report.results:
                cursor.execute(
                    """INSERT INTO strategy_results (run_id, strategy, workers, median_wall_us,
                       normalized, loads, dup_attempts, violations, stable)
                       VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)""",
                    (run_id, result.strategy.value, result.workers, result.median_wall_us,
                     result.normalized, result.loaded, result.dup_attempts,
                     result.violations, result.stable)
                )
            return run_id

    def get_bench_run(self, run_id: int) -> Optional[Dict]:
        """Get a bench run by ID."""
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("SELECT * FROM bench_runs WHERE id = ?", (run_id,))
            row = cursor.fetchone()
            return self._decode_run(row) if row else None

    def list_bench_runs(self, limit: int = 20) -> List[Dict]:
        """List the most recent bench runs, newest first."""
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("SELECT * FROM bench_runs ORDER BY id DESC LIMIT ?", (limit,))
            return [self._decode_run(row) for row in cursor.fetchall()]

    def get_strategy_results(self, run_id: int) -> List[Dict]:
        """Get the per-strategy rows of a run in the order they were benchmarked."""
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute(
                "SELECT * FROM strategy_results WHERE run_id = ? ORDER BY id ASC",
                (run_id,)
            )
            return [dict(row) for row in cursor.fetchall()]

    @staticmethod
    def _decode_run(row: sqlite3.Row) -> Dict:
        run = dict(row)
        for key in ("load_cost", "composite"):
            if run[key]:
                run[key] = json.loads(run[key])
        return run
