#!/usr/bin/env python3
"""
modattach - dynamic kernel module attachment simulator.
Generates fixtures, registers index files, loads modules with four
strategies and benchmarks them against each other.
"""
import argparse
import logging
import sys
from typing import List, Optional

import config
from bench_runner import bench, format_bench_csv, format_bench_text
from catalog import ModuleCatalog, catalog_from_proc_modules, parse_catalogs
from database import Database
from errors import ConfigError, ModAttachError
from generator import generate_fixture
from hardware import HardwareInventory, inventory_from_tool_output, parse_inventory
from loader import (
    LoadCost,
    LoadSession,
    LoadState,
    Strategy,
    StrategyConfig,
    dependency_violations,
    duplicate_loads,
    parse_trace,
    write_trace,
)
from metrics import (
    format_session_csv,
    format_session_text,
    format_table,
    space_report,
    timing_from_trace,
)
from registry import (
    V0,
    V1,
    SelectionPolicy,
    parse_selection,
    read_index,
    register_v0,
    register_v1,
    write_index,
)

logger = logging.getLogger("modattach")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    """Argument parser whose failures follow the ``error: <code>: <detail>`` convention."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"error: usage: {message}\n")


def _error(code: str, detail: str):
    print(f"error: {code}: {detail}", file=sys.stderr)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _load_catalog(paths: List[str]) -> ModuleCatalog:
    if len(paths) > 2:
        raise ConfigError("--catalog may be given at most twice")
    return parse_catalogs([_read(p) for p in paths])


def _load_cost(args) -> LoadCost:
    cost = LoadCost(args.load_base_us, args.load_per_kb_us, args.dep_query_us)
    if min(cost.base_us, cost.per_kb_us, cost.dep_query_us) < 0:
        raise ConfigError("load costs must not be negative")
    return cost


def _prompt(name: str) -> bool:
    """Ask whether to load one module; reads answers from standard input."""
    while True:
        try:
            answer = input(f"Load module {name}? [y/n] ").strip().lower()
        except EOFError:
            logger.warning("Input ended at '%s'; treating remaining modules as 'no'", name)
            return False
        if answer in ("y", "yes"):
            return True
        if answer in ("n", "no", ""):
            return False
        print("Please answer y or n.")


def _policy(args) -> SelectionPolicy:
    if getattr(args, "interactive", False):
        return SelectionPolicy.interactive(_prompt)
    if getattr(args, "assume_yes", False):
        return SelectionPolicy.all_load()

    spec = args.policy
    if spec == "all-load":
        return SelectionPolicy.all_load()
    if spec == "all-skip":
        return SelectionPolicy.all_skip()
    if spec == "interactive":
        return SelectionPolicy.interactive(_prompt)
    if spec.startswith("file:") and len(spec) > len("file:"):
        return SelectionPolicy.from_file(parse_selection(_read(spec[len("file:"):])))
    raise ConfigError(f"unknown policy '{spec}' (all-load, all-skip, interactive, file:PATH)")


def _strategies(text: str) -> List[Strategy]:
    try:
        return [Strategy(s.strip()) for s in text.split(",") if s.strip()]
    except ValueError as e:
        raise ConfigError(str(e))


def cmd_gen(args) -> int:
    """Generate a catalog and inventory fixture."""
    catalog_text, inventory_text = generate_fixture(
        args.modules, args.max_depth, args.seed, args.hw_coverage)
    _write(args.catalog_out, catalog_text)
    _write(args.inventory_out, inventory_text)
    print(f"✅ Generated {args.modules} modules (seed {args.seed}) -> "
          f"{args.catalog_out}, {args.inventory_out}")
    return EXIT_OK


def cmd_register(args) -> int:
    """Write a v0 or v1 index file for a selection."""
    if args.version == V1 and not args.inventory:
        raise ConfigError("--version v1 needs --inventory")
    catalog = _load_catalog(args.catalog)
    policy = _policy(args)

    if args.version == V0:
        index = register_v0(catalog, policy)
    else:
        index = register_v1(catalog, policy, parse_inventory(_read(args.inventory)))

    _write(args.index, write_index(index))
    if args.index:
        print(f"✅ Wrote {index.version} index: {len(index.selected())} of "
              f"{len(index.entries)} modules -> {args.index}")
    return EXIT_OK


def cmd_load(args) -> int:
    """Run one loading session and optionally write its trace."""
    strategy = Strategy(args.strategy)
    strategy_config = StrategyConfig(strategy, args.workers, _load_cost(args))
    strategy_config.validate()
    if not args.inventory and strategy is not Strategy.STAGE1:
        raise ConfigError(f"{strategy.value} checks hardware and needs --inventory")

    catalog = _load_catalog(args.catalog)
    index = read_index(_read(args.index), catalog)
    inventory = parse_inventory(_read(args.inventory)) if args.inventory else HardwareInventory()

    session = LoadSession(catalog, index, inventory, strategy_config)
    try:
        state, trace = session.run()
    finally:
        if args.trace:
            _write(args.trace, write_trace(session.trace.events()))

    timing = timing_from_trace(trace)
    print(f"✅ {strategy.value}: {timing.loads} loaded, {timing.skips_hw} hw skips, "
          f"{timing.skips_flag} unflagged, {timing.dup_attempts} duplicate attempts, "
          f"wall {timing.wall_us} us")

    violations = dependency_violations(catalog, trace)
    duplicates = duplicate_loads(trace)
    if violations or duplicates:
        _error("verification", f"{len(violations)} dependency violations, "
                               f"{len(duplicates)} modules loaded twice")
        return EXIT_ERROR
    return EXIT_OK


def cmd_bench(args) -> int:
    """Benchmark strategies on identical inputs."""
    catalog = _load_catalog(args.catalog)
    policy = _policy(args)
    inventory = parse_inventory(_read(args.inventory))
    report = bench(catalog, policy, inventory, _strategies(args.strategies),
                   args.workers, args.reps, _load_cost(args))

    text = format_bench_csv(report) if args.format == "csv" else format_bench_text(report)
    _write(args.out, text)

    if args.db:
        run_id = Database(args.db).save_bench_report(report, len(catalog), label=",".join(args.catalog))
        logger.info("Saved bench run %d to %s", run_id, args.db)

    broken = sum(r.violations + r.duplicate_loads for r in report.results)
    if broken:
        _error("verification", f"{broken} ordering or exactly-once violations across strategies")
        return EXIT_ERROR
    return EXIT_OK


def cmd_report(args) -> int:
    """Summarize a recorded trace against its catalog."""
    catalog = _load_catalog(args.catalog)
    trace = parse_trace(_read(args.trace))
    state = LoadState.from_trace(catalog, trace)
    timing = timing_from_trace(trace)
    space = space_report(catalog, state)
    if args.format == "csv":
        _write(None, format_session_csv(timing, space))
    else:
        _write(None, format_session_text(timing, space))
    return EXIT_OK


def cmd_history(args) -> int:
    """List stored bench runs."""
    db = Database(args.db)
    runs = db.list_bench_runs(args.limit)
    if not runs:
        print("No bench runs found. Record one with: modattach.py bench --db PATH ...")
        return EXIT_OK

    print("\n📊 Bench runs:")
    print("-" * 80)
    for run in runs:
        print(f"ID: {run['id']:3d} | {run['label'] or '-':30s} | {run['modules']} modules | "
              f"workers {run['workers']} | {run['created_at']}")
        rows = [[r["strategy"], r["workers"], f"{r['median_wall_us']:.0f}",
                 f"{r['normalized']:.3f}", r["loads"], r["dup_attempts"]]
                for r in db.get_strategy_results(run["id"])]
        table = format_table(["strategy", "workers", "median_wall_us", "normalized",
                              "loads", "dup_attempts"], rows)
        print("".join("      " + line + "\n" for line in table.splitlines()), end="")
    print("-" * 80)
    return EXIT_OK


def cmd_ingest(args) -> int:
    """Convert /proc/modules and device listings into fixture files."""
    if not args.proc_modules and not args.devices:
        raise ConfigError("ingest needs --proc-modules and/or --devices")
    if args.proc_modules:
        catalog = catalog_from_proc_modules(_read(args.proc_modules))
        _write(args.catalog_out, catalog.serialize())
        print(f"✅ Ingested {len(catalog)} modules -> {args.catalog_out or 'stdout'}")
    if args.devices:
        inventory = inventory_from_tool_output(_read(args.devices).splitlines())
        _write(args.inventory_out, inventory.serialize())
        print(f"✅ Ingested {len(inventory)} devices -> {args.inventory_out or 'stdout'}")
    return EXIT_OK


def _add_cost_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--load-base-us", type=float, default=config.LOAD_BASE_US,
                        help="Fixed simulated cost per module load")
    parser.add_argument("--load-per-kb-us", type=float, default=config.LOAD_PER_KB_US,
                        help="Simulated cost per KB of module size")
    parser.add_argument("--dep-query-us", type=float, default=config.DEP_QUERY_US,
                        help="Simulated cost of one dependency lookup")


def _add_policy_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--policy", default="all-load",
                        help="all-load, all-skip, interactive or file:PATH")
    parser.add_argument("--interactive", action="store_true",
                        help="Ask y/n for every module in catalog order")
    parser.add_argument("--assume-yes", action="store_true", help="Same as --policy all-load")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="modattach.py",
        description="modattach - dynamic kernel module attachment simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Generate a fixture
  python modattach.py gen --modules 200 --max-depth 4 --seed 3 --hw-coverage 0.8 \\
      --catalog mods.cat --inventory hw.inv

  # Register and load
  python modattach.py register --catalog mods.cat --policy all-load --version v0 --index idx0
  python modattach.py load --catalog mods.cat --index idx0 --inventory hw.inv \\
      --strategy stage3 --workers 8 --trace run.trace

  # Report and benchmark
  python modattach.py report --catalog mods.cat --trace run.trace
  python modattach.py bench --catalog mods.cat --inventory hw.inv --workers 8 --format csv
        """
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="Log progress (-v) or every event (-vv) to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("gen", help="Generate catalog and inventory fixtures")
    p.add_argument("--modules", type=int, required=True)
    p.add_argument("--max-depth", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hw-coverage", type=float, default=1.0)
    p.add_argument("--catalog", dest="catalog_out", required=True, help="Catalog output path")
    p.add_argument("--inventory", dest="inventory_out", required=True, help="Inventory output path")
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser("register", help="Write an index file")
    p.add_argument("--catalog", action="append", required=True)
    _add_policy_flags(p)
    p.add_argument("--version", choices=[V0, V1], default=V0)
    p.add_argument("--inventory", help="Inventory file (required for v1)")
    p.add_argument("--index", help="Index output path (stdout if omitted)")
    p.set_defaults(handler=cmd_register)

    p = sub.add_parser("load", help="Run one loading session")
    p.add_argument("--catalog", action="append", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--inventory")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default=config.DEFAULT_STRATEGY)
    p.add_argument("--workers", type=int, default=config.DEFAULT_WORKERS)
    p.add_argument("--trace", help="Trace output path")
    _add_cost_flags(p)
    p.set_defaults(handler=cmd_load)

    p = sub.add_parser("bench", help="Compare strategies")
    p.add_argument("--catalog", action="append", required=True)
    _add_policy_flags(p)
    p.add_argument("--inventory", required=True)
    p.add_argument("--strategies", default=",".join(config.DEFAULT_BENCH_STRATEGIES))
    p.add_argument("--workers", type=int, default=config.DEFAULT_WORKERS)
    p.add_argument("--reps", type=int, default=config.DEFAULT_REPETITIONS)
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.add_argument("--out", help="Report output path (stdout if omitted)")
    p.add_argument("--db", default=config.DATABASE_PATH, help="SQLite file to record the run in")
    _add_cost_flags(p)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("report", help="Timing and space report for a trace")
    p.add_argument("--catalog", action="append", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("history", help="List recorded bench runs")
    p.add_argument("--db", required=True)
    p.add_argument("--limit", type=int, default=20)
    p.set_defaults(handler=cmd_history)

    p = sub.add_parser("ingest", help="Convert /proc/modules and device listings")
    p.add_argument("--proc-modules", help="/proc/modules snapshot")
    p.add_argument("--devices", help="Hardware tool output, one device per line")
    p.add_argument("--catalog", dest="catalog_out", help="Catalog output path")
    p.add_argument("--inventory", dest="inventory_out", help="Inventory output path")
    p.set_defaults(handler=cmd_ingest)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format=config.LOG_FORMAT, stream=sys.stderr)

    try:
        return args.handler(args)
    except ConfigError as e:
        _error(e.code, e.detail)
        return EXIT_USAGE
    except ModAttachError as e:
        _error(e.code, e.detail)
        return EXIT_ERROR
    except OSError as e:
        _error("io", f"{e.filename or ''}: {e.strerror or e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
