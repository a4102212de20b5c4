"""Command line: run a scenario, rebuild the capture tables, run the attack suite, check fixtures.

Exit codes: 0 success, 1 a check failed, 2 invalid configuration, 3 file I/O error.
Set SUARP_LOG (DEBUG, INFO, WARNING, ...) for log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .analysis import CostModel, build_tables, cost_table, read_summaries, write_table
from .errors import ConfigError, MissingFixture, SuarpSimError
from .fixtures import DATA_DIR, verify_fixtures
from .matrix import run_attack_matrix
from .scenario import load_scenario

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("suarpsim")


def cmd_run(config_path, out_dir, seed: Optional[int] = None) -> int:
    scenario = load_scenario(config_path, seed)
    scenario.run()
    for path in scenario.write_outputs(out_dir):
        log.info("wrote %s", path)
    m = scenario.metrics()
    print(f"{scenario.name}: {m['ledger'].get('emitted', 0)} frames emitted by t={m['end_time']}")
    for r in scenario.reports:
        print(f"  {r.attack} against {r.stack}: {'SUCCESS' if r.success else 'BLOCKED'} "
              f"({r.successes} successes in {r.attempts} attempts)")
    return EXIT_OK


def cmd_tables(summary_csv, out_dir=None, schedules=None) -> int:
    summaries = read_summaries(summary_csv)
    if not summaries:
        raise ConfigError(f"{summary_csv} holds no session rows")
    report = build_tables(summaries)
    text = report.render(summaries)
    print(text, end="")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table2.csv").write_text(write_table(report.table2), encoding="utf-8")
        (out / "table3.csv").write_text(write_table(report.table3), encoding="utf-8")
        (out / "tables.txt").write_text(text, encoding="utf-8")
        (out / "metrics.json").write_text(json.dumps(report.metrics(), indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")
        path = schedules or DATA_DIR / "cost_schedules.toml"
        for name, counted in (("cost_with_ack.csv", True), ("cost_without_ack.csv", False)):
            (out / name).write_text(cost_table(summaries, CostModel.from_toml(path, counted)), encoding="utf-8")
    return EXIT_OK


def cmd_attack_matrix(out_dir=None, seeds: int = 10, attempts: int = 10_000) -> int:
    result = run_attack_matrix(range(1, seeds + 1), attempts)
    print(result.render(), end="")
    print(f"elapsed {result.elapsed:.1f} s")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "attack_matrix.json").write_text(result.to_json(), encoding="utf-8")
        (out / "attack_matrix.txt").write_text(result.render(), encoding="utf-8")
    return EXIT_OK if result.seed_invariant else EXIT_FAIL


def cmd_verify_fixtures(data_dir=None) -> int:
    report = verify_fixtures(data_dir)
    print(report.render(), end="")
    return EXIT_OK if report.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="suarpsim", description="Secure unicast ARP / DHCP LAN simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("config")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, help="override the scenario's seed")

    tables = sub.add_parser("tables", help="rebuild the capture comparison tables from a summary CSV")
    tables.add_argument("csv", nargs="?", default=str(DATA_DIR / "table1.csv"))
    tables.add_argument("--out", help="output directory")
    tables.add_argument("--schedules", help="cost schedule TOML (defaults to the shipped one)")

    matrix = sub.add_parser("attack-matrix", help="run every attack against every stack")
    matrix.add_argument("--out", help="output directory")
    matrix.add_argument("--seeds", type=int, default=10)
    matrix.add_argument("--attempts", type=int, default=10_000, help="forged attempts per secure cell")

    fx = sub.add_parser("verify-fixtures", help="diff regenerated tables against the shipped ones")
    fx.add_argument("--data-dir")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("SUARP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out, args.seed)
        if args.command == "tables":
            return cmd_tables(args.csv, args.out, args.schedules)
        if args.command == "attack-matrix":
            if args.seeds <= 0 or args.attempts <= 0:
                raise ConfigError("--seeds and --attempts must be positive")
            return cmd_attack_matrix(args.out, args.seeds, args.attempts)
        return cmd_verify_fixtures(args.data_dir)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingFixture as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SuarpSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
