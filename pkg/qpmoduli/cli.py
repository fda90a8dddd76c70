from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from qpmoduli.config import ALL_CHECKS, get_settings
from qpmoduli.services.suite import ConfigError, describe, dump_report, load_config, prepare, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def resolve_config_path(raw: str) -> Path:
    path = Path(raw)
    if path.exists():
        return path
    bundled = get_settings().config_dir / (raw if raw.endswith(".json") else f"{raw}.json")
    return bundled if bundled.exists() else path


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="qpmoduli", description="Exact checks on quasi-Poisson moduli spaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("validate", "Parse a suite config and resolve its references."),
        ("run", "Run the checks of a suite config and print the JSON report."),
        ("describe", "Print the surface analysis and the bivector terms."),
    ):
        command = sub.add_parser(name, help=help_text)
        command.add_argument("config", help="Config file, or the name of a bundled config")
        command.add_argument("--seed", type=int, default=None, help="Override the point seed")
        command.add_argument("--points", type=int, default=None, help="Points per check")
        command.add_argument("--out", type=Path, default=None, help="Write the JSON output here instead of stdout")
        command.add_argument("--check", action="append", choices=ALL_CHECKS, default=None, help="Restrict to a check")
        command.add_argument("--timing", action="store_true", help="Include elapsed time in the report")
    return parser.parse_args(argv)


def emit(text: str, out: Path | None) -> None:
    if out is None:
        print(text)
    else:
        out.write_text(text + "\n", encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=get_settings().log_level.upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(resolve_config_path(args.config))
        suite = prepare(config, seed=args.seed, points=args.points, checks=args.check)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        emit(json.dumps({"config": config.name, "valid": True, "checks": sorted(suite.config.checks)}), args.out)
        return EXIT_OK
    if args.command == "describe":
        emit(json.dumps(describe(suite), sort_keys=True, indent=2), args.out)
        return EXIT_OK

    try:
        report = run_suite(suite, timing=args.timing)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    emit(dump_report(report), args.out)
    return EXIT_OK if report.ok else EXIT_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
