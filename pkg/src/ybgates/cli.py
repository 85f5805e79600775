"""Command-line entry point: ``ybgates {sweep,compare,validate,plot}``.

Exit status is 0 on success, 1 when a validation check or sweep point
fails, and 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError
from .sweep import (
    CONFIG_DIR_ENV,
    ComparisonConfig,
    SweepSpec,
    emit_plotscript,
    format_table,
    load_toml,
    run_comparison,
    run_sweep,
    write_comparison,
)
from .validation import SUITES, run_validation

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
log = logging.getLogger("ybgates")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ybgates",
        description="Fidelity sweeps for rare-earth-ion two-qubit gates.",
        epilog=f"Relative config paths are also looked up in ${CONFIG_DIR_ENV}.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default=".", help="output directory (default: current)")

    p = sub.add_parser("sweep", help="run a parameter sweep from a TOML spec")
    p.add_argument("spec")
    common(p)
    p.add_argument("--workers", type=int, default=1, help="bounded worker pool size")
    p.add_argument("--force", action="store_true", help="recompute even if the CSV is up to date")

    p = sub.add_parser("compare", help="scheme comparison table and cooperativity slice")
    p.add_argument("config", nargs="?", help="TOML file with optional [comparison] and [constants]")
    common(p)

    p = sub.add_parser("validate", help="run a validation suite")
    p.add_argument("suite", choices=(*SUITES, "all"))
    p.add_argument("--out", default=None, help="also write the JSON report here")

    p = sub.add_parser("plot", help="write a matplotlib script for a CSV")
    p.add_argument("csv")
    p.add_argument("--kind", choices=("line", "heatmap"), required=True)
    p.add_argument("--out", default=None, help="script path (default: next to the CSV)")
    return parser


def _cmd_sweep(args) -> int:
    spec = SweepSpec.from_file(args.spec)
    result = run_sweep(spec, args.out, workers=args.workers, force=args.force)
    state = "up to date" if result.skipped else "written"
    print(
        f"{result.path}: {result.rows} points {state}, {result.failures} failed, "
        f"{result.out_of_range} outside [0, 1]"
    )
    return EXIT_FAILED if result.failures else EXIT_OK


def _cmd_compare(args) -> int:
    data = load_toml(args.config) if args.config else {}
    cfg = ComparisonConfig.from_dict(data)
    result = run_comparison(cfg)
    paths = write_comparison(result, args.out, cfg)
    print(format_table(result["table"]))
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    checks = run_validation(args.suite)
    report = {"suite": args.suite, "passed": all(c.passed for c in checks), "checks": [c.as_dict() for c in checks]}
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK if report["passed"] else EXIT_FAILED


def _cmd_plot(args) -> int:
    script = emit_plotscript(args.csv, args.kind)
    target = Path(args.out) if args.out else Path(args.csv).with_suffix(f".{args.kind}.py")
    target.write_text(script)
    print(f"wrote {target}")
    return EXIT_OK


COMMANDS = {"sweep": _cmd_sweep, "compare": _cmd_compare, "validate": _cmd_validate, "plot": _cmd_plot}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
