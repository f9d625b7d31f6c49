"""Command line entry point: ``slotcast run | synth | report``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import MODEL_NAMES, load_config
from .exceptions import ConfigError, IoError, SlotcastError
from .market_data import synth_ticks, write_ticks
from .runner import emit_reports, load_bundle, run_experiment

log = logging.getLogger("slotcast")

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


def _models(text):
    names = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in names if m not in MODEL_NAMES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown models {bad}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slotcast", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from an INI config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--seed", type=int, help="experiment seed (overrides the config)")
    run.add_argument("--models", type=_models, help="comma-separated model list (overrides the config)")
    run.add_argument("--case", choices=("I", "II", "III"), help="evaluation case (overrides the config)")

    synth = sub.add_parser("synth", help="write a synthetic tick CSV")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--days", type=int, required=True)
    synth.add_argument("--out", required=True, help="output CSV path")

    report = sub.add_parser("report", help="write summary tables and curves from a saved bundle")
    report.add_argument("--bundle", required=True, help="path to bundle.json")
    report.add_argument("--format", choices=("csv", "json"), default="csv")
    report.add_argument("--out", help="output directory (defaults to the bundle's directory)")
    return parser


def _run(args) -> int:
    config = load_config(args.config)
    changes = {k: v for k, v in (("out", args.out), ("seed", args.seed), ("models", args.models),
                                 ("case", args.case)) if v is not None}
    if args.seed is not None and args.seed < 0:
        raise ConfigError("seed must be non-negative")
    config = config.replace(**changes)
    bundle = run_experiment(config, write=False)
    paths = emit_reports(bundle, config.out, ("csv", "json"))
    for p in paths:
        print(p)
    for err in bundle.errors:
        print(f"model {err['model']} failed: {err['error']}: {err['message']}", file=sys.stderr)
    return EXIT_OK if bundle.ok else EXIT_PARTIAL


def _synth(args) -> int:
    if args.days < 1:
        raise ConfigError("days must be >= 1")
    series = synth_ticks(args.seed, args.days)
    try:
        write_ticks(series, args.out)
    except OSError as exc:
        raise IoError(f"cannot write {args.out}: {exc}") from exc
    print(args.out)
    return EXIT_OK


def _report(args) -> int:
    bundle = load_bundle(args.bundle)
    out = args.out or os.path.dirname(os.path.abspath(args.bundle))
    for p in emit_reports(bundle, out, (args.format,)):
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are configuration errors
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _run, "synth": _synth, "report": _report}
    try:
        return handlers[args.command](args)
    except (SlotcastError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
