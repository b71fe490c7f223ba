"""Command-line entry point.

One subcommand per scenario kind plus ``sweep`` for batches:

    burgers-control stabilize --out results/ --n-cells 256
    burgers-control simulate --config scenario.json --out results/
    burgers-control sweep --config batch.json --out results/ --parallelism 4

Exit codes: 0 success, 1 solver failure, 2 invariant violation or bad config
(the report is still written when a run got far enough to produce one).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import parse_config, run_with_exit_code, sweep

_SUBCOMMANDS = (
    "simulate",
    "stabilize",
    "dichotomy",
    "harnack",
    "barrier",
    "noncontrol",
    "sweep",
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="burgers-control",
        description="Simulation and verification runs for viscous flow "
                    "stabilisation by localised control.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON scenario config (a list for sweep)")
        p.add_argument("--out", type=Path, required=True,
                       help="output directory")
        if name == "sweep":
            p.add_argument("--parallelism", type=int, default=1)
            continue
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n-cells", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
    return parser


def _single_run(args: argparse.Namespace) -> int:
    raw: dict = {}
    if args.config is not None:
        try:
            raw = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
        if not isinstance(raw, dict):
            print("error: config for a single run must be a JSON object",
                  file=sys.stderr)
            return 2
    raw["kind"] = args.command
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.n_cells is not None:
        raw["n_cells"] = args.n_cells
    if args.dt is not None:
        raw["dt"] = args.dt
    try:
        config = parse_config(json.dumps(raw))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report, code = run_with_exit_code(config, args.out)
    status = "PASS" if report.verdict else "FAIL"
    detail = f" ({report.error})" if report.error else ""
    print(f"{config.kind}: {status}{detail}  [report: {args.out}/report.json]")
    return code


def _sweep_run(args: argparse.Namespace) -> int:
    if args.config is None:
        print("error: sweep requires --config with a JSON list", file=sys.stderr)
        return 2
    try:
        raw = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    if not isinstance(raw, list):
        print("error: sweep config must be a JSON list", file=sys.stderr)
        return 2
    configs = []
    for i, entry in enumerate(raw):
        try:
            configs.append(parse_config(json.dumps(entry)))
        except ValueError as exc:
            print(f"error: config {i}: {exc}", file=sys.stderr)
            return 2
    code = sweep(configs, args.out, parallelism=args.parallelism)
    print(f"sweep: {len(configs)} runs, worst exit code {code}  "
          f"[report: {args.out}/report.json]")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "sweep":
        return _sweep_run(args)
    return _single_run(args)


if __name__ == "__main__":
    sys.exit(main())
