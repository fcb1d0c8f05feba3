"""Command line entry point: ``coalesce {exact,simulate,compare} ...``."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from coalesce.harness.commands import (
    COMPARE_QUANTITIES,
    EXACT_QUANTITIES,
    MODELS,
    Params,
    UsageError,
    run_compare,
    run_exact,
    run_simulate,
)
from coalesce.harness.measure_file import MeasureFileError, load_measure
from coalesce.rates import LambdaMeasure

__all__ = ["build_parser", "main"]

SEED_ENV = "COALESCE_SEED"

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 42
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _common(p: argparse.ArgumentParser, simulated: bool):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--alpha", type=float, help="Beta(2-alpha, alpha) measure, alpha in (0, 2)")
    src.add_argument("--measure-file", type=Path, help="generic measure, see coalesce.harness.measure_file")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    p.add_argument("--plot-data", type=Path, help="also write x, exact, empirical, band columns here")
    for name, kind in [
        ("n", int), ("levels", int), ("jmax", int), ("imax", int), ("kmax", int),
        ("i", int), ("j", int), ("start", int), ("s", float), ("t", float), ("horizon", float),
    ]:
        p.add_argument(f"--{name}", type=kind)
    if simulated:
        p.add_argument("--seed", type=int, help=f"default: ${SEED_ENV} or 42")
        p.add_argument("--replicas", type=int, default=100_000)
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--z-threshold", type=float, default=4.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coalesce", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ex = sub.add_parser("exact", help="tables of exact values")
    ex.add_argument("--quantity", required=True, choices=sorted(EXACT_QUANTITIES))
    _common(ex, simulated=False)

    sim = sub.add_parser("simulate", help="Monte Carlo summaries")
    sim.add_argument("--model", required=True, choices=sorted(MODELS))
    sim.add_argument("--method", choices=("exact", "chain"), help="bs-branching sampler")
    sim.add_argument("--cap", type=int, help="population cap for the bs-branching chain (default 1e9)")
    sim.add_argument("--samples", type=Path, help="per-replica CSV stream")
    _common(sim, simulated=True)

    cmp_ = sub.add_parser("compare", help="exact vs simulated, with a verdict")
    cmp_.add_argument("--quantity", required=True, choices=sorted(COMPARE_QUANTITIES))
    _common(cmp_, simulated=True)
    return parser


def _measure(args) -> LambdaMeasure:
    if args.measure_file is not None:
        try:
            return load_measure(args.measure_file)
        except OSError as e:
            raise UsageError(f"cannot read measure file: {e}") from None
    alpha = 1.0 if args.alpha is None else args.alpha
    try:
        return LambdaMeasure.beta(alpha)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _params(args) -> Params:
    simulated = args.command != "exact"
    p = Params(
        measure=_measure(args),
        seed=(args.seed if args.seed is not None else _default_seed()) if simulated else 42,
        replicas=args.replicas if simulated else 1,
        threads=args.threads if simulated else 1,
        **{k: getattr(args, k) for k in ("n", "levels", "jmax", "imax", "kmax", "i", "j", "start", "s", "t", "horizon")},
        method=getattr(args, "method", None),
        cap=getattr(args, "cap", None),
        z_threshold=args.z_threshold if simulated else 4.0,
    )
    if simulated:
        if p.replicas < 1:
            raise UsageError("--replicas must be >= 1")
        if not 0 <= p.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if p.threads < 1:
            raise UsageError("--threads must be >= 1")
    return p


def _write(path: Path | None, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _sink(path: Path):
    def write(header, rows):
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["replica", *header])
            for r, values in enumerate(rows):
                w.writerow([r, *("%.17g" % v if isinstance(v, float) else int(v) for v in values)])

    return write


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        p = _params(args)
        if args.command == "exact":
            report = run_exact(args.quantity, p)
        elif args.command == "simulate":
            sink = _sink(args.samples) if args.samples else None
            report = run_simulate(args.model, p, sink)
        else:
            report = run_compare(args.quantity, p)
    except (UsageError, MeasureFileError) as e:
        print(f"coalesce: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _write(args.out, report.to_json() + "\n" if args.format == "json" else report.to_csv())
    except BrokenPipeError:
        # reader went away (e.g. piped into head); keep the exit status meaningful
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    if args.plot_data is not None:
        args.plot_data.write_text(report.plot_data())
    return EXIT_PASS if report.verdict else EXIT_FAIL
