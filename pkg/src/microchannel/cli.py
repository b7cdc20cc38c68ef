"""Command line entry point: ``microchannel {analytic,simulate,compare,sweep}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import (
    PRESETS,
    ComparisonReport,
    ScenarioError,
    SweepError,
    load_scenario,
    run_compare,
    write_csv,
)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microchannel",
        description="Impulse response of a cylindrical channel with Poiseuille flow.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, required=True, help="output directory")
    common.add_argument("--preset", choices=sorted(PRESETS), help="use a built-in scenario")
    common.add_argument("--seed", type=int, help="override the random seed")
    common.add_argument("--particles", type=int, help="override the particle count")
    common.add_argument("--dt", type=float, help="override the time step [s]")
    common.add_argument("--t-end", type=float, help="override the horizon [s]")
    common.add_argument("--d0-frac", type=float, help="emitter offset as a fraction of d")
    common.add_argument("--workers", type=int, default=1, help="simulator threads")
    common.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("analytic", "analytic curves only"),
        ("simulate", "Monte Carlo only"),
        ("compare", "analytic and Monte Carlo with error metrics"),
    ):
        cmd = sub.add_parser(name, parents=[common], help=help_text)
        cmd.add_argument("scenario", nargs="?", help="preset name or JSON file")
    cmd = sub.add_parser("sweep", parents=[common], help="run several scenarios")
    cmd.add_argument("scenario", nargs="*", help="preset names or JSON files")
    return parser


def _overrides(args) -> dict:
    out = {}
    for attr, key in (
        ("seed", "seed"),
        ("particles", "n_particles"),
        ("dt", "dt_s"),
        ("t_end", "t_end_s"),
        ("d0_frac", "d0_frac"),
    ):
        value = getattr(args, attr)
        if value is not None:
            out[key] = value
    if args.command == "analytic":
        out["n_particles"] = 0
    return out


def _summary(report: ComparisonReport) -> str:
    def f(v):
        return "n/a" if v is None else f"{v:.4g}"

    return (
        f"{report.name}: Pe={report.derived.pe:.4g} Pc={report.derived.pc:.4g} "
        f"t*={report.t_star:.4g}s sup_norm={f(report.sup_norm)} branch_gap={f(report.branch_gap)}"
    )


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    sources = args.scenario if isinstance(args.scenario, list) else [args.scenario]
    sources = [s for s in sources if s]
    if args.preset:
        sources.append(args.preset)
    if not sources:
        print("error: no scenario given (positional or --preset)", file=sys.stderr)
        return 2
    if args.command != "sweep" and len(sources) > 1:
        print("error: give either a positional scenario or --preset, not both", file=sys.stderr)
        return 2

    overrides = _overrides(args)
    status = 0
    for source in sources:
        try:
            config = load_scenario(source, overrides)
            report = run_compare(
                config, analytic=args.command != "simulate", workers=args.workers
            )
        except (ScenarioError, OSError, ArithmeticError, RuntimeError, ValueError) as exc:
            err = SweepError(str(source), str(exc))
            print(f"error: {err.source}: {err.message}", file=sys.stderr)
            status = 1
            continue
        out_dir = args.out / config.name if args.command == "sweep" else args.out
        write_csv(report, out_dir)
        print(_summary(report))
        for violation in report.threshold_violations():
            print(f"threshold violated in {report.name}: {violation}", file=sys.stderr)
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
