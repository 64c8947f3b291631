"""Command line entry point.

Exit codes: 0 on success, 1 when a solve fails to converge or the operator
turns out indefinite, 2 for configuration, usage or file problems.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig
from .linalg import ConvergenceError, IndefiniteOperatorError


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", default=None,
                        help="INI config file (defaults are built in)")
    parser.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override one config value (repeatable)")
    parser.add_argument("--out", metavar="DIR", default=".",
                        help="output directory (default: current directory)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastoflow",
        description="Displacement estimation for elastography image pairs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic compression phantom")
    _add_common(p)

    p = sub.add_parser("track", help="detect and track speckle bubbles across a pair")
    _add_common(p)
    p.add_argument("frame0")
    p.add_argument("frame1")
    p.add_argument("--bubbles", default=None, metavar="CSV",
                   help="bubble table to track (default: detect on frame 0)")

    p = sub.add_parser("background", help="solve the linear-elastic background field")
    _add_common(p)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)

    for name, help_text in (("flow", "single-scale displacement estimate"),
                            ("eofm", "full coarse-to-fine displacement estimate")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.add_argument("frame0")
        p.add_argument("frame1")
        p.add_argument("--bubbles", default=None, metavar="CSV",
                       help="tracked bubble table (default: detect and track here)")
        p.add_argument("--background", default="none" if name == "flow" else "auto",
                       metavar="FLD|auto|none",
                       help="background field file, 'auto' to solve it from the "
                            "config, or 'none' (default: %(default)s)")

    p = sub.add_parser("eval", help="compare an estimated field against ground truth")
    _add_common(p)
    p.add_argument("estimate")
    p.add_argument("truth")

    p = sub.add_parser("ablation", help="run the full synthetic study")
    _add_common(p)

    return parser


def _dispatch(args: argparse.Namespace, cfg: ExperimentConfig) -> None:
    # imported lazily so --help stays fast and matplotlib is only pulled in on use
    from . import experiment

    if args.command == "simulate":
        result = experiment.run_simulate(cfg, args.out)
        print(f"wrote frame0.png frame1.png truth.fld bubbles.csv to {args.out} "
              f"({len(result.bubbles)} bubbles)")
    elif args.command == "track":
        tracked = experiment.run_track(cfg, args.out, args.frame0, args.frame1, args.bubbles)
        print(f"tracked {len(tracked)} bubbles -> {args.out}/tracked.csv")
    elif args.command == "background":
        bg = experiment.run_background(cfg, args.out, args.width, args.height)
        print(f"solved background on {bg.geometry.width}x{bg.geometry.height} "
              f"-> {args.out}/background.fld")
    elif args.command == "flow":
        experiment.run_flow(cfg, args.out, args.frame0, args.frame1,
                            args.bubbles, args.background)
        print(f"wrote estimate.fld estimate.png to {args.out}")
    elif args.command == "eofm":
        experiment.run_eofm(cfg, args.out, args.frame0, args.frame1,
                            args.bubbles, args.background)
        print(f"wrote estimate.fld estimate.png to {args.out}")
    elif args.command == "eval":
        report = experiment.run_eval(cfg, args.out, args.estimate, args.truth)
        print(report.to_text(), end="")
    elif args.command == "ablation":
        results = experiment.run_ablation(cfg, args.out)
        for test, report in results:
            print(f"{test.name}  {test.label:<32s}  e_rel(u) = {report.e_rel_u:6.2f} %")
        print(f"wrote ablation.csv ablation.md ablation.png to {args.out}")
    else:  # pragma: no cover - argparse enforces the choices
        raise AssertionError(args.command)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config, tuple(args.overrides))
        _dispatch(args, cfg)
    except (ConvergenceError, IndefiniteOperatorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
