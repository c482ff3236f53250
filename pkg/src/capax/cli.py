"""Command line front end: seeded, reproducible capacity experiments."""

from __future__ import annotations

import argparse
import sys

from .experiments import COMMANDS, ExperimentConfig, run_command


def _parse_box(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 2 or parts[0] >= parts[1]:
        raise argparse.ArgumentTypeError("box must be 'lo,hi' with lo < hi")
    return tuple(parts)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="capax",
        description="conformal capacity and path modulus experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        doc = (fn.__doc__ or "").strip().splitlines()[0]
        cp = sub.add_parser(name, help=doc, description=doc)
        cp.add_argument("--box", type=_parse_box, default=(-3.0, 3.0),
                        metavar="a,b", help="solver box [a,b]^3 (default -3,3)")
        cp.add_argument("--h", type=float, default=1.0 / 32.0,
                        help="grid spacing (default 1/32)")
        cp.add_argument("--rthick", type=float, default=None,
                        help="curve thickening radius (default: h)")
        cp.add_argument("--p", type=float, default=3.0,
                        help="energy exponent (default 3, the conformal case)")
        cp.add_argument("--tol", type=float, default=1e-4,
                        help="relative energy tolerance (default 1e-4)")
        cp.add_argument("--seed", type=int, default=0,
                        help="experiment seed (default 0)")
        cp.add_argument("--cases", type=int, default=20,
                        help="number of seeded cases (default 20)")
        cp.add_argument("--out", type=str, default=None,
                        help="report path stem; writes .json/.txt (+.csv)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ExperimentConfig(
        command=args.command, box=args.box, h=args.h, r_thick=args.rthick,
        p=args.p, tol=args.tol, seed=args.seed, cases=args.cases, out=args.out)
    report = run_command(config)
    sys.stdout.write(report.to_text())
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
