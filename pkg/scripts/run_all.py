"""Run every capax experiment with a shared seed and collect the reports.

Writes reports/<command>.{json,txt} for each of the five commands and exits
nonzero if any report fails.  With default settings this is a long run
(hours at h=1/32); pass --h 0.0625 and --cases 3 for a quick look.

Usage: python3 scripts/run_all.py [--seed 0] [--cases 20] [--h 0.03125]
"""

import argparse
import sys
import time

from capax.experiments import COMMANDS, ExperimentConfig, run_command


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cases", type=int, default=20)
    ap.add_argument("--h", type=float, default=1.0 / 32.0)
    ap.add_argument("--outdir", type=str, default="reports")
    args = ap.parse_args()

    all_ok = True
    for name in COMMANDS:
        config = ExperimentConfig(
            command=name, h=args.h, seed=args.seed, cases=args.cases,
            out=f"{args.outdir}/{name}")
        t0 = time.time()
        report = run_command(config)
        status = "ok" if report.passed else "FAILED"
        print(f"{name:<12} {status:<8} {time.time() - t0:>8.1f}s  "
              f"-> {args.outdir}/{name}.json")
        all_ok = all_ok and report.passed
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
