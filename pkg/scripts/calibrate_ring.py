"""Regenerate the ring calibration table used by delta_for.

Solves the concentric-sphere condenser (radii 0.5 and 1.5) at a ladder of
grid spacings and prints the relative error against the closed form
4*pi/log(b/a)^2.  The printed values are the ones frozen in
capax.experiments.RING_CALIBRATION; rerun this after any solver change.

Usage: python3 scripts/calibrate_ring.py [--max-inv 96]
"""

import argparse
import time

from capax.experiments import RING_CALIBRATION
from capax.pde import SolveSettings, rasterize_regions, solve_capacity
from capax.reference import ring_capacity_exact


def sphere(radius, inner):
    if inner:
        return lambda pts: (pts ** 2).sum(axis=1) <= radius ** 2
    return lambda pts: (pts ** 2).sum(axis=1) >= radius ** 2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-inv", type=int, default=96,
                    help="finest spacing as 1/h (default 96)")
    args = ap.parse_args()

    exact = ring_capacity_exact(0.5, 1.5)
    print(f"exact ring capacity: {exact:.12f}")
    print(f"{'1/h':>5} {'capacity':>12} {'rel error':>10} "
          f"{'frozen':>8} {'secs':>7}")
    for inv in (16, 32, 48, 64, 96):
        if inv > args.max_inv:
            break
        settings = SolveSettings(box=(-3.0, 3.0), h=1.0 / inv)
        grid = rasterize_regions(settings.box, settings.h,
                                 sphere(0.5, inner=True),
                                 sphere(1.5, inner=False))
        t0 = time.time()
        res = solve_capacity(grid, p=settings.p, tol=settings.tol,
                             max_iters=settings.max_iters, flux_levels=())
        rel = abs(res.energy - exact) / exact
        frozen = RING_CALIBRATION.get(inv, float("nan"))
        print(f"{inv:>5} {res.energy:>12.6f} {rel:>10.4f} "
              f"{frozen:>8.4f} {time.time() - t0:>7.1f}")


if __name__ == "__main__":
    main()
