#!/usr/bin/env python3
"""Measured blow-down energy slopes against the quadratic mass polynomial.

Scans m1 at fixed m2, fits the joint free energy of the standard smooth
family against ln(psi), and compares the fitted slope with Lambda(m1, m2).
The sign flip of either column locates the unboundedness onset along the
scan line.
"""

import argparse
import logging

import numpy as np

from conflictlab.blowdown import BlowdownFamily, slope_estimate
from conflictlab.calculus import inv_laplacian
from conflictlab.model import Params, RadialField, make_grid, project_density
from conflictlab.phase import lambda_values


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=2.0)
    ap.add_argument("--gamma", type=float, default=0.0)
    ap.add_argument("--m2", type=float, default=1.0)
    ap.add_argument("--m1-start", type=float, default=10.0)
    ap.add_argument("--m1-stop", type=float, default=35.0)
    ap.add_argument("--count", type=int, default=11)
    ap.add_argument("--grid-n", type=int, default=2048)
    ap.add_argument("--rungs", type=int, default=8, help="dyadic psi rungs, from 2^3")
    return ap.parse_args()


def base_fields(grid, m1, m2):
    rho = project_density(RadialField.density(grid, 2.0 - grid.r**2), m1)
    if m2 > 0:
        chem = project_density(RadialField.density(grid, np.exp(-3.0 * grid.r**2)), m2)
        w = inv_laplacian(chem)
    else:
        w = RadialField.potential(grid, np.zeros(grid.r.size))
    return rho, w


def main():
    args = parse_args()
    grid = make_grid(args.grid_n, kind="graded")
    psis = 2.0 ** np.arange(3, 3 + args.rungs)

    print(f"{'m1':>8s} {'Lambda':>12s} {'slope':>12s} {'rel gap':>10s}")
    for m1 in np.linspace(args.m1_start, args.m1_stop, args.count):
        p = Params(
            alpha=args.alpha,
            beta=args.beta,
            gamma=args.gamma,
            theta=-1,
            m1=float(m1),
            m2=args.m2,
        )
        rho, w = base_fields(grid, p.m1, p.m2)
        slope = slope_estimate(BlowdownFamily(rho, w, psis=psis), p)
        lam = lambda_values(p.m1, p.m2, p)[0]
        gap = abs(slope - lam) / max(1.0, abs(lam))
        print(f"{m1:8.3f} {lam:12.6f} {slope:12.6f} {gap:10.2e}")


if __name__ == "__main__":
    logging.basicConfig(level=logging.WARNING)
    main()
