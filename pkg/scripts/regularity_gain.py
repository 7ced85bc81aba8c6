#!/usr/bin/env python
"""Estimated regularity of y and of the solution x of (d/dt + mass) x = y over a range of decays."""

import argparse

import numpy as np

from sclab.scales import ScalePoint, circle_scale, estimate_regularity, random_phase_point
from sclab.templates import build_operator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=512)
    ap.add_argument("--mass", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    E = circle_scale((args.N // 4, args.N // 2, args.N))
    A = build_operator("ddt_plus_one", E, {"mass": args.mass}).matrix(args.N)
    rng = np.random.default_rng(args.seed)
    print(f"{'decay':>6} {'reg(y)':>8} {'reg(x)':>8} {'gain':>6}")
    for decay in np.arange(0.5, 4.01, 0.5):
        y = random_phase_point(E, args.N, decay, rng)
        x = np.linalg.solve(A, y)
        ry = estimate_regularity(ScalePoint(y, E)).value
        rx = estimate_regularity(ScalePoint(x, E)).value
        print(f"{decay:6.2f} {ry:8.3f} {rx:8.3f} {rx - ry:6.3f}")


if __name__ == "__main__":
    main()
