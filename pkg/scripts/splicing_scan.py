#!/usr/bin/env python
"""Rank of the translated-bump projection and the bump position over a t grid; CSV on stdout."""

import argparse
import math
import sys

import numpy as np

from sclab.io import csv_text
from sclab.retracts import admissible_t_min, splicing_core_scan, translated_bump_family
from sclab.scales import GridLineScale


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--half-width", type=float, default=64.0)
    ap.add_argument("--grid-size", type=int, default=8192)
    ap.add_argument("--points", type=int, default=25)
    args = ap.parse_args()
    G = GridLineScale(args.half_width, args.grid_size)
    t_min = admissible_t_min(G)
    ts = np.concatenate([np.linspace(-1.0, 0.0, 5), np.geomspace(t_min, 4.0, args.points)])
    rows = splicing_core_scan(translated_bump_family(G), ts)
    out = [{"t": r["v"][0], "center": -math.exp(1.0 / r["v"][0]) if r["v"][0] > 0 else "",
            "rank": r["rank"], "residual": r["residual"]} for r in rows]
    sys.stdout.write(csv_text(["t", "center", "rank", "residual"], out))


if __name__ == "__main__":
    main()
