#!/usr/bin/env python
"""Run every configuration under configs/ and print a one-line status per run."""

import argparse
import sys
from pathlib import Path

from sclab.cli import run

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="*", type=Path)
    args = ap.parse_args()
    paths = args.configs or sorted((ROOT / "configs").glob("*.json"))
    codes = {p.name: run(p) for p in paths}
    for name, code in codes.items():
        print(f"{name:24s} exit {code}")
    return max(codes.values(), default=0)


if __name__ == "__main__":
    sys.exit(main())
