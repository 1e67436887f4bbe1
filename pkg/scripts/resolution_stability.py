#!/usr/bin/env python3
"""Track the achieved domination constant across grid resolutions.

For a fixed seeded function pair and the smooth tensor kernel, runs the
sparse-domination recursion at K = 5..8 and prints the achieved pointwise
constant, family sizes, and node counts.  The constant should drift by
well under 2x between neighboring resolutions.

Usage: python scripts/resolution_stability.py [--seed 42] [--width 0.25]
"""

import argparse
import sys
import time

import numpy as np

sys.path.insert(0, "src")

from sparsedom.calibration import CalibrationConstants
from sparsedom.czo import SmoothTensorKernel
from sparsedom.dyadic import GridGeometry
from sparsedom.sparse import sparse_domination
from sparsedom.suite import random_step_function


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--width", type=float, default=0.25)
    args = ap.parse_args()

    calib = CalibrationConstants()
    print("K  constant   nodes  cubes  time")
    prev = None
    for K in (5, 6, 7, 8):
        geom = GridGeometry(1, K)
        kernel = SmoothTensorKernel(1, width=args.width)
        rng = np.random.default_rng(args.seed)
        f1 = random_step_function(geom, rng)
        f2 = random_step_function(geom, rng)
        t0 = time.time()
        res = sparse_domination(kernel, f1, f2, calib)
        n_cubes = sum(len(f.cubes) for f in res.families.values())
        drift = "" if prev is None else f"  (x{res.constant / prev:.2f})"
        print(f"{K}  {res.constant:8.4f}  {len(res.trace):5d}  {n_cubes:5d}"
              f"  {time.time() - t0:5.2f}s{drift}")
        prev = res.constant


if __name__ == "__main__":
    main()
