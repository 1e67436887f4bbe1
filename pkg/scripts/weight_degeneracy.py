#!/usr/bin/env python3
"""Sweep a two-step weight toward degeneracy and tabulate the constants.

Prints, per step height: the multilinear A_P constant, the Fujii-Wilson
and logarithmic A_infty extensions of the conjugate tuple, and the ratio
of the dictionary norm estimate to each mixed bound.  Useful for eyeballing
which bound tracks the degeneration most tightly.

Usage: python scripts/weight_degeneracy.py [--resolution 6] [--pmax 4]
"""

import argparse
import sys

import numpy as np

sys.path.insert(0, "src")

from sparsedom.calibration import CalibrationConstants
from sparsedom.dyadic import GridGeometry
from sparsedom.suite import random_sparse_family, step_weight
from sparsedom.verify import build_dictionary, check_theorem
from sparsedom.weights import (ExponentTuple, derived_sigmas, hruscev,
                               multilinear_ap_constant, multilinear_w_infty,
                               nu_weight)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--resolution", type=int, default=6)
    ap.add_argument("--pmax", type=float, default=4.0)
    args = ap.parse_args()

    geom = GridGeometry(1, args.resolution)
    P = ExponentTuple((args.pmax, args.pmax))
    calib = CalibrationConstants()
    rng = np.random.default_rng(0)
    fam = random_sparse_family(geom, rng)

    print("scale      A_P      W_inf    H_inf    r1      r2      r3")
    for scale in (1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0):
        ws = [step_weight(geom, scale, 1.0), step_weight(geom, scale, 1.0)]
        w, sigmas = nu_weight(ws, P), derived_sigmas(ws, P)
        apc = multilinear_ap_constant(w, sigmas, P).value
        winf = multilinear_w_infty(sigmas, P).value
        hinf = hruscev(sigmas, P).value
        d = build_dictionary(geom, rng, P, sigmas, n_random=4)
        ratios = [check_theorem(geom, fam, w, sigmas, P, 1.0, 1.0, d, which,
                                calib).ratio for which in (1, 2, 3)]
        print(f"{scale:7.0f} {apc:8.2f} {winf:8.3f} {hinf:8.3f} "
              + " ".join(f"{r:7.4f}" for r in ratios))


if __name__ == "__main__":
    main()
