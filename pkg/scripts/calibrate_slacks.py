#!/usr/bin/env python3
"""Calibrate the per-check slack constants on the seed-0 suite.

Runs the same randomized suites as the acceptance tests and prints the
worst observed LHS/RHS ratio per check.  The committed values in
sparsedom/calibration.py are these worst ratios with a safety margin;
re-run after changing discretization conventions.
"""

import sys
import time
from collections import defaultdict

import numpy as np

sys.path.insert(0, "src")

from sparsedom.calibration import CalibrationConstants
from sparsedom.czo import SmoothTensorKernel, TruncatedHomogeneousKernel, \
    TruncationField, cotlar_check, truncation_continuity_check
from sparsedom.dyadic import GridGeometry
from sparsedom.gridfn import GridFunction
from sparsedom.sparse import sparse_apply, sparse_domination
from sparsedom.suite import (bmo_symbol, random_sparse_family,
                             random_step_function, two_step_weight,
                             weight_tuple)
from sparsedom.verify import (build_dictionary, check_ainfty_stability,
                              check_commutator_bound, check_dyadic_sum,
                              check_prodweight, check_sparse_kolmogorov,
                              check_testing_lemma, check_theorem,
                              check_weak_type)
from sparsedom.weights import ExponentTuple

WIDE = CalibrationConstants().with_overrides({
    "slack.testing": 1e9, "slack.dualtesting": 1e9, "slack.dualtesting1": 1e9,
    "slack.kolmogorov": 1e9, "slack.dyadic_sum.upper": 1e9,
    "slack.dyadic_sum.lower": 1e9, "slack.theorem1": 1e9,
    "slack.theorem2": 1e9, "slack.theorem3": 1e9, "slack.commutator": 1e9,
    "slack.weak_type": 1e9, "slack.weak_type_sharp": 1e9,
    "slack.truncation_continuity": 1e9,
    "cotlar_c": 1e-9, "ainfty_c": 1.0, "prodweight_c": 1.0,
})

EXPONENT_POOL = [(2.0, 2.0), (4.0, 4.0), (8.0, 8.0), (3.0, 6.0), (6.0, 3.0)]


def main():
    worst = defaultdict(float)
    geom = GridGeometry(1, 6)
    rng = np.random.default_rng(0)

    t0 = time.time()
    for i in range(100):
        P = ExponentTuple(EXPONENT_POOL[i % len(EXPONENT_POOL)])
        fam = random_sparse_family(geom, rng)
        w, sig, _ = weight_tuple(geom, rng, P)
        gamma = (1.0, 2.0)[i % 2]
        for rep in check_testing_lemma(geom, fam, w, sig, P, gamma, WIDE):
            if rep.rhs > 0:
                worst[rep.check] = max(worst[rep.check], rep.ratio)
    print(f"[testing x100] {time.time()-t0:.1f}s")

    t0 = time.time()
    for i in range(20):
        fam = random_sparse_family(geom, rng, max_level=4)
        coeffs = {q: float(rng.uniform(0, 1)) for q in fam}
        sigma = two_step_weight(geom, rng)
        for rep in check_dyadic_sum(geom, coeffs, float(rng.uniform(1.5, 3)),
                                    sigma, WIDE):
            if rep.rhs > 0:
                worst[rep.check] = max(worst[rep.check], rep.ratio)
        u, v = two_step_weight(geom, rng), two_step_weight(geom, rng)
        g, e = rng.uniform(0, 0.5, 2)
        rep = check_sparse_kolmogorov(geom, random_sparse_family(geom, rng),
                                      u, v, float(g), float(e), fam[0], WIDE)
        if rep.rhs > 0:
            worst[rep.check] = max(worst[rep.check], rep.ratio)
    print(f"[sums x20] {time.time()-t0:.1f}s")

    t0 = time.time()
    for which in (1, 2, 3):
        for i in range(50):
            P = ExponentTuple(EXPONENT_POOL[i % len(EXPONENT_POOL)])
            fam = random_sparse_family(geom, rng)
            w, sig, _ = weight_tuple(geom, rng, P)
            d = build_dictionary(geom, rng, P, sig, n_random=4)
            gamma = (1.0, 2.0)[i % 2]
            rep = check_theorem(geom, fam, w, sig, P, 1.0, gamma, d, which,
                                WIDE)
            worst[rep.check] = max(worst[rep.check], rep.ratio)
        # degeneracy sweep
        from sparsedom.suite import step_weight
        from sparsedom.weights import derived_sigmas, nu_weight
        P = ExponentTuple((4.0, 4.0))
        for scale in (1.0, 16.0, 256.0, 4096.0):
            ws = [step_weight(geom, scale, 1.0), step_weight(geom, 1.0, scale)]
            w, sig = nu_weight(ws, P), derived_sigmas(ws, P)
            fam = random_sparse_family(geom, rng)
            d = build_dictionary(geom, rng, P, sig, n_random=4)
            rep = check_theorem(geom, fam, w, sig, P, 1.0, 1.0, d, which,
                                WIDE)
            worst[rep.check] = max(worst[rep.check], rep.ratio)
    print(f"[theorems x(50+4)x3] {time.time()-t0:.1f}s")

    t0 = time.time()
    P = ExponentTuple((2.0, 2.0))
    for kernel in (SmoothTensorKernel(1, width=0.25),
                   TruncatedHomogeneousKernel(1, holder=0.7,
                                              truncation=0.05)):
        for i in range(10):
            ws = [two_step_weight(geom, rng) for _ in range(2)]
            bs = [bmo_symbol(geom, rng) for _ in range(2)]
            d = build_dictionary(geom, rng, P, ws, n_random=3)
            rep = check_commutator_bound(kernel, bs, ws, P, d, WIDE)
            if rep.rhs > 0:
                worst[rep.check] = max(worst[rep.check], rep.ratio)
        pairs = [(random_step_function(geom, rng),
                  random_step_function(geom, rng)) for _ in range(25)]
        for rep in check_weak_type(kernel, pairs, WIDE):
            worst[rep.check] = max(worst[rep.check], rep.ratio)
        from sparsedom.czo import eta_maximal
        from sparsedom.maximal import multilinear_maximal
        for f1, f2 in pairs[:10]:
            # minimal coefficient on the maximal term of the Cotlar bound
            field = TruncationField(kernel, geom, [(f1, f2)])
            sharp = field.sharp()
            meta = eta_maximal(GridFunction(geom, field.full()), 0.25).values
            mm = multilinear_maximal(f1, f2).values * kernel.constant_sum()
            need = np.where(mm > 0, np.maximum(sharp - meta, 0.0)
                            / np.where(mm > 0, mm, 1.0), 0.0)
            worst["cotlar_c"] = max(worst["cotlar_c"], float(np.max(need)))
            rep = truncation_continuity_check(kernel, f1, f2, 0.125, 0.5,
                                              WIDE, rng)
            worst["truncation_continuity"] = max(
                worst["truncation_continuity"], rep.details["worst_ratio"])
    print(f"[kernels x2] {time.time()-t0:.1f}s")

    t0 = time.time()
    calib = CalibrationConstants()
    ker = SmoothTensorKernel(1, width=0.25)
    for i in range(25):
        f1 = random_step_function(geom, rng)
        f2 = random_step_function(geom, rng)
        res = sparse_domination(ker, f1, f2, calib)
        field = TruncationField(ker, geom, [(f1, f2)])
        denom = np.zeros(geom.n_cells)
        for fam in res.families.values():
            denom += sparse_apply(fam.cubes, abs(f1), abs(f2)).values
        denom *= ker.constant_sum()
        pos = denom > 0
        if pos.any():
            worst["domination_c"] = max(
                worst["domination_c"],
                float(np.max(field.sharp()[pos] / denom[pos])))
    print(f"[domination x25] {time.time()-t0:.1f}s")

    t0 = time.time()
    for i in range(20):
        b = bmo_symbol(geom, rng)
        w = two_step_weight(geom, rng)
        rep = check_ainfty_stability(b, w, None, WIDE)
        worst["ainfty_c"] = max(worst["ainfty_c"], rep.ratio)
        wt, sig, _ = weight_tuple(geom, rng, P)
        rep = check_prodweight(wt, sig, P, b, None, 1 + i % 2, WIDE)
        worst["prodweight_c"] = max(worst["prodweight_c"], rep.ratio)
    print(f"[conjugation x20] {time.time()-t0:.1f}s")

    print("\nworst observed ratios (seed 0):")
    for name in sorted(worst):
        print(f"  {name}: {worst[name]:.6g}")


if __name__ == "__main__":
    main()
