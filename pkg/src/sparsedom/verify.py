"""Numerical verification of the weighted inequalities.

Every check reports LHS, RHS, their ratio, and the slack it was held to;
the pass predicate is literally `LHS <= slack * RHS`.  Norms of operators
are estimated from below over a dictionary of normalized test pairs, so a
theorem check always tests the true inequality direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationConstants, oscillation_alpha
from .czo import Kernel, TruncationField, commutator_sum
from .dyadic import DyadicCube, GridGeometry, cube_box, cube_measure, \
    box_contains, iter_cubes
from .gridfn import (GridFunction, Weight, average, bmo_norm, clipped_slices,
                     lp_norm, weighted_average)
from .maximal import weighted_dyadic_maximal
from .report import VerificationReport, make_report
from .sparse import general_sparse_apply, sparse_apply, sparse_domination
from .weights import (ExponentTuple, dual_h_infty, dual_w_infty,
                      derived_sigmas, exp_weight, fujii_wilson, hruscev,
                      multilinear_ap_constant, multilinear_w_infty, nu_weight)


@dataclass
class TestDictionary:
    """Normalized test-function pairs for operator-norm lower bounds."""
    pairs: list  # [(GridFunction, GridFunction)]

    __test__ = False  # not a pytest collectible

    def __len__(self):
        return len(self.pairs)


def build_dictionary(geom: GridGeometry, rng: np.random.Generator,
                     P: ExponentTuple, input_weights,
                     n_random: int = 6) -> TestDictionary:
    """Cube indicators, signed two-cube combinations, and spikes, each
    normalized to unit norm in its L^{p_i}(weight) space."""
    base = DyadicCube(0, 0, (0,) * geom.dimension)
    raw = [GridFunction.indicator(geom, base)]
    for _ in range(n_random):
        k = int(rng.integers(1, geom.resolution))
        off = tuple(int(rng.integers(0, 2**k)) for _ in range(geom.dimension))
        raw.append(GridFunction.indicator(geom, DyadicCube(0, k, off)))
    for _ in range(max(2, n_random // 2)):
        raw.append(GridFunction.spike(geom, int(rng.integers(geom.n_cells)),
                                      float(2**geom.resolution)))
    for _ in range(max(2, n_random // 2)):
        k = int(rng.integers(1, geom.resolution))
        o1 = tuple(int(rng.integers(0, 2**k)) for _ in range(geom.dimension))
        o2 = tuple(int(rng.integers(0, 2**k)) for _ in range(geom.dimension))
        f = (GridFunction.indicator(geom, DyadicCube(0, k, o1)) * rng.uniform(0.5, 2.0)
             - GridFunction.indicator(geom, DyadicCube(0, k, o2)) * rng.uniform(0.5, 2.0))
        raw.append(f)
    pairs = []
    for i, f1 in enumerate(raw):
        f2 = raw[(i * 7 + 3) % len(raw)]
        n1 = lp_norm(f1, P.p_list[0], input_weights[0])
        n2 = lp_norm(f2, P.p_list[1], input_weights[1])
        if n1 <= 0 or n2 <= 0:
            continue
        pairs.append((f1 * (1.0 / n1), f2 * (1.0 / n2)))
    return TestDictionary(pairs)


def norm_lower_estimate(op, P: ExponentTuple, w: Weight, input_weights,
                        dictionary: TestDictionary,
                        multipliers=None) -> float:
    """max over the dictionary of ||op(f1 m1, f2 m2)||_{L^p(w)} divided by
    prod_i ||f_i||_{L^{p_i}(input_weights_i)}; a lower bound of the norm."""
    best = 0.0
    p = P.p
    for f1, f2 in dictionary.pairs:
        n1 = lp_norm(f1, P.p_list[0], input_weights[0])
        n2 = lp_norm(f2, P.p_list[1], input_weights[1])
        if n1 <= 0 or n2 <= 0:
            continue
        g1 = f1 * multipliers[0] if multipliers is not None else f1
        g2 = f2 * multipliers[1] if multipliers is not None else f2
        val = lp_norm(op(g1, g2), p, w)
        best = max(best, val / (n1 * n2))
    return best


# -- testing lemma and summation tools -------------------------------------------


def check_testing_lemma(geom: GridGeometry, cubes, w: Weight, sigmas,
                        P: ExponentTuple, gamma: float,
                        calib: CalibrationConstants) -> list[VerificationReport]:
    """The three testing displays for a sparse collection."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    p = P.p
    p1, p2 = P.p_list
    apc = multilinear_ap_constant(w, sigmas, P).value
    cubes = sorted(set(cubes))
    avg1 = {q: average(sigmas[0], q) for q in cubes}
    avg2 = {q: average(sigmas[1], q) for q in cubes}
    avgw = {q: average(w, q) for q in cubes}
    n = geom.dimension

    reports = []

    acc = np.zeros(geom.n_cells)
    grid_acc = acc.reshape((geom.cells_per_side,) * n)
    for q in cubes:
        sl = clipped_slices(geom, q)
        if sl is not None:
            grid_acc[sl] += (avg1[q] * avg2[q]) ** gamma
    lhs = lp_norm(GridFunction(geom, acc ** (1.0 / gamma)), p, w)
    tail = sum(avg1[q] ** (p / p1) * avg2[q] ** (p / p2) * cube_measure(q, n)
               for q in cubes)
    rhs = apc ** (1.0 / p) * tail ** (1.0 / p)
    reports.append(make_report("testing", lhs, rhs, calib.slack("testing"),
                               gamma=gamma, members=len(cubes)))

    for name, i in (("dualtesting", 2), ("dualtesting1", 1)):
        if p <= gamma:
            reports.append(make_report(name, 0.0, 0.0, calib.slack(name),
                                       skipped=f"p={p:g} <= gamma={gamma:g}"))
            continue
        pi = P.p_list[i - 1]
        pig = pi / gamma
        pig_dual = pig / (pig - 1.0)
        other = sigmas[0] if i == 2 else sigmas[1]
        own = sigmas[i - 1]
        avg_other = avg1 if i == 2 else avg2
        avg_own = avg2 if i == 2 else avg1
        acc = np.zeros(geom.n_cells)
        grid_acc = acc.reshape((geom.cells_per_side,) * n)
        for q in cubes:
            sl = clipped_slices(geom, q)
            if sl is not None:
                grid_acc[sl] += (avg_other[q] ** gamma
                                 * avg_own[q] ** (gamma - 1.0) * avgw[q])
        lhs = lp_norm(GridFunction(geom, acc), pig_dual, own)
        p_other = p1 if i == 2 else p2
        tail = sum(avg_other[q] ** (gamma * pig_dual / p_other)
                   * avgw[q] ** (pig_dual * (1.0 - gamma / p))
                   * cube_measure(q, n) for q in cubes)
        rhs = apc ** (gamma / p) * tail ** (1.0 / pig_dual)
        reports.append(make_report(name, lhs, rhs, calib.slack(name),
                                   gamma=gamma))
    return reports


def check_dyadic_sum(geom: GridGeometry, coeffs: dict, s: float,
                     sigma: Weight,
                     calib: CalibrationConstants) -> list[VerificationReport]:
    """Two-sided comparability of ||phi||_{L^s(sigma)} with the localized
    dyadic sum, phi = sum alpha_Q 1_Q."""
    if s <= 1:
        raise ValueError("need s > 1")
    if any(a < 0 for a in coeffs.values()):
        raise ValueError("coefficients must be nonnegative")
    n = geom.dimension
    phi = np.zeros(geom.n_cells)
    grid_phi = phi.reshape((geom.cells_per_side,) * n)
    for q, a in coeffs.items():
        sl = clipped_slices(geom, q)
        if sl is not None:
            grid_phi[sl] += a
    lhs = lp_norm(GridFunction(geom, phi), s, sigma)
    total = 0.0
    items = sorted(coeffs.items())
    for q, a in items:
        if a == 0.0:
            continue
        qlo, qsz = cube_box(geom, q)
        local = np.zeros(geom.n_cells)
        grid_local = local.reshape((geom.cells_per_side,) * n)
        for q2, a2 in items:
            l2, s2 = cube_box(geom, q2)
            if box_contains(qlo, qsz, l2, s2):
                sl = clipped_slices(geom, q2)
                if sl is not None:
                    grid_local[sl] += a2
        mean = weighted_average(GridFunction(geom, local), q, sigma)
        total += a * mean ** (s - 1.0) * sigma.cube_integral(q)
    rhs = total ** (1.0 / s)
    return [
        make_report("dyadic_sum.upper", lhs, rhs,
                    calib.slack("dyadic_sum.upper"), s=s),
        make_report("dyadic_sum.lower", rhs, lhs,
                    calib.slack("dyadic_sum.lower"), s=s),
    ]


def check_sparse_kolmogorov(geom: GridGeometry, cubes, u: Weight, v: Weight,
                            g: float, e: float, R: DyadicCube,
                            calib: CalibrationConstants) -> VerificationReport:
    """sum over members inside R of <u>^g <v>^e |Q| against the R term."""
    if not (0 <= g < 1 and 0 <= e < 1 and g + e < 1):
        raise ValueError("exponents must satisfy 0 <= g, e < 1 and g + e < 1")
    n = geom.dimension
    rlo, rsz = cube_box(geom, R)
    lhs = 0.0
    count = 0
    for q in cubes:
        qlo, qsz = cube_box(geom, q)
        if not box_contains(rlo, rsz, qlo, qsz):
            continue
        lhs += (average(u, q) ** g) * (average(v, q) ** e) * cube_measure(q, n)
        count += 1
    rhs = (average(u, R) ** g) * (average(v, R) ** e) * cube_measure(R, n)
    return make_report("kolmogorov", lhs, rhs, calib.slack("kolmogorov"),
                       g=g, e=e, members_inside=count)


# -- the three mixed bounds -------------------------------------------------------


def _fw(weight: Weight) -> float:
    return fujii_wilson(weight).value


def check_theorem(geom: GridGeometry, cubes, w: Weight, sigmas,
                  P: ExponentTuple, p0: float, gamma: float,
                  dictionary: TestDictionary, which: int,
                  calib: CalibrationConstants) -> VerificationReport:
    """Dictionary lower estimate of ||A_{p0,gamma,S}(. sigma1, . sigma2)||
    against the selected mixed bound."""
    if which not in (1, 2, 3):
        raise ValueError("which must be 1, 2 or 3")
    if p0 < 1:
        raise ValueError("p0 must be >= 1")
    if p0 >= min(P.p_list):
        raise ValueError("need p0 < p_1, p_2")
    p = P.p
    if gamma < p0 and p <= gamma:
        raise ValueError(
            f"regime rejected: gamma={gamma:g} < p0={p0:g} requires p > gamma")

    def op(g1, g2):
        return general_sparse_apply(cubes, g1, g2, p0, gamma)

    lhs = norm_lower_estimate(op, P, w, sigmas, dictionary,
                              multipliers=sigmas)
    apc = multilinear_ap_constant(w, sigmas, P.divide(p0)).value
    plus_exp = max(1.0 / gamma - 1.0 / p, 0.0)
    name = f"theorem{which}"
    if which == 1:
        fws = [_fw(s) for s in sigmas]
        fww = _fw(w)
        main = 1.0
        for fs, pi in zip(fws, P.p_list):
            main *= fs ** (1.0 / pi)
        cross = sum(np.prod([fws[i] ** (1.0 / P.p_list[i])
                             for i in range(P.m) if i != j])
                    for j in range(P.m))
        rhs = apc ** (1.0 / p) * (main + fww**plus_exp * cross)
    elif which == 2:
        wmain = multilinear_w_infty(sigmas, P).value
        total = wmain ** (1.0 / p)
        for i in range(1, P.m + 1):
            dual = dual_w_infty(w, sigmas, P, gamma, i).value
            if p <= gamma:
                total += 1.0
            else:
                pig = P.p_list[i - 1] / gamma
                pig_dual = pig / (pig - 1.0)
                total += dual ** (1.0 / (gamma * pig_dual))
        rhs = apc ** (1.0 / p) * total
    else:
        hmain = hruscev(sigmas, P).value
        total = hmain ** (1.0 / p)
        for i in range(1, P.m + 1):
            dual = dual_h_infty(w, sigmas, P, gamma, i).value
            total += dual ** (1.0 / P.duals[i - 1])
        rhs = apc ** (1.0 / p) * total
    return make_report(name, lhs, rhs, calib.slack(name), p0=p0, gamma=gamma,
                       ap_constant=apc, members=len(list(cubes)))


def check_commutator_bound(kernel: Kernel, b_list, w_list, P: ExponentTuple,
                           dictionary: TestDictionary,
                           calib: CalibrationConstants) -> VerificationReport:
    """Norm lower estimate of the full commutator against the mixed bound."""
    p = P.p
    if p < 1:
        raise ValueError("the commutator bound needs p >= 1")
    sigmas = derived_sigmas(w_list, P)
    w = nu_weight(w_list, P)

    def op(g1, g2):
        return commutator_sum(kernel, b_list, g1, g2)

    lhs = norm_lower_estimate(op, P, w, w_list, dictionary)
    apc = multilinear_ap_constant(w, sigmas, P).value
    fws = [_fw(s) for s in sigmas]
    fww = _fw(w)
    main = float(np.prod([fws[i] ** (1.0 / P.p_list[i]) for i in range(P.m)]))
    cross = sum(np.prod([fws[i] ** (1.0 / P.p_list[i])
                         for i in range(P.m) if i != j])
                for j in range(P.m))
    pprime_inv = 1.0 - 1.0 / p
    bmo_total = sum(bmo_norm(b) for b in b_list)
    rhs = (apc ** (1.0 / p) * (main + fww**pprime_inv * cross)
           * (fww + sum(fws)) * bmo_total)
    return make_report("commutator", lhs, rhs, calib.slack("commutator"),
                       bmo_total=bmo_total, ap_constant=apc)


# -- BMO and exponential-weight checks ---------------------------------------------


def check_john_nirenberg(b: GridFunction,
                         calib: CalibrationConstants) -> VerificationReport:
    """Exponential integrability of normalized oscillations at alpha_n."""
    geom = b.geometry
    nb = bmo_norm(b)
    if nb <= 0:
        return make_report("john_nirenberg", 1.0, calib.beta, 1.0,
                           note="constant symbol; vacuous")
    alpha = oscillation_alpha(geom.dimension)
    vol = geom.cell_volume
    worst = 0.0
    for cube in iter_cubes(geom, contained=True):
        sl = clipped_slices(geom, cube)
        block = b.grid[sl]
        measure = cube_measure(cube, geom.dimension)
        mean = float(np.sum(block)) * vol / measure
        val = float(np.sum(np.exp(alpha * np.abs(block - mean) / nb))) \
            * vol / measure
        worst = max(worst, val)
    return make_report("john_nirenberg", worst, calib.beta, 1.0,
                       alpha=alpha, bmo=nb)


def check_exp_ap(b: GridFunction, s_grid, p: float,
                 calib: CalibrationConstants) -> VerificationReport:
    """[e^{sb}]_{A_p} <= beta^p for |s| below the admissible cap."""
    from .weights import ap_constant
    if p <= 1:
        raise ValueError("need p > 1")
    nb = bmo_norm(b)
    alpha = oscillation_alpha(b.geometry.dimension)
    cap = np.inf if nb == 0 else alpha / nb * min(1.0, 1.0 / (p - 1.0))
    if s_grid is None:
        top = 1.0 if not np.isfinite(cap) else cap
        s_grid = np.linspace(-top, top, 9)
    worst, worst_s = 0.0, 0.0
    for s in s_grid:
        if abs(s) > cap + 1e-15:
            continue
        val = ap_constant(exp_weight(b, float(s)), p).value
        if val > worst:
            worst, worst_s = val, float(s)
    return make_report("exp_ap", worst, calib.beta**p, 1.0, p=p, cap=cap,
                       worst_s=worst_s)


def check_ainfty_stability(b: GridFunction, w: Weight, z_grid,
                           calib: CalibrationConstants) -> VerificationReport:
    """Fujii-Wilson constant of e^{zb} w stays within a factor of [w]."""
    nb = bmo_norm(b)
    fw = _fw(w)
    cap = np.inf if nb == 0 else calib.ainfty_eps / (nb * fw)
    if z_grid is None:
        top = 1.0 if not np.isfinite(cap) else cap
        z_grid = np.linspace(-top, top, 9)
    worst, worst_z = 0.0, 0.0
    for z in z_grid:
        if abs(z) > cap + 1e-15:
            continue
        mod = Weight(w.geometry, w.values * np.exp(float(z) * b.values))
        val = _fw(mod)
        if val > worst:
            worst, worst_z = val, float(z)
    return make_report("ainfty_stability", worst, calib.ainfty_c * fw, 1.0,
                       cap=cap, worst_z=worst_z, base=fw)


def check_prodweight(w: Weight, sigmas, P: ExponentTuple, b: GridFunction,
                     z_grid, j: int,
                     calib: CalibrationConstants) -> VerificationReport:
    """Conjugating the tuple by e^{zb} moves the A_P constant boundedly."""
    if not 1 <= j <= P.m:
        raise ValueError(f"slot j must lie in 1..{P.m}")
    nb = bmo_norm(b)
    p = P.p
    base = multilinear_ap_constant(w, sigmas, P).value
    alpha = oscillation_alpha(w.geometry.dimension)
    fw_all = [_fw(w)] + [_fw(s) for s in sigmas]
    cap = np.inf if nb == 0 else (
        alpha * min([1.0] + [d / p for d in P.duals])
        / (p * (1.0 + max(fw_all)) * nb))
    if z_grid is None:
        top = 1.0 if not np.isfinite(cap) else cap
        z_grid = np.linspace(-top, top, 9)
    pj_dual = P.duals[j - 1]
    worst, worst_z = 0.0, 0.0
    for z in z_grid:
        if abs(z) > cap + 1e-15:
            continue
        z = float(z)
        w_mod = Weight(w.geometry, w.values * np.exp(p * z * b.values))
        sig_mod = list(sigmas)
        sig_mod[j - 1] = Weight(w.geometry, sigmas[j - 1].values
                                * np.exp(-pj_dual * z * b.values))
        val = multilinear_ap_constant(w_mod, sig_mod, P).value
        if val > worst:
            worst, worst_z = val, z
    return make_report("prodweight", worst, calib.prodweight_c * base, 1.0,
                       cap=cap, worst_z=worst_z, base=base)


# -- weak type and pointwise domination --------------------------------------------


def check_weak_type(kernel: Kernel, pairs,
                    calib: CalibrationConstants) -> list[VerificationReport]:
    """Weak L^1 x L^1 functionals of T and its maximal truncation."""
    from .czo import weak_halfinfty_sup
    worst_full, worst_sharp = 0.0, 0.0
    used = 0
    for f1, f2 in pairs:
        n1 = lp_norm(f1, 1.0)
        n2 = lp_norm(f2, 1.0)
        if n1 <= 0 or n2 <= 0:
            continue
        used += 1
        field = TruncationField(kernel, f1.geometry, [(f1, f2)])
        geom = f1.geometry
        full = GridFunction(geom, field.full())
        sharp = GridFunction(geom, field.sharp())
        worst_full = max(worst_full, weak_halfinfty_sup(full) / (n1 * n2))
        worst_sharp = max(worst_sharp, weak_halfinfty_sup(sharp) / (n1 * n2))
    rhs = kernel.constant_sum()
    return [
        make_report("weak_type", worst_full, rhs, calib.slack("weak_type"),
                    pairs=used),
        make_report("weak_type_sharp", worst_sharp, rhs,
                    calib.slack("weak_type_sharp"), pairs=used),
    ]


def check_pointwise_domination(kernel: Kernel, f1: GridFunction,
                               f2: GridFunction,
                               calib: CalibrationConstants):
    """Cellwise T_sharp <= c (norm + C_K + Dini) sum_u A_{S^u}(|f1|, |f2|)."""
    result = sparse_domination(kernel, f1, f2, calib)
    geom = f1.geometry
    field = TruncationField(kernel, geom, [(f1, f2)])
    lhs = field.sharp()
    denom = np.zeros(geom.n_cells)
    a1, a2 = abs(f1), abs(f2)
    for fam in result.families.values():
        denom += sparse_apply(fam.cubes, a1, a2).values
    rhs = kernel.constant_sum() * denom
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0),
                          np.where(lhs > 0, np.inf, 0.0))
    worst = int(np.argmax(ratios))
    report = make_report("pointwise_domination", float(lhs[worst]),
                         float(rhs[worst]), calib.domination_c,
                         constant=result.constant, worst_cell=worst,
                         dropped=result.dropped)
    return report, result


# -- structural identities -----------------------------------------------------------


def p0_reduction_gap(cubes, f1: GridFunction, f2: GridFunction, p0: float,
                     gamma: float) -> float:
    """Max cellwise gap of A_{p0,gamma} = A_{1,gamma/p0}(|f|^{p0})^{1/p0}."""
    lhs = general_sparse_apply(cubes, f1, f2, p0, gamma)
    g1 = GridFunction(f1.geometry, np.abs(f1.values) ** p0)
    g2 = GridFunction(f2.geometry, np.abs(f2.values) ** p0)
    rhs = general_sparse_apply(cubes, g1, g2, 1.0, gamma / p0)
    return float(np.max(np.abs(lhs.values - rhs.values ** (1.0 / p0))))


def check_maximal_equivalence(geom: GridGeometry, cubes, f1, f2, sigmas,
                              gamma: float, system: int = 0) -> VerificationReport:
    """Cellwise domination of A_{1,gamma,S}(f1 s1, f2 s2) by the weighted
    dyadic-maximal surrogate used in the equivalence of norms."""
    lhs = general_sparse_apply(cubes, f1 * sigmas[0], f2 * sigmas[1],
                               1.0, gamma)
    m1 = weighted_dyadic_maximal(f1, sigmas[0], system)
    m2 = weighted_dyadic_maximal(f2, sigmas[1], system)
    acc = np.zeros(geom.n_cells)
    grid_acc = acc.reshape((geom.cells_per_side,) * geom.dimension)
    for q in cubes:
        sl = clipped_slices(geom, q)
        if sl is None:
            continue
        t1 = weighted_average(m1.power(gamma), q, sigmas[0])
        t2 = weighted_average(m2.power(gamma), q, sigmas[1])
        grid_acc[sl] += (t1 * t2 * average(sigmas[0], q) ** gamma
                         * average(sigmas[1], q) ** gamma)
    rhs = acc ** (1.0 / gamma)
    worst = int(np.argmax(lhs.values - rhs))
    return make_report("maximal_equivalence", float(lhs.values[worst]),
                       float(rhs[worst]) if rhs[worst] > 0 else 0.0,
                       1.0 + 1e-9, worst_cell=worst)
