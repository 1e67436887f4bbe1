"""Multilinear Muckenhoupt-type weight characteristics.

All suprema run over the cubes of the 3^n shifted systems, levels 0..K,
restricted to cubes contained in the base cube: on that family every
characteristic equals 1 exactly for constant weights, is invariant under
scaling each weight, and sits above its Jensen floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicCube, GridGeometry, cube_measure, iter_cubes, midpoints
from .gridfn import GridFunction, Weight, average, clipped_slices
from .maximal import hl_maximal
from .report import VerificationReport, make_report


@dataclass(frozen=True)
class ExponentTuple:
    """Exponents (p_1, ..., p_m) with each p_i in (1, inf)."""
    p_list: tuple[float, ...]

    def __post_init__(self):
        if not self.p_list:
            raise ValueError("need at least one exponent")
        if any(p <= 1.0 or not np.isfinite(p) for p in self.p_list):
            raise ValueError(f"exponents must lie in (1, inf): {self.p_list}")

    @property
    def m(self) -> int:
        return len(self.p_list)

    @property
    def p(self) -> float:
        return 1.0 / sum(1.0 / pi for pi in self.p_list)

    @property
    def duals(self) -> tuple[float, ...]:
        return tuple(pi / (pi - 1.0) for pi in self.p_list)

    def divide(self, p0: float) -> "ExponentTuple":
        if any(pi <= p0 for pi in self.p_list):
            raise ValueError(f"p0={p0} must be below every exponent")
        return ExponentTuple(tuple(pi / p0 for pi in self.p_list))


@dataclass
class ConstantsReport:
    name: str
    value: float
    witness: DyadicCube | None = None

    def to_json(self) -> dict:
        wit = None
        if self.witness is not None:
            wit = {"system": self.witness.system, "level": self.witness.level,
                   "offset": list(self.witness.offset)}
        return {"name": self.name, "value": self.value, "witness": wit}


def _sup_over_cubes(geom: GridGeometry, value_fn) -> ConstantsReport:
    best, witness = -np.inf, None
    for cube in iter_cubes(geom, contained=True):
        val = value_fn(cube)
        if val > best:
            best, witness = val, cube
    return ConstantsReport("", float(best), witness)


def ap_constant(w: Weight, p: float) -> ConstantsReport:
    """[w]_{A_p} = sup_Q <w>_Q <w^{1-p'}>_Q^{p-1}."""
    if p <= 1:
        raise ValueError("A_p needs p > 1")
    dual = p / (p - 1.0)
    recip = GridFunction(w.geometry, w.values ** (1.0 - dual))
    rep = _sup_over_cubes(
        w.geometry,
        lambda q: average(w, q) * average(recip, q) ** (p - 1.0))
    rep.name = f"A_{p:g}"
    return rep


def multilinear_ap_constant(w: Weight, sigmas, P: ExponentTuple) -> ConstantsReport:
    """[w, sigma]_{A_P} = sup_Q <w>_Q prod_i <sigma_i>_Q^{p/p_i'}."""
    if len(sigmas) != P.m:
        raise ValueError("sigma count must match the exponent tuple")
    p = P.p
    expo = [p / d for d in P.duals]
    def val(q):
        out = average(w, q)
        for s, e in zip(sigmas, expo):
            out *= average(s, q) ** e
        return out
    rep = _sup_over_cubes(w.geometry, val)
    rep.name = "A_P"
    return rep


def _clipped_to_cube(f: GridFunction, cube: DyadicCube) -> GridFunction:
    vals = np.zeros(f.geometry.n_cells)
    sl = clipped_slices(f.geometry, cube)
    if sl is not None:
        vals.reshape(f.grid.shape)[sl] = f.grid[sl]
    return GridFunction(f.geometry, vals)


def fujii_wilson(w: Weight) -> ConstantsReport:
    """[w]_{A_infty} = sup_Q w(Q)^{-1} int_Q M(w 1_Q)."""
    geom = w.geometry
    def val(q):
        clipped = _clipped_to_cube(w, q)
        m = hl_maximal(clipped)
        return m.cube_integral(q) / w.cube_integral(q)
    rep = _sup_over_cubes(geom, val)
    rep.name = "A_infty_FW"
    return rep


def multilinear_w_infty(ws, P: ExponentTuple) -> ConstantsReport:
    """Fujii-Wilson extension: sup_Q of the ratio of int_Q prod M(w_i 1_Q)^{p/p_i}
    to int_Q prod w_i^{p/p_i}."""
    if len(ws) != P.m:
        raise ValueError("weight count must match the exponent tuple")
    geom = ws[0].geometry
    p = P.p
    expo = [p / pi for pi in P.p_list]
    def val(q):
        num = np.ones(geom.n_cells)
        den = np.ones(geom.n_cells)
        for wi, e in zip(ws, expo):
            num *= hl_maximal(_clipped_to_cube(wi, q)).values ** e
            den *= wi.values ** e
        return (GridFunction(geom, num).cube_integral(q)
                / GridFunction(geom, den).cube_integral(q))
    rep = _sup_over_cubes(geom, val)
    rep.name = "W_P_infty"
    return rep


def dual_w_infty(w: Weight, sigmas, P: ExponentTuple, gamma: float,
                 i: int) -> ConstantsReport:
    """Mixed-maximal extension for the i-th dual tuple; equals 1 when p <= gamma."""
    if not 1 <= i <= P.m:
        raise ValueError(f"slot i must lie in 1..{P.m}")
    p = P.p
    name = f"W_P{i}_infty"
    if p <= gamma:
        return ConstantsReport(name, 1.0, None)
    geom = w.geometry
    q_exp = p / gamma
    q_dual = q_exp / (q_exp - 1.0)
    pi_g = P.p_list[i - 1] / gamma
    pi_g_dual = pi_g / (pi_g - 1.0)
    e_w = pi_g_dual / q_dual
    def val(q):
        num = hl_maximal(_clipped_to_cube(w, q)).values ** e_w
        den = w.values ** e_w
        for j, sj in enumerate(sigmas, start=1):
            if j == i:
                continue
            e_j = pi_g_dual / (P.p_list[j - 1] / gamma)
            num = num * hl_maximal(_clipped_to_cube(sj, q)).values ** e_j
            den = den * sj.values ** e_j
        return (GridFunction(geom, num).cube_integral(q)
                / GridFunction(geom, den).cube_integral(q))
    rep = _sup_over_cubes(geom, val)
    rep.name = name
    return rep


def hruscev(ws, P: ExponentTuple) -> ConstantsReport:
    """sup_Q prod_i <w_i>_Q^{p/p_i} exp(mean_Q log(1/w_i))^{p/p_i}."""
    if len(ws) != P.m:
        raise ValueError("weight count must match the exponent tuple")
    geom = ws[0].geometry
    p = P.p
    expo = [p / pi for pi in P.p_list]
    logs = [GridFunction(geom, np.log(wi.values)) for wi in ws]
    def val(q):
        out = 1.0
        for wi, li, e in zip(ws, logs, expo):
            out *= (average(wi, q) * np.exp(-average(li, q))) ** e
        return out
    rep = _sup_over_cubes(geom, val)
    rep.name = "H_P_infty"
    return rep


def dual_h_infty(w: Weight, sigmas, P: ExponentTuple, gamma: float,
                 i: int) -> ConstantsReport:
    """Dual logarithmic extension for slot i, taken verbatim from its display
    (the product over j != i carries sigma_i); equals 1 when p <= gamma."""
    if not 1 <= i <= P.m:
        raise ValueError(f"slot i must lie in 1..{P.m}")
    p = P.p
    name = f"H_P{i}_infty"
    if p <= gamma:
        return ConstantsReport(name, 1.0, None)
    geom = w.geometry
    pi_dual = P.duals[i - 1]
    e_w = pi_dual * max(1.0 / gamma - 1.0 / p, 0.0)
    logw = GridFunction(geom, np.log(w.values))
    sig_i = sigmas[i - 1]
    log_si = GridFunction(geom, np.log(sig_i.values))
    def val(q):
        out = (average(w, q) * np.exp(-average(logw, q))) ** e_w
        for j in range(1, P.m + 1):
            if j == i:
                continue
            e_j = pi_dual / P.p_list[j - 1]
            out *= (average(sig_i, q) * np.exp(-average(log_si, q))) ** e_j
        return out
    rep = _sup_over_cubes(geom, val)
    rep.name = name
    return rep


# -- weight constructors -------------------------------------------------------


def nu_weight(ws, P: ExponentTuple) -> Weight:
    """nu = prod_i w_i^{p/p_i}, the output weight of a tuple."""
    if len(ws) != P.m:
        raise ValueError("weight count must match the exponent tuple")
    p = P.p
    vals = np.ones(ws[0].geometry.n_cells)
    for wi, pi in zip(ws, P.p_list):
        vals *= wi.values ** (p / pi)
    return Weight(ws[0].geometry, vals)


def derived_sigmas(ws, P: ExponentTuple) -> list[Weight]:
    """sigma_i = w_i^{1-p_i'}, the conjugate tuple of (w_1, ..., w_m)."""
    return [Weight(wi.geometry, wi.values ** (1.0 - d))
            for wi, d in zip(ws, P.duals)]


def power_weight(a: float, geom: GridGeometry) -> Weight:
    """|x|^a sampled at cell midpoints, distance from the base-cube corner."""
    if a <= -geom.dimension:
        raise ValueError(f"power {a} is not integrable in dimension "
                         f"{geom.dimension}")
    dist = np.linalg.norm(midpoints(geom), axis=1)
    return Weight(geom, dist**a)


def exp_weight(b: GridFunction, s: float) -> Weight:
    return Weight(b.geometry, np.exp(s * b.values))


# -- reverse Holder -------------------------------------------------------------


def reverse_holder_check(w: Weight, c_n: float) -> VerificationReport:
    """With r = 1 + 1/(c_n [w]_FW), check (<w^r>_Q)^{1/r} <= 2 <w>_Q on all
    cubes; reports the worst cube."""
    if c_n <= 0:
        raise ValueError("c_n must be positive")
    fw = fujii_wilson(w)
    r = 1.0 + 1.0 / (c_n * fw.value)
    # scaled form (w/max)^r avoids overflow for large r
    top = float(np.max(w.values))
    powered = GridFunction(w.geometry, (w.values / top) ** r)
    worst = (0.0, 1.0, None)
    for cube in iter_cubes(w.geometry, contained=True):
        lhs = top * average(powered, cube) ** (1.0 / r)
        rhs = 2.0 * average(w, cube)
        if lhs / rhs > worst[0] / worst[1]:
            worst = (lhs, rhs, cube)
    lhs, rhs, cube = worst
    return make_report("reverse_holder", lhs, rhs, 1.0, r=r,
                       fujii_wilson=fw.value,
                       witness=str(cube))
