"""Maximal operators: Hardy-Littlewood, multilinear, weighted dyadic,
logarithmic, and truncated centered variants.

Cube suprema run over the 3^n shifted systems at levels 0..K.  At a fixed
system and level the cubes tile space, so each cell belongs to exactly one
cube; the per-level fields are computed by integral-image lookups and the
supremum is a running elementwise maximum.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .dyadic import GridGeometry, midpoints, offset_range, snapped_shift
from .gridfn import GridFunction, Weight


@lru_cache(maxsize=None)
def _assignment(geom: GridGeometry, system: int, level: int):
    """Per-axis cube assignment of cells at (system, level).

    Returns, per axis: the per-cell offset index (relative to the smallest
    offset), clipped lower/upper cell bounds per offset, and a validity mask
    marking offsets whose cube lies inside the base cube.
    """
    side = geom.cells_per_side
    size = 1 << (geom.resolution - level)
    shift = snapped_shift(geom, system, level)
    axes = []
    for a in range(geom.dimension):
        rng = offset_range(geom, system, level, a, contained=False)
        offs = np.arange(rng.start, rng.stop)
        lo = offs * size + shift[a]
        clip_lo = np.clip(lo, 0, side)
        clip_hi = np.clip(lo + size, 0, side)
        valid = (lo >= 0) & (lo + size <= side)
        cells = np.arange(side)
        m_index = (cells - shift[a]) // size - rng.start
        axes.append((m_index, clip_lo, clip_hi, valid))
    return axes


def _offset_box_sums(f: GridFunction, system: int, level: int):
    """Box sums of f over every (system, level) cube meeting the base cube."""
    p = f.prefix()
    axes = _assignment(f.geometry, system, level)
    if f.geometry.dimension == 1:
        _, lo, hi, _ = axes[0]
        return p[hi] - p[lo]
    (_, lo0, hi0, _), (_, lo1, hi1, _) = axes
    return (p[np.ix_(hi0, hi1)] - p[np.ix_(lo0, hi1)]
            - p[np.ix_(hi0, lo1)] + p[np.ix_(lo0, lo1)])


def _gather(geom: GridGeometry, system: int, level: int, table: np.ndarray):
    """Per-cell lookup of a per-offset table, flattened in cell order."""
    axes = _assignment(geom, system, level)
    if geom.dimension == 1:
        return table[axes[0][0]]
    i0, i1 = axes[0][0], axes[1][0]
    return table[np.ix_(i0, i1)].ravel()


def _contained_mask(geom: GridGeometry, system: int, level: int):
    axes = _assignment(geom, system, level)
    if geom.dimension == 1:
        return axes[0][3]
    return np.logical_and.outer(axes[0][3], axes[1][3])


def hl_maximal(f: GridFunction) -> GridFunction:
    """Mf: at each cell, sup over containing cubes of the |f|-average."""
    geom = f.geometry
    absf = abs(f)
    vol = geom.cell_volume
    best = np.abs(f.values).copy()
    for u in range(geom.n_systems):
        for k in range(0, geom.resolution + 1):
            sums = _offset_box_sums(absf, u, k) * vol
            avg = sums * 2.0 ** (k * geom.dimension)
            np.maximum(best, _gather(geom, u, k, avg), out=best)
    return GridFunction(geom, best)


def eta_maximal(f: GridFunction, eta: float) -> GridFunction:
    """M_eta f = M(|f|^eta)^{1/eta} for 0 < eta < 1."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0,1), got {eta}")
    powered = GridFunction(f.geometry, np.abs(f.values) ** eta)
    return hl_maximal(powered).power(1.0 / eta)


def multilinear_maximal(*fs: GridFunction) -> GridFunction:
    """At each cell, sup over containing cubes of prod_i <|f_i|>_Q."""
    if not fs:
        raise ValueError("need at least one function")
    geom = fs[0].geometry
    for f in fs[1:]:
        if f.geometry != geom:
            raise ValueError("geometry mismatch")
    vol = geom.cell_volume
    best = np.zeros(geom.n_cells)
    absfs = [abs(f) for f in fs]
    for u in range(geom.n_systems):
        for k in range(0, geom.resolution + 1):
            scale = 2.0 ** (k * geom.dimension)
            prod = None
            for g in absfs:
                avg = _offset_box_sums(g, u, k) * vol * scale
                prod = avg if prod is None else prod * avg
            np.maximum(best, _gather(geom, u, k, prod), out=best)
    return GridFunction(geom, best)


def weighted_dyadic_maximal(f: GridFunction, s: Weight,
                            system: int = 0) -> GridFunction:
    """M^sigma_D f over the cubes of one shifted system."""
    geom = f.geometry
    f._check_geometry(s)
    fs = GridFunction(geom, np.abs(f.values) * s.values)
    best = np.abs(f.values).copy()
    for k in range(0, geom.resolution + 1):
        num = _offset_box_sums(fs, system, k)
        den = _offset_box_sums(s, system, k)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        np.maximum(best, _gather(geom, system, k, ratio), out=best)
    return GridFunction(geom, best)


def log_maximal(w: Weight) -> GridFunction:
    """M_0 w: sup over containing base-contained cubes of exp(mean log w)."""
    geom = w.geometry
    logw = GridFunction(geom, np.log(w.values))
    vol = geom.cell_volume
    best = w.values.copy()
    for u in range(geom.n_systems):
        for k in range(0, geom.resolution + 1):
            scale = 2.0 ** (k * geom.dimension)
            mean = _offset_box_sums(logw, u, k) * vol * scale
            table = np.where(_contained_mask(geom, u, k), np.exp(mean), -np.inf)
            np.maximum(best, _gather(geom, u, k, table), out=best)
    return GridFunction(geom, best)


# -- balls ---------------------------------------------------------------------


def radius_grid(geom: GridGeometry) -> np.ndarray:
    """Half-dyadic radii 2^-K * 2^{j/2}, from the cell side up to 4."""
    j = np.arange(2 * geom.resolution + 5)
    return geom.cell_side * 2.0 ** (j / 2.0)


def _ball_volume(dimension: int, r: float) -> float:
    return 2.0 * r if dimension == 1 else float(np.pi) * r * r


def ball_average_field(f: GridFunction, r: float) -> np.ndarray:
    """<f>_{B(x,r)} at every cell midpoint x, dividing by the true volume.

    The ball is discretized as the cells whose midpoints lie strictly
    inside it; the function is zero outside the base cube.
    """
    geom = f.geometry
    h = geom.cell_side
    d = int(np.ceil(r / h)) - 1  # largest integer offset with |offset|*h < r
    vol = _ball_volume(geom.dimension, r)
    if geom.dimension == 1:
        p = f.prefix()
        side = geom.cells_per_side
        cells = np.arange(side)
        lo = np.clip(cells - d, 0, side)
        hi = np.clip(cells + d + 1, 0, side)
        return (p[hi] - p[lo]) * geom.cell_volume / vol
    side = geom.cells_per_side
    g = f.grid
    prow = np.zeros((side, side + 1))
    prow[:, 1:] = np.cumsum(g, axis=1)
    out = np.zeros((side, side))
    rr = (r / h) ** 2
    cols = np.arange(side)
    for a in range(-d, d + 1):
        w2 = rr - a * a
        if w2 <= 0:
            continue
        w = int(np.ceil(np.sqrt(w2))) - 1
        row_lo, row_hi = max(0, -a), min(side, side - a)
        if row_lo >= row_hi:
            continue
        lo = np.clip(cols - w, 0, side)
        hi = np.clip(cols + w + 1, 0, side)
        out[row_lo:row_hi] += (prow[row_lo + a:row_hi + a, hi]
                               - prow[row_lo + a:row_hi + a, lo])
    return out.ravel() * geom.cell_volume / vol


def truncated_centered_maximal(f1: GridFunction, f2: GridFunction, cell: int,
                               eps: float, delta: float) -> float:
    """sup over grid radii r in (eps, delta) of prod_i <|f_i|>_{B(x,r)}."""
    if not 0 < eps <= delta:
        raise ValueError("need 0 < eps <= delta")
    f1._check_geometry(f2)
    geom = f1.geometry
    radii = [float(r) for r in radius_grid(geom) if eps < r < delta]
    if not radii:
        return 0.0
    x = midpoints(geom)[cell]
    mids = midpoints(geom)
    dist = np.sqrt(np.sum((mids - x) ** 2, axis=1))
    a1, a2 = np.abs(f1.values), np.abs(f2.values)
    best = 0.0
    for r in radii:
        inside = dist < r
        vol = _ball_volume(geom.dimension, r)
        m1 = float(np.sum(a1[inside])) * geom.cell_volume / vol
        m2 = float(np.sum(a2[inside])) * geom.cell_volume / vol
        best = max(best, m1 * m2)
    return best


def centered_maximal_field(f1: GridFunction, f2: GridFunction,
                           eps: float, delta: float) -> np.ndarray:
    """Truncated centered bilinear maximal function at every cell."""
    f1._check_geometry(f2)
    geom = f1.geometry
    radii = [float(r) for r in radius_grid(geom) if eps < r < delta]
    out = np.zeros(geom.n_cells)
    a1, a2 = abs(f1), abs(f2)
    for r in radii:
        prod = ball_average_field(a1, r) * ball_average_field(a2, r)
        np.maximum(out, prod, out=out)
    return out
