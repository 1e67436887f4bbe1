"""Seeded input generators shared by the harness, the CLI and the tests."""

from __future__ import annotations

import numpy as np

from .dyadic import DyadicCube, GridGeometry, children
from .gridfn import GridFunction, Weight
from .weights import ExponentTuple, derived_sigmas, nu_weight


def two_step_weight(geom: GridGeometry, rng: np.random.Generator,
                    lo: float = 0.25, hi: float = 4.0) -> Weight:
    """Two heights split at a random dyadic point along axis 0."""
    side = geom.cells_per_side
    split = int(rng.integers(1, side))
    a = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    b = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    vals = np.full((side,) * geom.dimension, b)
    vals[(slice(0, split),) + (slice(None),) * (geom.dimension - 1)] = a
    return Weight(geom, vals.ravel())


def step_weight(geom: GridGeometry, left: float, right: float,
                split_frac: float = 0.5) -> Weight:
    side = geom.cells_per_side
    split = max(1, min(side - 1, int(round(split_frac * side))))
    vals = np.full((side,) * geom.dimension, float(right))
    vals[(slice(0, split),) + (slice(None),) * (geom.dimension - 1)] = float(left)
    return Weight(geom, vals.ravel())


def weight_tuple(geom: GridGeometry, rng: np.random.Generator,
                 P: ExponentTuple, lo: float = 0.25, hi: float = 4.0):
    """Random base weights w_i with their conjugates and output weight."""
    ws = [two_step_weight(geom, rng, lo, hi) for _ in range(P.m)]
    return nu_weight(ws, P), derived_sigmas(ws, P), ws


def bmo_symbol(geom: GridGeometry, rng: np.random.Generator,
               terms: int = 4) -> GridFunction:
    """Random sum of signed cube indicators; bounded mean oscillation by
    construction."""
    vals = np.zeros(geom.n_cells)
    grid = vals.reshape((geom.cells_per_side,) * geom.dimension)
    for _ in range(terms):
        k = int(rng.integers(1, max(2, geom.resolution)))
        off = tuple(int(rng.integers(0, 2**k)) for _ in range(geom.dimension))
        cube = DyadicCube(0, k, off)
        from .gridfn import clipped_slices
        sl = clipped_slices(geom, cube)
        if sl is not None:
            grid[sl] += float(rng.uniform(-1.0, 1.0))
    return GridFunction(geom, vals)


def random_step_function(geom: GridGeometry, rng: np.random.Generator,
                         blocks: int = 5, nonneg: bool = True) -> GridFunction:
    vals = np.zeros(geom.n_cells)
    grid = vals.reshape((geom.cells_per_side,) * geom.dimension)
    for _ in range(blocks):
        k = int(rng.integers(0, geom.resolution + 1))
        off = tuple(int(rng.integers(0, 2**k)) for _ in range(geom.dimension))
        from .gridfn import clipped_slices
        sl = clipped_slices(geom, DyadicCube(0, k, off))
        if sl is not None:
            grid[sl] += float(rng.uniform(0.0, 1.0) if nonneg
                              else rng.uniform(-1.0, 1.0))
    return GridFunction(geom, vals)


def dyadic_valued_function(geom: GridGeometry, rng: np.random.Generator,
                           denominator: int = 32,
                           top: int = 256) -> GridFunction:
    """Nonnegative values k/denominator: cube averages stay exact in floats."""
    vals = rng.integers(0, top, geom.n_cells).astype(float) / denominator
    return GridFunction(geom, vals)


def random_sparse_family(geom: GridGeometry, rng: np.random.Generator,
                         system: int = 0,
                         max_level: int | None = None) -> list[DyadicCube]:
    """A 1/2-sparse family built by picking at most half the grandchildren
    mass below each member."""
    if max_level is None:
        max_level = geom.resolution
    top = DyadicCube(system, 0, (0,) * geom.dimension)
    members = []
    budget = 2 ** (2 * geom.dimension - 1)   # half of the 4^n grandchildren

    def recurse(cube):
        members.append(cube)
        if cube.level + 2 > max_level:
            return
        grand = [g for c in children(cube, geom.dimension)
                 for g in children(c, geom.dimension)]
        count = int(rng.integers(0, budget + 1))
        picks = rng.choice(len(grand), size=count, replace=False)
        for idx in sorted(picks):
            recurse(grand[idx])

    recurse(top)
    return members


def indicator_pair(geom: GridGeometry, rng: np.random.Generator):
    out = []
    for _ in range(2):
        k = int(rng.integers(0, max(1, geom.resolution - 1)))
        off = tuple(int(rng.integers(0, 2**k)) for _ in range(geom.dimension))
        out.append(GridFunction.indicator(geom, DyadicCube(0, k, off)))
    return tuple(out)
