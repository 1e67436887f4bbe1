"""Piecewise-constant functions on the cell grid: averages, norms, BMO.

Functions are extended by zero outside the base cube.  Cube averages
integrate over the clipped cube but divide by the full cube measure |Q|,
so <f>_Q = |Q|^{-1} int_{Q} f holds literally for the zero extension.
Oscillation-type suprema (bmo_norm) run over cubes contained in the base
cube, where the two conventions agree.
"""

from __future__ import annotations

import io
import json

import numpy as np

from .dyadic import (DyadicCube, GridGeometry, cube_box, cube_measure,
                     iter_cubes, midpoints)

WEIGHT_FLOOR = 1e-12


class GridFunction:
    """Immutable cell-indexed values at resolution 2^-K on [0,1)^n."""

    __slots__ = ("geometry", "values", "_prefix")

    def __init__(self, geometry: GridGeometry, values):
        arr = np.array(values, dtype=float).reshape(-1)
        if arr.size != geometry.n_cells:
            raise ValueError(
                f"expected {geometry.n_cells} cell values, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("cell values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "geometry", geometry)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "_prefix", None)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, geometry: GridGeometry, value: float):
        return cls(geometry, np.full(geometry.n_cells, float(value)))

    @classmethod
    def indicator(cls, geometry: GridGeometry, cube: DyadicCube):
        vals = np.zeros(geometry.n_cells)
        g = vals.reshape((geometry.cells_per_side,) * geometry.dimension)
        sl = clipped_slices(geometry, cube)
        if sl is not None:
            g[sl] = 1.0
        return cls(geometry, vals)

    @classmethod
    def from_callable(cls, geometry: GridGeometry, fn):
        """Sample fn at cell midpoints; fn maps (n_cells, n) -> (n_cells,)."""
        return cls(geometry, np.asarray(fn(midpoints(geometry)), dtype=float))

    @classmethod
    def spike(cls, geometry: GridGeometry, cell: int, value: float = 1.0):
        vals = np.zeros(geometry.n_cells)
        vals[cell] = value
        return cls(geometry, vals)

    # -- views and arithmetic ----------------------------------------------

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape(
            (self.geometry.cells_per_side,) * self.geometry.dimension)

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.geometry, fn(self.values))

    def __abs__(self):
        return self.map(np.abs)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check_geometry(other)
            return GridFunction(self.geometry, self.values * other.values)
        return GridFunction(self.geometry, self.values * float(other))

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check_geometry(other)
            return GridFunction(self.geometry, self.values + other.values)
        return GridFunction(self.geometry, self.values + float(other))

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check_geometry(other)
            return GridFunction(self.geometry, self.values - other.values)
        return GridFunction(self.geometry, self.values - float(other))

    def power(self, exponent: float) -> "GridFunction":
        return GridFunction(self.geometry, self.values**exponent)

    def _check_geometry(self, other: "GridFunction"):
        if other.geometry != self.geometry:
            raise ValueError("geometry mismatch")

    # -- integration --------------------------------------------------------

    def prefix(self) -> np.ndarray:
        """Inclusive-exclusive integral image, shape (side+1,)*n, unit cells."""
        if self._prefix is None:
            g = self.grid
            p = g
            for axis in range(self.geometry.dimension):
                p = np.cumsum(p, axis=axis)
            padded = np.zeros(tuple(s + 1 for s in g.shape))
            padded[(slice(1, None),) * self.geometry.dimension] = p
            padded.setflags(write=False)
            object.__setattr__(self, "_prefix", padded)
        return self._prefix

    def box_sum(self, lo, hi) -> float:
        """Sum of cell values over the clipped integer box [lo, hi)."""
        side = self.geometry.cells_per_side
        lo = [min(max(int(a), 0), side) for a in lo]
        hi = [min(max(int(b), 0), side) for b in hi]
        if any(a >= b for a, b in zip(lo, hi)):
            return 0.0
        p = self.prefix()
        if self.geometry.dimension == 1:
            return float(p[hi[0]] - p[lo[0]])
        return float(p[hi[0], hi[1]] - p[lo[0], hi[1]]
                     - p[hi[0], lo[1]] + p[lo[0], lo[1]])

    def cube_integral(self, cube: DyadicCube) -> float:
        """Integral over the clipped cube (zero extension outside the base)."""
        lo, size = cube_box(self.geometry, cube)
        hi = [a + size for a in lo]
        return self.box_sum(lo, hi) * self.geometry.cell_volume


class Weight(GridFunction):
    """Strictly positive grid function; values below 1e-12 are rejected."""

    def __init__(self, geometry, values):
        super().__init__(geometry, values)
        if float(np.min(self.values)) < WEIGHT_FLOOR:
            raise ValueError(
                f"weight values must be >= {WEIGHT_FLOOR}; "
                f"minimum was {np.min(self.values)}")


def as_weight(f: GridFunction) -> Weight:
    return Weight(f.geometry, f.values)


def clipped_slices(geometry: GridGeometry, cube: DyadicCube):
    """Per-axis slices of the cube box clipped to the base cube, or None."""
    lo, size = cube_box(geometry, cube)
    side = geometry.cells_per_side
    sl = []
    for a in lo:
        lo_c, hi_c = max(a, 0), min(a + size, side)
        if lo_c >= hi_c:
            return None
        sl.append(slice(lo_c, hi_c))
    return tuple(sl)


# -- averages and norms ------------------------------------------------------


def average(f: GridFunction, cube: DyadicCube) -> float:
    """<f>_Q = |Q|^{-1} int_Q f with zero extension outside the base cube."""
    return f.cube_integral(cube) / cube_measure(cube, f.geometry.dimension)


def p_average(f: GridFunction, cube: DyadicCube, p0: float) -> float:
    """(|Q|^{-1} int_Q |f|^{p0})^{1/p0} for p0 >= 1."""
    if p0 < 1:
        raise ValueError(f"p0 must be >= 1, got {p0}")
    sl = clipped_slices(f.geometry, cube)
    if sl is None:
        return 0.0
    mass = float(np.sum(np.abs(f.grid[sl]) ** p0)) * f.geometry.cell_volume
    return (mass / cube_measure(cube, f.geometry.dimension)) ** (1.0 / p0)


def weighted_average(f: GridFunction, cube: DyadicCube, s: Weight) -> float:
    """sigma(Q)^{-1} int_Q f dsigma over the clipped cube."""
    f._check_geometry(s)
    sl = clipped_slices(f.geometry, cube)
    if sl is None:
        raise ValueError(f"cube {cube} carries no weight mass on the grid")
    num = float(np.sum(f.grid[sl] * s.grid[sl]))
    den = float(np.sum(s.grid[sl]))
    if den <= 0.0:
        raise ValueError(f"zero weight mass on {cube}")
    return num / den


def lp_norm(f: GridFunction, p: float, w: Weight | None = None) -> float:
    """(int |f|^p w)^{1/p}; Lebesgue measure when w is None."""
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    density = np.abs(f.values) ** p
    if w is not None:
        f._check_geometry(w)
        density = density * w.values
    return float(np.sum(density) * f.geometry.cell_volume) ** (1.0 / p)


def log_average(w: Weight, cube: DyadicCube) -> float:
    """exp of the mean of log w over the cube."""
    logw = GridFunction(w.geometry, np.log(w.values))
    return float(np.exp(average(logw, cube)))


def bmo_norm(b: GridFunction) -> float:
    """Largest mean oscillation over base-contained cubes of all systems."""
    geom = b.geometry
    vol = geom.cell_volume
    best = 0.0
    for cube in iter_cubes(geom, contained=True):
        sl = clipped_slices(geom, cube)
        block = b.grid[sl]
        measure = cube_measure(cube, geom.dimension)
        mean = float(np.sum(block)) * vol / measure
        osc = float(np.sum(np.abs(block - mean))) * vol / measure
        if osc > best:
            best = osc
    return best


# -- serialization ------------------------------------------------------------


def to_csv(f: GridFunction) -> str:
    buf = io.StringIO()
    buf.write("index,value\n")
    for i, v in enumerate(f.values):
        buf.write(f"{i},{float(v)!r}\n")
    return buf.getvalue()


def from_csv(geometry: GridGeometry, text: str) -> GridFunction:
    vals = np.zeros(geometry.n_cells)
    lines = text.strip().splitlines()
    if lines and lines[0].strip() == "index,value":
        lines = lines[1:]
    for line in lines:
        idx, val = line.split(",")
        vals[int(idx)] = float(val)
    return GridFunction(geometry, vals)


def to_json(f: GridFunction) -> str:
    return json.dumps({
        "dimension": f.geometry.dimension,
        "resolution": f.geometry.resolution,
        "values": [float(v) for v in f.values],
    }, sort_keys=True)


def from_json(text: str) -> GridFunction:
    rec = json.loads(text)
    geom = GridGeometry(rec["dimension"], rec["resolution"])
    return GridFunction(geom, rec["values"])
