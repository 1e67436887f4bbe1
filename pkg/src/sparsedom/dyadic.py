"""Standard and shifted dyadic cube systems over a finite cell grid.

The ambient domain is the unit cube [0,1)^n split into 2^{nK} half-open
cells of side 2^-K.  A cube is identified by (system, level, offset): the
system index u encodes a digit vector in {0,1,2}^n (axis 0 is the most
significant base-3 digit) and the cube realizes to

    2^-k * ([0,1)^n + m + (-1)^k * u/3)        componentwise.

For grid computation the 1/3 shift is snapped to the nearest multiple of
the cell side.  Because round(r/3) + round(2r/3) = r exactly for integer
r, snapped children tile their snapped parent cell-exactly, so nesting
within one system survives quantization.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

LEVEL_MIN = -2


class GeometryError(ValueError):
    """A cube or ball cannot be represented on the configured grid."""


@dataclass(frozen=True)
class GridGeometry:
    dimension: int
    resolution: int

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise GeometryError(f"dimension must be 1 or 2, got {self.dimension}")
        if not 0 <= self.resolution <= 14:
            raise GeometryError(f"resolution out of range: {self.resolution}")

    @property
    def cells_per_side(self) -> int:
        return 1 << self.resolution

    @property
    def n_cells(self) -> int:
        return self.cells_per_side**self.dimension

    @property
    def cell_side(self) -> float:
        return 2.0**-self.resolution

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.resolution * self.dimension)

    @property
    def n_systems(self) -> int:
        return 3**self.dimension


@lru_cache(maxsize=None)
def midpoints(geom: GridGeometry) -> np.ndarray:
    """Cell midpoints as an (n_cells, dimension) array in C (row-major) order."""
    side = geom.cells_per_side
    axes = [np.arange(side) + 0.5] * geom.dimension
    mesh = np.meshgrid(*axes, indexing="ij")
    out = np.stack([m.ravel() for m in mesh], axis=1) * geom.cell_side
    out.setflags(write=False)
    return out


def system_digits(system: int, dimension: int) -> tuple[int, ...]:
    if not 0 <= system < 3**dimension:
        raise GeometryError(f"system index {system} out of range for n={dimension}")
    return tuple((system // 3**(dimension - 1 - a)) % 3 for a in range(dimension))


@dataclass(frozen=True, order=True)
class DyadicCube:
    system: int
    level: int
    offset: tuple[int, ...]


def _snap_third(r: int) -> int:
    # nearest integer to r/3; the remainder is never 1/2 so ties cannot occur
    q, rem = divmod(abs(r), 3)
    if rem == 2:
        q += 1
    return q if r >= 0 else -q


def snapped_shift(geom: GridGeometry, system: int, level: int) -> tuple[int, ...]:
    """Per-axis shift of the (system, level) lattice, in cells."""
    if level > geom.resolution:
        raise GeometryError(f"level {level} finer than resolution {geom.resolution}")
    if level < LEVEL_MIN:
        raise GeometryError(f"level {level} below minimum {LEVEL_MIN}")
    size = 1 << (geom.resolution - level)
    sign = -1 if level % 2 else 1
    digits = system_digits(system, geom.dimension)
    return tuple(_snap_third(sign * d * size) for d in digits)


def cube_box(geom: GridGeometry, cube: DyadicCube) -> tuple[tuple[int, ...], int]:
    """Snapped cell-lattice box: (per-axis lower corner, side length in cells)."""
    shift = snapped_shift(geom, cube.system, cube.level)
    size = 1 << (geom.resolution - cube.level)
    lo = tuple(m * size + t for m, t in zip(cube.offset, shift))
    return lo, size


def cube_box_real(geom: GridGeometry, cube: DyadicCube):
    """Snapped box in real coordinates: (lo array, hi array)."""
    lo, size = cube_box(geom, cube)
    lo = np.asarray(lo, dtype=float) * geom.cell_side
    return lo, lo + size * geom.cell_side


def cube_realize(cube: DyadicCube, dimension: int):
    """Exact half-open box of the defining formula (no lattice snapping)."""
    digits = system_digits(cube.system, dimension)
    sign = -1 if cube.level % 2 else 1
    scale = 2.0**-cube.level
    lo = np.array([scale * (m + sign * d / 3.0) for m, d in zip(cube.offset, digits)])
    return lo, lo + scale


def cube_measure(cube: DyadicCube, dimension: int) -> float:
    return 2.0 ** (-cube.level * dimension)


def children(cube: DyadicCube, dimension: int) -> list[DyadicCube]:
    """The 2^n cubes of the next level that partition this cube."""
    digits = system_digits(cube.system, dimension)
    sign = -1 if cube.level % 2 else 1
    base = [2 * m + sign * d for m, d in zip(cube.offset, digits)]
    out = []
    for corner in itertools.product((0, 1), repeat=dimension):
        out.append(DyadicCube(cube.system, cube.level + 1,
                              tuple(b + j for b, j in zip(base, corner))))
    return out


def parent(cube: DyadicCube, dimension: int) -> DyadicCube:
    if cube.level - 1 < LEVEL_MIN:
        raise GeometryError(f"parent of level {cube.level} is below minimum level")
    digits = system_digits(cube.system, dimension)
    sign = -1 if cube.level % 2 else 1
    off = tuple((m + sign * d) // 2 for m, d in zip(cube.offset, digits))
    return DyadicCube(cube.system, cube.level - 1, off)


def box_contains(outer_lo, outer_size, inner_lo, inner_size) -> bool:
    return all(ol <= il and il + inner_size <= ol + outer_size
               for ol, il in zip(outer_lo, inner_lo))


def boxes_equal(lo_a, size_a, lo_b, size_b) -> bool:
    return size_a == size_b and tuple(lo_a) == tuple(lo_b)


def offset_range(geom: GridGeometry, system: int, level: int, axis: int,
                 contained: bool) -> range:
    """Offsets m on one axis whose cube meets (or sits inside) the base cube."""
    shift = snapped_shift(geom, system, level)[axis]
    size = 1 << (geom.resolution - level)
    side = geom.cells_per_side
    if contained:
        m_lo = -(shift // size)          # ceil(-shift/size)
        m_hi = (side - shift - size) // size
    else:
        m_lo = -((shift + size - 1) // size)
        m_hi = (side - 1 - shift) // size
    return range(m_lo, m_hi + 1)


def iter_cubes(geom: GridGeometry, systems=None, levels=None, contained=True):
    """All cubes of the requested systems/levels, default levels 0..K."""
    if systems is None:
        systems = range(geom.n_systems)
    if levels is None:
        levels = range(0, geom.resolution + 1)
    for u in systems:
        for k in levels:
            ranges = [offset_range(geom, u, k, a, contained)
                      for a in range(geom.dimension)]
            for m in itertools.product(*ranges):
                yield DyadicCube(u, k, m)


def cube_containing_cell(geom: GridGeometry, system: int, level: int,
                         cell: tuple[int, ...]) -> DyadicCube:
    shift = snapped_shift(geom, system, level)
    size = 1 << (geom.resolution - level)
    off = tuple((c - t) // size for c, t in zip(cell, shift))
    return DyadicCube(system, level, off)


def _ball_in_box(center, r, lo_real, hi_real) -> bool:
    return all(lo <= c - r and c + r <= hi
               for c, lo, hi in zip(center, lo_real, hi_real))


def _candidate_cubes(geom, system, level, center):
    """Cubes of (system, level) near the point, by perturbing the offset."""
    digits = system_digits(system, geom.dimension)
    sign = -1 if level % 2 else 1
    scale = 2.0**-level
    base = [math.floor(c / scale - sign * d / 3.0) for c, d in zip(center, digits)]
    for delta in itertools.product((-1, 0, 1), repeat=geom.dimension):
        yield DyadicCube(system, level, tuple(b + e for b, e in zip(base, delta)))


def cube_for_ball(geom: GridGeometry, center, r: float) -> DyadicCube:
    """A cube containing B(center, r) with sidelength strictly between 6r and 12r.

    Searches the 3^n shifted systems at the unique admissible level.
    """
    if r <= 0:
        raise GeometryError("ball radius must be positive")
    k_guess = math.floor(-math.log2(6.0 * r))
    level = None
    for k in (k_guess - 1, k_guess, k_guess + 1):
        side = 2.0**-k
        if 6.0 * r < side < 12.0 * r:
            level = k
            break
    if level is None:
        raise GeometryError(f"no admissible sidelength in (6r, 12r) for r={r}")
    if level > geom.resolution:
        raise GeometryError(
            f"ball radius {r} needs level {level} finer than resolution")
    if level < LEVEL_MIN:
        raise GeometryError(f"ball radius {r} exceeds the representable region")
    for u in range(geom.n_systems):
        for cand in _candidate_cubes(geom, u, level, center):
            lo, hi = cube_box_real(geom, cand)
            if _ball_in_box(center, r, lo, hi):
                return cand
    raise GeometryError(
        f"no system at level {level} contains B({center}, {r}); "
        "radius too close to the cell scale")


def cube_for_ball_within(geom: GridGeometry, q0: DyadicCube, center,
                         r: float) -> DyadicCube:
    """A cube Q with B(center, r) subset Q subset q0 and sidelength <= 12r."""
    if r <= 0:
        raise GeometryError("ball radius must be positive")
    q0_lo, q0_size = cube_box(geom, q0)
    lo0, hi0 = cube_box_real(geom, q0)
    if not _ball_in_box(center, r, lo0, hi0):
        raise GeometryError("ball is not inside the reference cube")
    if 2.0**-q0.level <= 12.0 * r:
        return q0
    k_start = max(q0.level + 1, math.ceil(-math.log2(12.0 * r)))
    for k in range(k_start, geom.resolution + 1):
        for u in range(geom.n_systems):
            for cand in _candidate_cubes(geom, u, k, center):
                lo, hi = cube_box_real(geom, cand)
                if not _ball_in_box(center, r, lo, hi):
                    continue
                c_lo, c_size = cube_box(geom, cand)
                if box_contains(q0_lo, q0_size, c_lo, c_size):
                    return cand
    raise GeometryError(
        f"no cube of sidelength <= 12r fits B({center}, {r}) inside {q0}")
