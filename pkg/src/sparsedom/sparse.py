"""Sparse cube families, sparse operators, and the domination recursion.

The recursion follows the stopping scheme: on a node Q0, the exceptional
set where either the localized maximal truncation or the localized
bilinear maximal function exceeds its threshold is covered by maximal
dyadic cubes (union of systems) of exceptional density above 1/2; the
threshold doubles until the selected cubes carry at most eps_n of the
node's mass and the pointwise recursion bound validates cellwise.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .calibration import CalibrationConstants
from .dyadic import (DyadicCube, GridGeometry, box_contains, cube_box,
                     cube_measure, snapped_shift)
from .gridfn import GridFunction, Weight, average, clipped_slices, p_average, \
    weighted_average
from .maximal import multilinear_maximal
from .report import VerificationReport, make_report
from .czo import Kernel, TruncationField


class DominationError(RuntimeError):
    """The recursion failed to validate within the doubling budget."""


@dataclass(frozen=True)
class SparseFamily:
    """A set of cubes with a declared sparseness parameter."""
    cubes: tuple[DyadicCube, ...]
    gamma: float

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("sparseness parameter must lie in (0, 1)")
        object.__setattr__(self, "cubes", tuple(sorted(set(self.cubes))))

    def to_json(self) -> list:
        return [{"system": c.system, "level": c.level,
                 "offset": list(c.offset)} for c in self.cubes]


def _proper_subset(geom, inner: DyadicCube, outer: DyadicCube) -> bool:
    ilo, isz = cube_box(geom, inner)
    olo, osz = cube_box(geom, outer)
    if isz == osz and ilo == olo:
        return False
    return box_contains(olo, osz, ilo, isz)


def family_children(geom: GridGeometry, cubes) -> dict:
    """For each member, its maximal strict-subset members (by realized box)."""
    members = sorted(set(cubes))
    out = {}
    for s in members:
        inside = [q for q in members if _proper_subset(geom, q, s)]
        maximal = [q for q in inside
                   if not any(_proper_subset(geom, q, r) for r in inside
                              if r != q)]
        out[s] = maximal
    return out

def child_mass_ratios(geom: GridGeometry, cubes) -> dict:
    n = geom.dimension
    ratios = {}
    for s, kids in family_children(geom, cubes).items():
        mass = sum(cube_measure(q, n) for q in kids)
        ratios[s] = mass / cube_measure(s, n)
    return ratios


def verify_sparseness(geom: GridGeometry, cubes, gamma_s: float) -> VerificationReport:
    """Max child-mass ratio over the members, compared against gamma_s."""
    if not 0 < gamma_s < 1:
        raise ValueError("gamma_s must lie in (0, 1)")
    ratios = child_mass_ratios(geom, cubes)
    if not ratios:
        return make_report("sparseness", 0.0, gamma_s, 1.0, members=0)
    worst = max(ratios, key=lambda q: ratios[q])
    return make_report("sparseness", ratios[worst], gamma_s, 1.0,
                       members=len(ratios), worst=str(worst))


def sparse_apply(cubes, f1: GridFunction, f2: GridFunction) -> GridFunction:
    """A_S(f1, f2) = sum_Q <f1>_Q <f2>_Q 1_Q."""
    f1._check_geometry(f2)
    geom = f1.geometry
    out = np.zeros(f1.grid.shape)
    for cube in cubes:
        sl = clipped_slices(geom, cube)
        if sl is None:
            continue
        out[sl] += average(f1, cube) * average(f2, cube)
    return GridFunction(geom, out.ravel())


def general_sparse_apply(cubes, f1: GridFunction, f2: GridFunction,
                         p0: float, gamma: float) -> GridFunction:
    """A_{p0,gamma,S} = (sum_Q [prod_i <f_i>_{Q,p0}]^gamma 1_Q)^{1/gamma}."""
    if p0 < 1:
        raise ValueError("p0 must be >= 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    f1._check_geometry(f2)
    geom = f1.geometry
    acc = np.zeros(f1.grid.shape)
    for cube in cubes:
        sl = clipped_slices(geom, cube)
        if sl is None:
            continue
        term = p_average(f1, cube, p0) * p_average(f2, cube, p0)
        acc[sl] += term**gamma
    return GridFunction(geom, acc.ravel() ** (1.0 / gamma))


# -- parallel stopping families --------------------------------------------------


@dataclass
class StoppingFamily:
    cubes: list[DyadicCube]
    parent: dict                      # every member cube -> its stopping parent
    excluded: list[DyadicCube] = field(default_factory=list)


def stopping_family(f: GridFunction, s: Weight, cubes,
                    top: DyadicCube) -> StoppingFamily:
    """Recursive stopping cubes: children of F are the maximal members with
    weighted average above twice the parent's."""
    members = sorted(set(cubes))
    if top not in members:
        raise ValueError("top cube must belong to the family")
    geom = f.geometry
    top_lo, top_sz = cube_box(geom, top)
    for q in members:
        lo, sz = cube_box(geom, q)
        if not box_contains(top_lo, top_sz, lo, sz):
            raise ValueError(f"family member {q} is not inside the top cube")
    wavg = {}
    excluded = []
    for q in members:
        try:
            wavg[q] = weighted_average(f, q, s)
        except ValueError:
            excluded.append(q)
    members = [q for q in members if q in wavg]

    stopping = [top]
    frontier = [top]
    while frontier:
        nxt = []
        for node in frontier:
            violators = [q for q in members
                         if _proper_subset(geom, q, node)
                         and wavg[q] > 2.0 * wavg[node]]
            maximal = [q for q in violators
                       if not any(_proper_subset(geom, q, r)
                                  for r in violators if r != q)]
            nxt.extend(maximal)
        stopping.extend(nxt)
        frontier = nxt

    by_size = sorted(stopping, key=lambda q: (cube_measure(q, geom.dimension),
                                              q), reverse=False)
    parent = {}
    for q in members:
        lo, sz = cube_box(geom, q)
        for cand in by_size:
            clo, csz = cube_box(geom, cand)
            if box_contains(clo, csz, lo, sz):
                parent[q] = cand
                break
    return StoppingFamily(sorted(set(stopping)), parent, excluded)


# -- the domination recursion ----------------------------------------------------


@dataclass
class DominationResult:
    families: dict                    # system index -> SparseFamily
    constant: float
    trace: list
    dropped: int = 0

    def all_cubes(self):
        for fam in self.families.values():
            yield from fam.cubes

    def to_json(self) -> dict:
        return {
            "constant": self.constant,
            "dropped": self.dropped,
            "families": {str(u): fam.to_json()
                         for u, fam in sorted(self.families.items())},
            "trace": [{"cube": str(t["cube"]), "c_t0": t["c_t0"],
                       "mass_ratio": t["mass_ratio"],
                       "selected": t["selected"]} for t in self.trace],
        }


def _clip_to_cube(f: GridFunction, cube: DyadicCube) -> GridFunction:
    vals = np.zeros(f.grid.shape)
    sl = clipped_slices(f.geometry, cube)
    if sl is not None:
        vals[sl] = f.grid[sl]
    return GridFunction(f.geometry, vals.ravel())


def _inside_mask(geom: GridGeometry, cube: DyadicCube) -> np.ndarray:
    mask = np.zeros(geom.n_cells, dtype=bool)
    sl = clipped_slices(geom, cube)
    if sl is not None:
        mask.reshape((geom.cells_per_side,) * geom.dimension)[sl] = True
    return mask


def _contained_offsets(geom, system, level, q0_lo, q0_size, axis):
    shift = snapped_shift(geom, system, level)[axis]
    size = 1 << (geom.resolution - level)
    lo = q0_lo[axis]
    hi = q0_lo[axis] + q0_size
    m_lo = -((shift - lo) // size)          # ceil((lo - shift)/size)
    m_hi = (hi - shift - size) // size
    return range(m_lo, m_hi + 1), size, shift


def _cover_exceptional(geom: GridGeometry, e_mask: np.ndarray,
                       q0: DyadicCube) -> list[DyadicCube]:
    """Maximal cubes strictly inside q0 with exceptional density > 1/2."""
    egrid = GridFunction(geom, e_mask.astype(float))
    q0_lo, q0_size = cube_box(geom, q0)
    selected_by_system: dict[int, list] = defaultdict(list)
    for u in range(geom.n_systems):
        kept_boxes = []
        for k in range(q0.level + 1, geom.resolution + 1):
            per_axis = [_contained_offsets(geom, u, k, q0_lo, q0_size, a)
                        for a in range(geom.dimension)]
            size = per_axis[0][1]
            for m in itertools.product(*(pa[0] for pa in per_axis)):
                lo = tuple(mm * size + pa[2] for mm, pa in zip(m, per_axis))
                cells = egrid.box_sum(lo, [a + size for a in lo])
                if cells * 2 <= size**geom.dimension:
                    continue
                if any(box_contains(blo, bsz, lo, size)
                       for blo, bsz in kept_boxes):
                    continue
                kept_boxes.append((lo, size))
                selected_by_system[u].append(DyadicCube(u, k, m))
    merged = [c for u in sorted(selected_by_system)
              for c in selected_by_system[u]]
    merged.sort(key=lambda c: (-cube_measure(c, geom.dimension), c))
    final = []
    for cand in merged:
        lo, sz = cube_box(geom, cand)
        dominated = False
        for kept in final:
            klo, ksz = cube_box(geom, kept)
            if box_contains(klo, ksz, lo, sz):
                dominated = True
                break
        if not dominated:
            final.append(cand)
    return sorted(final)


def dominate_cube(field: TruncationField, f1: GridFunction, f2: GridFunction,
                  q0: DyadicCube, kernel: Kernel,
                  calib: CalibrationConstants):
    """One recursion node: select covering cubes and the threshold used.

    Returns (selected cubes, C_T0, telemetry).  The threshold doubles until
    the selection satisfies the mass bound and the pointwise recursion
    inequality; empty selections are valid.
    """
    geom = f1.geometry
    n = geom.dimension
    avg_product = average(abs(f1), q0) * average(abs(f2), q0)
    c0 = calib.t0_scale * kernel.constant_sum()
    telemetry = {"cube": q0, "c_t0": c0, "mass_ratio": 0.0, "selected": 0,
                 "prop3_margin": 0.0, "cubes": (), "threshold": 0.0}
    if avg_product <= 0.0:
        return [], c0, telemetry
    inside = _inside_mask(geom, q0)
    t_loc = field.localized_sharp(q0)
    m_loc = multilinear_maximal(_clip_to_cube(f1, q0),
                                _clip_to_cube(f2, q0)).values
    smooth = kernel.size_constant + kernel.omega.dini()
    measure_q0 = cube_measure(q0, n)
    for _ in range(calib.max_doublings + 1):
        c1 = c0 / (2.0 * smooth) if smooth > 0 else np.inf
        e_mask = inside & ((t_loc > c0 * avg_product)
                           | (m_loc > c1 * avg_product))
        if not e_mask.any():
            telemetry.update(c_t0=c0)
            return [], c0, telemetry
        selected = _cover_exceptional(geom, e_mask, q0)
        mass = sum(cube_measure(q, n) for q in selected)
        bound = c0 * avg_product
        rhs = np.where(inside, bound, 0.0)
        if selected:
            stack = np.stack([field.localized_sharp(q) for q in selected])
            rhs = rhs + np.max(stack, axis=0)
        margin = float(np.max(t_loc - rhs))
        ok_mass = mass <= calib.sparse_eps * measure_q0 + 1e-12
        ok_point = margin <= 1e-9 * (1.0 + bound)
        if ok_mass and ok_point:
            telemetry.update(c_t0=c0, mass_ratio=mass / measure_q0,
                             selected=len(selected), prop3_margin=margin,
                             cubes=tuple(selected), threshold=bound)
            return selected, c0, telemetry
        c0 *= 2.0
    raise DominationError(
        f"no admissible selection for {q0} within "
        f"{calib.max_doublings} doublings; resolution too coarse "
        "or kernel misconfigured")


def sparse_domination(kernel: Kernel, f1: GridFunction, f2: GridFunction,
                      calib: CalibrationConstants | None = None) -> DominationResult:
    """Assemble per-system sparse families dominating the maximal truncation."""
    calib = calib or CalibrationConstants()
    geom = f1.geometry
    field = TruncationField(kernel, geom, [(f1, f2)])
    base = DyadicCube(0, 0, (0,) * geom.dimension)
    level_floor = geom.resolution - 2
    families: dict[int, set] = defaultdict(set)
    trace = []
    queue = [base]
    visited = set()
    while queue:
        q0 = queue.pop(0)
        if q0 in visited:
            continue
        visited.add(q0)
        families[q0.system].add(q0)
        if q0.level >= level_floor:
            continue
        selected, _, telemetry = dominate_cube(field, f1, f2, q0, kernel,
                                               calib)
        trace.append(telemetry)
        for q in selected:
            if q.level < level_floor:
                queue.append(q)
            else:
                families[q.system].add(q)
    families_out, dropped = {}, 0
    for u, cubes in sorted(families.items()):
        pruned, ndrop = _enforce_sparseness(geom, sorted(cubes),
                                            calib.sparse_eps)
        dropped += ndrop
        families_out[u] = SparseFamily(tuple(pruned), calib.sparse_eps)
    denom = np.zeros(geom.n_cells)
    a1, a2 = abs(f1), abs(f2)
    for fam in families_out.values():
        denom += sparse_apply(fam.cubes, a1, a2).values
    sharp = field.sharp()
    positive = denom > 0
    if positive.any():
        constant = float(np.max(sharp[positive] / denom[positive]))
    else:
        constant = 0.0
    return DominationResult(families_out, constant, trace, dropped)


def _enforce_sparseness(geom, cubes, gamma_s):
    """Drop smallest offending members until the family is gamma_s-sparse."""
    cubes = list(cubes)
    dropped = 0
    while True:
        ratios = child_mass_ratios(geom, cubes)
        bad = [s for s, r in ratios.items() if r > gamma_s + 1e-12]
        if not bad:
            return cubes, dropped
        worst = max(bad, key=lambda q: ratios[q])
        kids = family_children(geom, cubes)[worst]
        victim = min(kids, key=lambda q: (cube_measure(q, geom.dimension), q))
        cubes.remove(victim)
        dropped += 1
