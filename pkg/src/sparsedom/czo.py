"""Bilinear singular integral kernels and their truncated operators.

A kernel K(x, y, z) carries a size constant C_K with
|K| <= C_K / (|x-y| + |x-z|)^{2n}, a modulus of continuity controlling the
three first differences, declared boundedness exponents (q1, q2, q) and a
declared norm bound.  The discretized operator is the midpoint-rule double
sum over cell pairs; the "full" operator excludes pair radii up to one cell
diameter, so the singular diagonal never enters a sum.

Truncations are organized around the shared half-dyadic radius grid: for
each cell x the kernel mass is binned into radial shells by
rho = sqrt(|x-y|^2 + |x-z|^2), and every truncation T_{eps, delta} on grid
radii is a difference of shell prefix sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .dyadic import (DyadicCube, GridGeometry, children, cube_box_real,
                     midpoints)
from .gridfn import GridFunction, average, clipped_slices
from .maximal import (eta_maximal, multilinear_maximal, radius_grid,
                      truncated_centered_maximal)
from .report import make_report
from .calibration import CalibrationConstants


# -- moduli of continuity ------------------------------------------------------


class ModulusOfContinuity:
    """Increasing subadditive omega with omega(0) = 0, evaluable on [0, 1].

    `log_value(s)` evaluates omega(e^-s); slowly decaying moduli override it
    so that Dini integrals can be carried far past float underflow of e^-s.
    """

    def __init__(self, fn, label: str, log_fn=None):
        self._fn = fn
        self._log_fn = log_fn
        self.label = label
        self._dini_cache: dict[float, float] = {}
        self._log_dini: float | None = None
        self._spot_check()

    def __call__(self, t):
        return self._fn(np.asarray(t, dtype=float))

    def log_value(self, s):
        if self._log_fn is not None:
            return self._log_fn(np.asarray(s, dtype=float))
        return self._fn(np.exp(-np.asarray(s, dtype=float)))

    def _spot_check(self):
        # Subadditivity is sampled on arguments up to 1/4: the smoothness
        # bound only queries omega at |h|/(|x-y|+|x-z|) <= tau <= 1/2.
        ts = np.linspace(0.0, 1.0, 33)
        vals = self(ts)
        if abs(float(self(0.0))) > 1e-14:
            raise ValueError(f"{self.label}: omega(0) must vanish")
        if np.any(np.diff(vals) < -1e-12):
            raise ValueError(f"{self.label}: omega must be nondecreasing")
        s = np.linspace(0.0, 0.25, 9)
        ss, tt = np.meshgrid(s, s)
        if np.any(self(ss + tt) > self(ss) + self(tt) + 1e-12):
            raise ValueError(f"{self.label}: omega must be subadditive")

    def dini(self, a: float = 1.0) -> float:
        """int_0^1 omega(t)^a dt/t, or +inf when the blocks fail to decay."""
        if a <= 0:
            raise ValueError("Dini exponent must be positive")
        if a not in self._dini_cache:
            self._dini_cache[a] = _log_space_integral(
                lambda s: self.log_value(s) ** a)
        return self._dini_cache[a]

    def log_dini(self) -> float:
        """int_0^1 omega(t) (1 + log(1/t)) dt/t with the same quadrature."""
        if self._log_dini is None:
            self._log_dini = _log_space_integral(
                lambda s: self.log_value(s) * (1.0 + s))
        return self._log_dini


def _log_space_integral(integrand) -> float:
    """Integrate over s in [0, 2^40] on doubling blocks; flag divergence."""
    import warnings
    edges = [0.0, 1.0]
    while edges[-1] < 2.0**40:
        edges.append(edges[-1] * 2.0)
    total = 0.0
    last = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = quad(integrand, lo, hi, limit=200,
                          epsabs=1e-13, epsrel=1e-11)
            total += val
            last = val
    if last > 1e-8 * (1.0 + abs(total)):
        return math.inf
    return total


def modulus_zero() -> ModulusOfContinuity:
    return ModulusOfContinuity(lambda t: np.zeros_like(np.asarray(t, float)),
                               "zero")


def modulus_power(coefficient: float, exponent: float) -> ModulusOfContinuity:
    """omega(t) = c * min(t, 1)^d; subadditive for 0 < d <= 1."""
    if not 0 < exponent <= 1:
        raise ValueError("power modulus needs exponent in (0, 1]")
    c, d = float(coefficient), float(exponent)
    return ModulusOfContinuity(
        lambda t: c * np.minimum(np.asarray(t, float), 1.0) ** d,
        f"{c:g}*t^{d:g}",
        log_fn=lambda s: c * np.exp(-d * np.maximum(np.asarray(s, float), 0.0)))


def modulus_linear(coefficient: float) -> ModulusOfContinuity:
    return modulus_power(coefficient, 1.0)


def modulus_sqrt(coefficient: float = 1.0) -> ModulusOfContinuity:
    return modulus_power(coefficient, 0.5)


def modulus_log_inverse_square() -> ModulusOfContinuity:
    """omega(t) = (1 + log(1/t))^-2, the classic Dini-but-only-just modulus."""
    def fn(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = (1.0 + np.log(1.0 / np.minimum(t[pos], 1.0))) ** -2
        return out
    return ModulusOfContinuity(
        fn, "(1+log(1/t))^-2",
        log_fn=lambda s: (1.0 + np.maximum(np.asarray(s, float), 0.0)) ** -2)


# -- kernels -------------------------------------------------------------------


@dataclass
class Kernel:
    """Bilinear kernel with declared size/smoothness/boundedness data."""
    name: str
    size_constant: float
    smoothness_fraction: float
    omega: ModulusOfContinuity
    exponents: tuple[float, float, float]
    norm_bound: float

    def evaluate(self, x, y, z) -> np.ndarray:
        """K at broadcastable point arrays of shape (..., n)."""
        raise NotImplementedError

    def matrix(self, x, geom: GridGeometry) -> np.ndarray:
        """K(x, y_j, z_k) over all midpoint pairs; shape (n_cells, n_cells)."""
        mids = midpoints(geom)
        return self.evaluate(x[None, None, :], mids[:, None, :],
                             mids[None, :, :])

    def constant_sum(self) -> float:
        return self.size_constant + self.omega.dini() + self.norm_bound

    def _construction_check(self, dimension: int) -> None:
        self.validate_conditions(dimension, np.random.default_rng(1234),
                                 n_samples=60)

    def validate_conditions(self, dimension: int, rng: np.random.Generator,
                            n_samples: int = 200) -> None:
        """Spot-check the size and smoothness bounds on random triples."""
        n = dimension
        for _ in range(n_samples):
            x = rng.uniform(-0.5, 1.5, n)
            y = x + rng.uniform(-1.0, 1.0, n)
            z = x + rng.uniform(-1.0, 1.0, n)
            dsum = np.linalg.norm(x - y) + np.linalg.norm(x - z)
            if dsum <= 1e-9:
                continue
            val = float(self.evaluate(x, y, z))
            if abs(val) > self.size_constant / dsum ** (2 * n) + 1e-12:
                raise ValueError(f"{self.name}: size condition violated")
            hmax = self.smoothness_fraction * max(np.linalg.norm(x - y),
                                                  np.linalg.norm(x - z))
            if hmax <= 0:
                continue
            h = rng.uniform(-1.0, 1.0, n)
            h *= rng.uniform(0.1, 1.0) * hmax / max(np.linalg.norm(h), 1e-30)
            diff = (abs(float(self.evaluate(x + h, y, z)) - val)
                    + abs(float(self.evaluate(x, y + h, z)) - val)
                    + abs(float(self.evaluate(x, y, z + h)) - val))
            bound = float(self.omega(np.linalg.norm(h) / dsum)) / dsum ** (2 * n)
            if diff > bound + 1e-12:
                raise ValueError(f"{self.name}: smoothness condition violated")


class ZeroKernel(Kernel):
    def __init__(self):
        super().__init__("zero", 0.0, 0.5, modulus_zero(), (2.0, 2.0, 1.0), 0.0)

    def evaluate(self, x, y, z):
        shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(y)[:-1],
                                    np.shape(z)[:-1])
        return np.zeros(shape)

    def matrix(self, x, geom):
        return np.zeros((geom.n_cells, geom.n_cells))


def _bump(s: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1-s^2)) on |s| < 1, zero outside; peak value 1."""
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


_BUMP_SLOPE = float(np.max(np.abs(np.gradient(
    _bump(np.linspace(-1, 1, 20001)), 2.0 / 20000)))) * 1.05
_BUMP_MASS_1D = float(np.trapezoid(_bump(np.linspace(-1, 1, 20001)),
                                   np.linspace(-1, 1, 20001)))
_BUMP_MASS_2D = float(2.0 * np.pi * np.trapezoid(
    _bump(np.linspace(0, 1, 20001)) * np.linspace(0, 1, 20001),
    np.linspace(0, 1, 20001)))


class SmoothTensorKernel(Kernel):
    """K = A * phi((x-y)/w) phi((x-z)/w) with a smooth compact bump phi.

    Nonnegative, supported where both distances are below w.  The size
    constant is the numeric maximum of |K| (|x-y|+|x-z|)^{2n}; the modulus
    is linear with the analytic coefficient 6 A L (4w)^{2n+1} where L is
    the bump slope, valid because any nonzero difference happens at
    |x-y|+|x-z| <= 4w.
    """

    def __init__(self, dimension: int, width: float = 0.25,
                 amplitude: float = 1.0):
        if not 0 < width <= 1.0:
            raise ValueError("width must lie in (0, 1]")
        self.dimension = dimension
        self.width = float(width)
        self.amplitude = float(amplitude)
        n = dimension
        a = np.linspace(0.0, width, 400)
        prof = _bump(a / width)
        grid = (prof[:, None] * prof[None, :]
                * (a[:, None] + a[None, :]) ** (2 * n))
        c_size = self.amplitude * float(np.max(grid)) * 1.02
        slope = _BUMP_SLOPE / width
        c_omega = 6.0 * self.amplitude * slope * (4.0 * width) ** (2 * n + 1)
        # Young: ||T||_{L2 x L2 -> L1} <= A ||phi||_1^2
        phi_mass = (_BUMP_MASS_1D * width if n == 1
                    else _BUMP_MASS_2D * width**2)
        super().__init__("smooth_tensor", c_size, 0.5,
                         modulus_linear(c_omega), (2.0, 2.0, 1.0),
                         self.amplitude * phi_mass**2)
        self._construction_check(n)

    def _profile(self, v: np.ndarray) -> np.ndarray:
        dist = np.sqrt(np.sum(v * v, axis=-1))
        return _bump(dist / self.width)

    def evaluate(self, x, y, z):
        x, y, z = (np.asarray(p, dtype=float) for p in (x, y, z))
        return self.amplitude * self._profile(x - y) * self._profile(x - z)

    def matrix(self, x, geom):
        mids = midpoints(geom)
        row = self._profile(x[None, :] - mids)
        return self.amplitude * np.outer(row, row)


class TruncatedHomogeneousKernel(Kernel):
    """K = A * Omega(u) / max(|x-y|+|x-z|, r_t)^{2n} with Holder angular part.

    u is the direction of (y-x, z-x) on the unit sphere of R^{2n} and
    Omega(u) = 1 + sgn(u_1)|u_1|^holder / 2 (or the signed variant
    sgn(u_1)|u_1|^holder).  The blow-up is truncated at scale r_t, which
    keeps the kernel bounded; the smoothness coefficient is calibrated on a
    deterministic sample with a factor-2 margin.
    """

    def __init__(self, dimension: int, holder: float = 0.7,
                 truncation: float = 0.05, amplitude: float = 1.0,
                 signed: bool = False):
        if not 0 < holder <= 1:
            raise ValueError("holder exponent must lie in (0, 1]")
        if truncation <= 0:
            raise ValueError("truncation scale must be positive")
        self.dimension = dimension
        self.holder = float(holder)
        self.truncation = float(truncation)
        self.amplitude = float(amplitude)
        self.signed = bool(signed)
        n = dimension
        c_size = self.amplitude * (1.0 if signed else 1.5)
        c_omega = self._calibrate_smoothness(n)
        norm_bound = self._schur_bound(n)
        super().__init__("homogeneous", c_size, 0.5,
                         modulus_power(c_omega, holder), (2.0, 2.0, 1.0),
                         norm_bound)
        self._construction_check(n)

    def _angular(self, u1: np.ndarray) -> np.ndarray:
        core = np.sign(u1) * np.abs(u1) ** self.holder
        return core if self.signed else 1.0 + 0.5 * core

    def evaluate(self, x, y, z):
        x, y, z = (np.asarray(p, dtype=float) for p in (x, y, z))
        dy = y - x
        dz = z - x
        rho = np.sqrt(np.sum(dy * dy, axis=-1)) + np.sqrt(
            np.sum(dz * dz, axis=-1))
        norm = np.sqrt(np.sum(dy * dy, axis=-1) + np.sum(dz * dz, axis=-1))
        with np.errstate(invalid="ignore", divide="ignore"):
            u1 = np.where(norm > 0, dy[..., 0] / np.where(norm > 0, norm, 1.0),
                          0.0)
        denom = np.maximum(rho, self.truncation) ** (2 * self.dimension)
        return self.amplitude * self._angular(u1) / denom

    def _calibrate_smoothness(self, n: int) -> float:
        rng = np.random.default_rng(20240311)
        worst = 0.0
        for _ in range(4000):
            x = rng.uniform(0.0, 1.0, n)
            y = x + rng.uniform(-1.0, 1.0, n)
            z = x + rng.uniform(-1.0, 1.0, n)
            dsum = np.linalg.norm(x - y) + np.linalg.norm(x - z)
            if dsum < 1e-6:
                continue
            hmax = 0.5 * max(np.linalg.norm(x - y), np.linalg.norm(x - z))
            h = rng.uniform(-1.0, 1.0, n)
            h *= rng.uniform(0.05, 1.0) * hmax / max(np.linalg.norm(h), 1e-30)
            val = float(self.evaluate(x, y, z))
            diff = (abs(float(self.evaluate(x + h, y, z)) - val)
                    + abs(float(self.evaluate(x, y + h, z)) - val)
                    + abs(float(self.evaluate(x, y, z + h)) - val))
            t = np.linalg.norm(h) / dsum
            if t <= 0:
                continue
            worst = max(worst, diff * dsum ** (2 * n) / t ** self.holder)
        return 2.0 * worst

    def _schur_bound(self, n: int) -> float:
        # declared bound: sup_{y,z} int |K(x,y,z)| dx on a fixed lattice
        pts = 24 if n == 1 else 8
        axis = (np.arange(pts) + 0.5) / pts
        mesh = np.meshgrid(*([axis] * n), indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=1)
        vol = pts ** (-n)
        worst = 0.0
        for y in grid:
            for z in grid:
                vals = np.abs(self.evaluate(grid, y[None, :], z[None, :]))
                worst = max(worst, float(np.sum(vals)) * vol)
        return worst


KERNELS = {
    "zero": lambda dimension, **kw: ZeroKernel(),
    "smooth_tensor": lambda dimension, **kw: SmoothTensorKernel(dimension, **kw),
    "homogeneous": lambda dimension, **kw: TruncatedHomogeneousKernel(
        dimension, **kw),
}


def make_kernel(name: str, dimension: int, **params) -> Kernel:
    if name not in KERNELS:
        raise ValueError(f"unknown kernel {name!r}; have {sorted(KERNELS)}")
    return KERNELS[name](dimension, **params)


# -- shell decomposition -------------------------------------------------------


def operator_radii(geom: GridGeometry) -> np.ndarray:
    """Grid radii up to the base-cube diameter sqrt(n) (the outer clip)."""
    j_out = 2 * geom.resolution + (0 if geom.dimension == 1 else 1)
    return radius_grid(geom)[:j_out + 1]


def eps0_index(geom: GridGeometry) -> int:
    """Index of the cell diameter sqrt(n) 2^-K on the radius grid."""
    return 0 if geom.dimension == 1 else 1


_BINS_CACHE: dict[GridGeometry, np.ndarray] = {}
_D2_CACHE: dict[GridGeometry, np.ndarray] = {}


def _pair_distance_sq(geom: GridGeometry) -> np.ndarray:
    if geom not in _D2_CACHE:
        mids = midpoints(geom)
        diff = mids[:, None, :] - mids[None, :, :]
        _D2_CACHE[geom] = np.sum(diff * diff, axis=-1)
    return _D2_CACHE[geom]


def _pair_bins(geom: GridGeometry) -> np.ndarray:
    """bins[ix, iy, iz]: shell index of rho(x; y, z) on the operator radii."""
    if geom not in _BINS_CACHE:
        n_cells = geom.n_cells
        if n_cells > 260:
            raise ValueError(
                "kernel quadrature needs n_cells <= 260 "
                f"(got {n_cells}); lower the resolution")
        radii_sq = operator_radii(geom) ** 2
        d2 = _pair_distance_sq(geom)
        bins = np.empty((n_cells, n_cells, n_cells), dtype=np.int8)
        for ix in range(n_cells):
            r2 = d2[ix][:, None] + d2[ix][None, :]
            bins[ix] = np.searchsorted(radii_sq, r2, side="left").astype(np.int8)
        _BINS_CACHE[geom] = bins
    return _BINS_CACHE[geom]


class TruncationField:
    """Shell prefix sums of kernel mass for one or more function pairs.

    C[p, x, b] is the midpoint-rule sum of K(x,y,z) f1(y) f2(z) over cell
    pairs with rho <= r_b, so any truncation on grid radii is a difference
    of two columns.
    """

    def __init__(self, kernel: Kernel, geom: GridGeometry, pairs):
        self.kernel = kernel
        self.geom = geom
        self.radii = operator_radii(geom)
        n_cells = geom.n_cells
        n_bins = len(self.radii)
        bins = _pair_bins(geom)
        mids = midpoints(geom)
        cv2 = geom.cell_volume**2
        g1 = [np.asarray(f1.values) for f1, _ in pairs]
        g2 = [np.asarray(f2.values) for _, f2 in pairs]
        self.C = np.zeros((len(pairs), n_cells, n_bins))
        for ix in range(n_cells):
            km = np.asarray(kernel.matrix(mids[ix], geom), dtype=float)
            km[ix, ix] = 0.0  # the x = y = z pair never contributes
            bx = bins[ix].ravel()
            for p in range(len(pairs)):
                w = (km * np.outer(g1[p], g2[p])).ravel()
                shell = np.bincount(bx, weights=w, minlength=n_bins + 1)
                self.C[p, ix] = np.cumsum(shell[:n_bins])
        self.C *= cv2
        self._tables: dict[int, np.ndarray] = {}

    @property
    def outer_index(self) -> int:
        return len(self.radii) - 1

    def truncated(self, a: int, b: int, pair: int = 0) -> np.ndarray:
        """T over pair radii in (r_a, r_b], per cell."""
        return self.C[pair, :, b] - self.C[pair, :, a]

    def full(self, pair: int = 0) -> np.ndarray:
        """The reference operator: radii in (cell diameter, diameter]."""
        return self.truncated(eps0_index(self.geom), self.outer_index, pair)

    def sharp(self, pair: int = 0) -> np.ndarray:
        """Maximal truncation: sup over grid eps of |T_{eps, diameter}|."""
        C = self.C[pair]
        tail = C[:, -1:] - C[:, :-1]
        return np.max(np.abs(tail), axis=1)

    def _sharp_table(self, pair: int) -> np.ndarray:
        if pair not in self._tables:
            C = self.C[pair]
            prefmin = np.minimum.accumulate(C, axis=1)
            prefmax = np.maximum.accumulate(C, axis=1)
            val = np.zeros_like(C)
            val[:, 1:] = np.maximum(C[:, 1:] - prefmin[:, :-1],
                                    prefmax[:, :-1] - C[:, 1:])
            self._tables[pair] = np.maximum.accumulate(val, axis=1)
        return self._tables[pair]

    def localized_sharp(self, cube: DyadicCube, pair: int = 0) -> np.ndarray:
        """sup over 0 < eps < delta < dist(x, boundary)/2, times 1_cube."""
        lo, hi = cube_box_real(self.geom, cube)
        mids = midpoints(self.geom)
        margins = np.minimum(np.min(mids - lo[None, :], axis=1),
                             np.min(hi[None, :] - mids, axis=1))
        cap = 0.5 * margins
        bmax = np.searchsorted(self.radii, cap, side="left") - 1
        bmax = np.minimum(bmax, self.outer_index)
        table = self._sharp_table(pair)
        out = np.where((margins > 0) & (bmax >= 1),
                       table[np.arange(self.geom.n_cells),
                             np.clip(bmax, 0, None)],
                       0.0)
        return out


def apply_full(kernel: Kernel, f1: GridFunction, f2: GridFunction) -> GridFunction:
    """The discretized operator T_{eps0, diam} with eps0 = one cell diameter."""
    field = TruncationField(kernel, f1.geometry, [(f1, f2)])
    return GridFunction(f1.geometry, field.full())


def maximal_truncation(kernel: Kernel, f1: GridFunction,
                       f2: GridFunction) -> GridFunction:
    field = TruncationField(kernel, f1.geometry, [(f1, f2)])
    return GridFunction(f1.geometry, field.sharp())


def localized_maximal_truncation(kernel: Kernel, cube: DyadicCube,
                                 f1: GridFunction,
                                 f2: GridFunction) -> GridFunction:
    field = TruncationField(kernel, f1.geometry, [(f1, f2)])
    return GridFunction(f1.geometry, field.localized_sharp(cube))


def truncated_apply(kernel: Kernel, f1: GridFunction, f2: GridFunction,
                    eps: float, delta: float) -> GridFunction:
    """T_{eps,delta}: midpoint double sum over eps^2 < |x-y|^2+|x-z|^2 < delta^2."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    geom = f1.geometry
    f1._check_geometry(f2)
    out = np.zeros(geom.n_cells)
    if eps >= delta:
        return GridFunction(geom, out)
    d2 = _pair_distance_sq(geom)
    mids = midpoints(geom)
    cv2 = geom.cell_volume**2
    e2, dl2 = eps * eps, delta * delta
    for ix in range(geom.n_cells):
        r2 = d2[ix][:, None] + d2[ix][None, :]
        mask = (r2 > e2) & (r2 < dl2)
        if not mask.any():
            continue
        km = np.asarray(kernel.matrix(mids[ix], geom), dtype=float)
        km[ix, ix] = 0.0
        w = km * np.outer(f1.values, f2.values)
        out[ix] = np.sum(w[mask]) * cv2
    return GridFunction(geom, out)


def commutator(kernel: Kernel, b_list, f1: GridFunction, f2: GridFunction,
               slot: int) -> GridFunction:
    """[b, T]_slot = b_slot T(f1,f2) - T(.., b_slot f_slot, ..).

    Computed with the factor (b(x) - b(y_slot)) inside the double sum, which
    is the same discretized difference but vanishes identically (in exact
    zeros) when b_slot is constant.
    """
    if slot not in (1, 2):
        raise ValueError("slot must be 1 or 2")
    b = b_list[slot - 1]
    geom = f1.geometry
    f1._check_geometry(f2)
    f1._check_geometry(b)
    bins = _pair_bins(geom)
    mids = midpoints(geom)
    e0 = eps0_index(geom)
    j_out = len(operator_radii(geom)) - 1
    cv2 = geom.cell_volume**2
    out = np.zeros(geom.n_cells)
    for ix in range(geom.n_cells):
        km = np.asarray(kernel.matrix(mids[ix], geom), dtype=float)
        km[ix, ix] = 0.0
        bfac = b.values[ix] - b.values
        if slot == 1:
            w = km * np.outer(bfac * f1.values, f2.values)
        else:
            w = km * np.outer(f1.values, bfac * f2.values)
        mask = (bins[ix] > e0) & (bins[ix] <= j_out)
        out[ix] = np.sum(w[mask]) * cv2
    return GridFunction(geom, out)


def commutator_sum(kernel: Kernel, b_list, f1: GridFunction,
                   f2: GridFunction) -> GridFunction:
    total = commutator(kernel, b_list, f1, f2, 1)
    return total + commutator(kernel, b_list, f1, f2, 2)


# -- Calderon-Zygmund decomposition ---------------------------------------------


@dataclass
class CZDecomposition:
    good: GridFunction
    parts: list  # (cube, mean-zero GridFunction supported on the cube)
    height: float
    whole_base: bool = False

    def bad_sum(self) -> GridFunction:
        geom = self.good.geometry
        total = np.zeros(geom.n_cells)
        for _, part in self.parts:
            total += part.values
        return GridFunction(geom, total)


def cz_decomposition(f: GridFunction, height: float) -> CZDecomposition:
    """Stopping construction on the standard system: maximal cubes with
    average above the height; f must be nonnegative."""
    if height <= 0:
        raise ValueError("height must be positive")
    if np.any(f.values < 0):
        raise ValueError("cz_decomposition expects a nonnegative function")
    geom = f.geometry
    base = DyadicCube(0, 0, (0,) * geom.dimension)
    selected: list[DyadicCube] = []
    whole = False
    stack = [base]
    while stack:
        cube = stack.pop()
        if average(f, cube) > height:
            selected.append(cube)
            continue
        if cube.level < geom.resolution:
            stack.extend(reversed(children(cube, geom.dimension)))
    if selected and selected[0] == base:
        whole = True
    gshape = f.grid.shape
    good = f.values.copy().reshape(gshape)
    parts = []
    for cube in sorted(selected):
        sl = clipped_slices(geom, cube)
        mean = average(f, cube)
        bad = np.zeros(gshape)
        bad[sl] = f.grid[sl] - mean
        good[sl] = mean
        parts.append((cube, GridFunction(geom, bad.ravel())))
    return CZDecomposition(GridFunction(geom, good.ravel()), parts, height,
                           whole)


# -- weak-type functionals and pointwise checks ----------------------------------


def weak_halfinfty_functional(g: GridFunction, lam: float) -> float:
    """lambda * |{|g| > lambda}|^2, the bilinear weak-type quantity."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    measure = float(np.count_nonzero(np.abs(g.values) > lam)) \
        * g.geometry.cell_volume
    return lam * measure**2


def weak_halfinfty_sup(g: GridFunction, n_points: int = 32,
                       decades: float = 4.0) -> float:
    """sup of the weak functional over a geometric lambda grid."""
    top = float(np.max(np.abs(g.values)))
    if top <= 0:
        return 0.0
    lams = np.geomspace(top * 10.0**-decades, top, n_points)
    return max(weak_halfinfty_functional(g, float(lam)) for lam in lams)


def cotlar_check(kernel: Kernel, f1: GridFunction, f2: GridFunction,
                 eta: float, calib: CalibrationConstants):
    """Pointwise control of the maximal truncation by the maximal terms."""
    if not 0 < eta < 0.5:
        raise ValueError("eta must lie in (0, 1/2)")
    geom = f1.geometry
    field = TruncationField(kernel, geom, [(f1, f2)])
    lhs = field.sharp()
    tf = GridFunction(geom, field.full())
    rhs = (calib.cotlar_c * kernel.constant_sum()
           * multilinear_maximal(f1, f2).values
           + eta_maximal(tf, eta).values)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0),
                          np.where(lhs > 0, np.inf, 0.0))
    worst = int(np.argmax(ratios))
    return make_report("cotlar", float(lhs[worst]), float(rhs[worst]),
                       1.0, eta=eta, worst_cell=worst,
                       worst_ratio=float(ratios[worst]))


def truncation_continuity_check(kernel: Kernel, f1: GridFunction,
                                f2: GridFunction, eps: float, delta: float,
                                calib: CalibrationConstants,
                                rng: np.random.Generator, n_pairs: int = 12):
    """|T_{eps,delta}(x) - T_{eps,delta}(x')| against the centered maximal
    function, for |x - x'| <= eps/4."""
    geom = f1.geometry
    tfield = truncated_apply(kernel, f1, f2, eps, delta)
    mids = midpoints(geom)
    scale = calib.slack("truncation_continuity") \
        * (kernel.size_constant + kernel.omega.dini())
    worst_lhs, worst_rhs = 0.0, 1.0
    worst_ratio = 0.0
    for _ in range(n_pairs):
        ix = int(rng.integers(geom.n_cells))
        near = np.nonzero(np.linalg.norm(mids - mids[ix], axis=1)
                          <= eps / 4.0)[0]
        jx = int(rng.choice(near))
        lhs = abs(float(tfield.values[ix] - tfield.values[jx]))
        mc = truncated_centered_maximal(f1, f2, ix, eps, 2.0 * delta)
        rhs = scale * mc
        ratio = lhs / rhs if rhs > 0 else (np.inf if lhs > 0 else 0.0)
        if ratio >= worst_ratio:
            worst_ratio, worst_lhs, worst_rhs = ratio, lhs, rhs
    return make_report("truncation_continuity", worst_lhs, worst_rhs, 1.0,
                       eps=eps, delta=delta, worst_ratio=worst_ratio)
