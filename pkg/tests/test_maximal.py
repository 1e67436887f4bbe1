import numpy as np
import pytest

from sparsedom.dyadic import (DyadicCube, GridGeometry, cube_box,
                              cube_measure, iter_cubes)
from sparsedom.gridfn import GridFunction, Weight
from sparsedom.maximal import (ball_average_field, centered_maximal_field,
                               eta_maximal, hl_maximal, log_maximal,
                               multilinear_maximal, radius_grid,
                               truncated_centered_maximal,
                               weighted_dyadic_maximal)

BASE = DyadicCube(0, 0, (0,))


def brute_cell_average(geom, values, cube):
    """Independent cube average: raw loops over the snapped box."""
    lo, size = cube_box(geom, cube)
    side = geom.cells_per_side
    total = 0.0
    if geom.dimension == 1:
        for c in range(max(lo[0], 0), min(lo[0] + size, side)):
            total += values[c]
    else:
        g = values.reshape(side, side)
        for c0 in range(max(lo[0], 0), min(lo[0] + size, side)):
            for c1 in range(max(lo[1], 0), min(lo[1] + size, side)):
                total += g[c0, c1]
    return total * geom.cell_volume / cube_measure(cube, geom.dimension)


def brute_maximal(geom, values_list, weights=None):
    """sup over all cubes containing each cell of the product of averages."""
    side = geom.cells_per_side
    out = np.zeros(geom.n_cells)
    cubes = list(iter_cubes(geom, contained=False))
    for cube in cubes:
        lo, size = cube_box(geom, cube)
        prod = 1.0
        for vals in values_list:
            prod *= brute_cell_average(geom, np.abs(vals), cube)
        a, b = max(lo[0], 0), min(lo[0] + size, side)
        out[a:b] = np.maximum(out[a:b], prod)
    return out


def test_hl_constant(geom4):
    f = GridFunction.constant(geom4, -2.0)
    assert np.allclose(hl_maximal(f).values, 2.0)


def test_hl_dominates(geom4, rng):
    f = GridFunction(geom4, rng.uniform(-2, 2, geom4.n_cells))
    assert np.all(hl_maximal(f).values >= np.abs(f.values) - 1e-14)


def test_hl_oracle(geom4, rng):
    for _ in range(20):
        f = GridFunction(geom4, rng.uniform(-1, 3, geom4.n_cells))
        expect = brute_maximal(geom4, [f.values])
        got = hl_maximal(f).values
        assert np.max(np.abs(got - expect)) < 1e-10


def test_hl_first_cell_spike(geom4):
    f = GridFunction.spike(geom4, 0, 1.0)
    got = hl_maximal(f).values
    expect = brute_maximal(geom4, [f.values])
    assert np.max(np.abs(got - expect)) < 1e-12
    assert got[-1] == pytest.approx(expect[-1])


def test_hl_sublinear(geom4, rng):
    f = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    g = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    lhs = hl_maximal(f + g).values
    rhs = hl_maximal(f).values + hl_maximal(g).values
    assert np.all(lhs <= rhs + 1e-12)


def test_hl_weak_type(geom6, rng):
    # lambda |{Mf > lambda}| <= 3^n ||f||_1 across a randomized suite
    for _ in range(25):
        f = GridFunction(geom6, rng.uniform(0, 4, geom6.n_cells))
        m = hl_maximal(f).values
        norm1 = float(np.sum(np.abs(f.values))) * geom6.cell_volume
        for lam in np.geomspace(0.1, 4.0, 8):
            measure = np.count_nonzero(m > lam) * geom6.cell_volume
            assert lam * measure <= 3.0 * norm1 + 1e-12


def test_eta_constant(geom4):
    f = GridFunction.constant(geom4, 3.0)
    assert np.allclose(eta_maximal(f, 0.5).values, 3.0)


def test_eta_dominates(geom4, rng):
    f = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    assert np.all(eta_maximal(f, 0.3).values >= np.abs(f.values) - 1e-12)


def test_eta_oracle(geom4, rng):
    eta = 0.4
    for _ in range(10):
        f = GridFunction(geom4, rng.uniform(0, 2, geom4.n_cells))
        expect = brute_maximal(geom4, [np.abs(f.values) ** eta]) ** (1 / eta)
        got = eta_maximal(f, eta).values
        assert np.max(np.abs(got - expect)) < 1e-10


def test_multilinear_ones(geom4):
    ones = GridFunction.constant(geom4, 1.0)
    assert np.allclose(multilinear_maximal(ones, ones).values, 1.0)


def test_multilinear_below_product(geom4, rng):
    f = GridFunction(geom4, rng.uniform(0, 1, geom4.n_cells))
    g = GridFunction(geom4, rng.uniform(0, 1, geom4.n_cells))
    lhs = multilinear_maximal(f, g).values
    rhs = hl_maximal(f).values * hl_maximal(g).values
    assert np.all(lhs <= rhs + 1e-12)


def test_multilinear_oracle(geom4, rng):
    for _ in range(10):
        f = GridFunction(geom4, rng.uniform(0, 1, geom4.n_cells))
        g = GridFunction(geom4, rng.uniform(0, 1, geom4.n_cells))
        expect = brute_maximal(geom4, [f.values, g.values])
        got = multilinear_maximal(f, g).values
        assert np.max(np.abs(got - expect)) < 1e-10


def test_truncated_centered_constant(geom6):
    ones = GridFunction.constant(geom6, 1.0)
    # midpoint-cell balls against the true volume: 1 up to O(cell/r)
    val = truncated_centered_maximal(ones, ones, geom6.n_cells // 2,
                                     2.0**-5, 0.4)
    assert 0.6 <= val <= 1.45


def test_truncated_centered_empty_range(geom6):
    ones = GridFunction.constant(geom6, 1.0)
    assert truncated_centered_maximal(ones, ones, 3, 0.1, 0.1) == 0.0


def test_truncated_centered_monotone_in_delta(geom6, rng):
    f = GridFunction(geom6, rng.uniform(0, 1, geom6.n_cells))
    g = GridFunction(geom6, rng.uniform(0, 1, geom6.n_cells))
    prev = 0.0
    for delta in (0.1, 0.2, 0.4, 0.8):
        val = truncated_centered_maximal(f, g, 31, 2.0**-6, delta)
        assert val >= prev - 1e-15
        prev = val


def test_centered_field_matches_pointwise(geom4, rng):
    f = GridFunction(geom4, rng.uniform(0, 1, geom4.n_cells))
    g = GridFunction(geom4, rng.uniform(0, 1, geom4.n_cells))
    field = centered_maximal_field(f, g, 2.0**-4, 0.5)
    for cell in (0, 5, 11, 15):
        assert field[cell] == pytest.approx(
            truncated_centered_maximal(f, g, cell, 2.0**-4, 0.5))


def test_ball_average_interior(geom6):
    f = GridFunction.constant(geom6, 2.0)
    field = ball_average_field(f, 0.25)
    # interior cells: 2 * (cells covered) / (true volume), slightly below 2
    mid = geom6.n_cells // 2
    assert 1.5 <= field[mid] <= 2.0 + 1e-12


def test_weighted_dyadic_constant_weight(geom4, rng):
    f = GridFunction(geom4, rng.uniform(0, 2, geom4.n_cells))
    w = Weight(geom4, np.ones(geom4.n_cells))
    got = weighted_dyadic_maximal(f, w, 0).values
    # equals the single-system unweighted dyadic maximal
    side = geom4.cells_per_side
    expect = np.abs(f.values).copy()
    for k in range(0, geom4.resolution + 1):
        size = 1 << (geom4.resolution - k)
        for m in range(side // size):
            block = np.abs(f.values[m * size:(m + 1) * size])
            expect[m * size:(m + 1) * size] = np.maximum(
                expect[m * size:(m + 1) * size], np.mean(block))
    assert np.max(np.abs(got - expect)) < 1e-12


def test_weighted_dyadic_constant_function(geom4, rng):
    f = GridFunction.constant(geom4, -1.5)
    w = Weight(geom4, rng.uniform(0.5, 2, geom4.n_cells))
    assert np.allclose(weighted_dyadic_maximal(f, w, 1).values, 1.5)


def test_weighted_dyadic_oracle(geom4, rng):
    for _ in range(10):
        f = GridFunction(geom4, rng.uniform(0, 2, geom4.n_cells))
        w = Weight(geom4, rng.uniform(0.5, 2, geom4.n_cells))
        got = weighted_dyadic_maximal(f, w, 0).values
        expect = np.abs(f.values).copy()
        side = geom4.cells_per_side
        for k in range(0, geom4.resolution + 1):
            size = 1 << (geom4.resolution - k)
            for m in range(side // size):
                sl = slice(m * size, (m + 1) * size)
                num = float(np.sum(np.abs(f.values[sl]) * w.values[sl]))
                den = float(np.sum(w.values[sl]))
                expect[sl] = np.maximum(expect[sl], num / den)
        assert np.max(np.abs(got - expect)) < 1e-12


def test_log_maximal_constant(geom4):
    w = Weight(geom4, np.full(geom4.n_cells, 3.0))
    assert np.allclose(log_maximal(w).values, 3.0, rtol=1e-12)


def test_log_maximal_am_gm(geom4, rng):
    w = Weight(geom4, rng.uniform(0.3, 3, geom4.n_cells))
    lhs = log_maximal(w).values
    rhs = hl_maximal(w).values
    assert np.all(lhs <= rhs * (1 + 1e-12))


def test_log_maximal_oracle(geom4, rng):
    for _ in range(10):
        w = Weight(geom4, rng.uniform(0.3, 3, geom4.n_cells))
        got = log_maximal(w).values
        logs = np.log(w.values)
        side = geom4.cells_per_side
        expect = w.values.copy()
        for cube in iter_cubes(geom4, contained=True):
            lo, size = cube_box(geom4, cube)
            mean = np.exp(np.mean(logs[lo[0]:lo[0] + size]))
            expect[lo[0]:lo[0] + size] = np.maximum(
                expect[lo[0]:lo[0] + size], mean)
        assert np.max(np.abs(got - expect)) < 1e-10


def test_radius_grid_half_dyadic(geom6):
    grid = radius_grid(geom6)
    assert grid[0] == pytest.approx(2.0**-6)
    assert grid[2] / grid[0] == pytest.approx(2.0)
    assert grid[-1] >= 2.0


def test_geometry_mismatch():
    a = GridFunction.constant(GridGeometry(1, 3), 1.0)
    b = GridFunction.constant(GridGeometry(1, 4), 1.0)
    with pytest.raises(ValueError):
        multilinear_maximal(a, b)
