import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsedom.dyadic import DyadicCube, GridGeometry, iter_cubes
from sparsedom.gridfn import (GridFunction, Weight, average, bmo_norm,
                              from_csv, from_json, log_average, lp_norm,
                              p_average, to_csv, to_json, weighted_average)

BASE = DyadicCube(0, 0, (0,))
HALF = DyadicCube(0, 1, (0,))


def test_average_constant(geom4):
    f = GridFunction.constant(geom4, 3.5)
    assert average(f, BASE) == pytest.approx(3.5)


def test_average_indicator(geom4):
    f = GridFunction.indicator(geom4, HALF)
    assert average(f, BASE) == pytest.approx(0.5)


def test_average_linear_exact():
    geom = GridGeometry(1, 8)
    f = GridFunction.from_callable(geom, lambda x: x[:, 0])
    assert average(f, HALF) == 0.25  # midpoint sums are exact for x


def test_average_unclipped_denominator(geom4):
    # a cube sticking out of the base keeps |Q| in the denominator
    f = GridFunction.constant(geom4, 1.0)
    shifted = DyadicCube(1, 0, (0,))
    assert average(f, shifted) < 1.0


def test_average_linearity(geom4, rng):
    f = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    g = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    for cube in [BASE, HALF, DyadicCube(2, 2, (1,))]:
        lhs = average(f + g * 2.0, cube)
        rhs = average(f, cube) + 2.0 * average(g, cube)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_average_monotone(geom4, rng):
    f = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    g = abs(GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells)))
    for cube in [BASE, HALF, DyadicCube(1, 2, (1,))]:
        assert average(f + g, cube) >= average(f, cube) - 1e-12


def test_average_own_indicator(geom4):
    # <1_Q>_Q = 1 for cubes inside the base
    for cube in [BASE, HALF, DyadicCube(0, 3, (5,))]:
        assert average(GridFunction.indicator(geom4, cube), cube) == \
            pytest.approx(1.0)


def test_p_average_reduces_to_average(geom4, rng):
    f = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    assert p_average(f, HALF, 1.0) == pytest.approx(average(abs(f), HALF))


def test_p_average_indicator(geom4):
    f = GridFunction.indicator(geom4, HALF)
    assert p_average(f, BASE, 2.0) == pytest.approx(np.sqrt(0.5))


def test_p_average_constant(geom4):
    f = GridFunction.constant(geom4, -2.0)
    for p0 in (1.0, 2.0, 3.5):
        assert p_average(f, BASE, p0) == pytest.approx(2.0)


@given(st.floats(1.0, 4.0), st.floats(1.0, 4.0), st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_p_average_monotone_in_exponent(p_small, p_big, seed):
    if p_small > p_big:
        p_small, p_big = p_big, p_small
    geom = GridGeometry(1, 4)
    f = GridFunction(geom, np.random.default_rng(seed).uniform(
        0, 2, geom.n_cells))
    assert (p_average(f, BASE, p_small)
            <= p_average(f, BASE, p_big) + 1e-12)


def test_weighted_average_constant_weight(geom4, rng):
    # for base-contained cubes this is the ordinary average
    f = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    w = Weight(geom4, np.ones(geom4.n_cells))
    assert weighted_average(f, HALF, w) == pytest.approx(average(f, HALF))


def test_weighted_average_two_step(geom4):
    f = GridFunction.indicator(geom4, HALF)
    w = Weight(geom4, np.where(f.values > 0, 2.0, 1.0))
    assert weighted_average(f, BASE, w) == pytest.approx(2.0 / 3.0)


def test_weighted_average_constant_function(geom4, rng):
    f = GridFunction.constant(geom4, 4.25)
    w = Weight(geom4, rng.uniform(0.5, 2.0, geom4.n_cells))
    assert weighted_average(f, BASE, w) == pytest.approx(4.25)


def test_weighted_average_no_mass(geom4):
    f = GridFunction.constant(geom4, 1.0)
    w = Weight(geom4, np.ones(geom4.n_cells))
    outside = DyadicCube(0, 0, (5,))
    with pytest.raises(ValueError):
        weighted_average(f, outside, w)


def test_lp_norm_examples(geom4):
    assert lp_norm(GridFunction.constant(geom4, 1.0), 3.0) == pytest.approx(1.0)
    f = GridFunction.indicator(geom4, HALF) * 2.0
    assert lp_norm(f, 2.0) == pytest.approx(np.sqrt(2.0))


@given(st.floats(-4, 4), st.floats(0.5, 3.0))
@settings(max_examples=30, deadline=None)
def test_lp_norm_homogeneity(c, p):
    geom = GridGeometry(1, 3)
    f = GridFunction(geom, np.arange(1.0, 9.0))
    assert lp_norm(f * c, p) == pytest.approx(abs(c) * lp_norm(f, p))


def test_bmo_constant(geom4):
    assert bmo_norm(GridFunction.constant(geom4, 2.0)) == 0.0


def test_bmo_indicator(geom6):
    b = GridFunction.indicator(geom6, HALF)
    assert bmo_norm(b) == pytest.approx(0.5)


def test_bmo_translation_invariance(geom4, rng):
    b = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    assert bmo_norm(b) == pytest.approx(bmo_norm(b + 3.7), abs=1e-12)


def test_bmo_bounded_by_sup(geom4, rng):
    b = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    assert bmo_norm(b) <= 2 * np.max(np.abs(b.values)) + 1e-12


def test_log_average_constant(geom4):
    w = Weight(geom4, np.full(geom4.n_cells, 2.5))
    assert log_average(w, BASE) == pytest.approx(2.5)


def test_log_average_geometric_mean(geom4):
    vals = np.where(GridFunction.indicator(geom4, HALF).values > 0, 4.0, 1.0)
    assert log_average(Weight(geom4, vals), BASE) == pytest.approx(2.0)


def test_log_average_am_gm(geom4, rng):
    w = Weight(geom4, rng.uniform(0.2, 3.0, geom4.n_cells))
    for cube in iter_cubes(geom4, contained=True):
        assert log_average(w, cube) <= average(w, cube) + 1e-12


def test_weight_floor_rejected(geom4):
    vals = np.ones(geom4.n_cells)
    vals[3] = 1e-13
    with pytest.raises(ValueError):
        Weight(geom4, vals)


def test_csv_roundtrip_bit_exact(geom4, rng):
    f = GridFunction(geom4, rng.uniform(-1, 1, geom4.n_cells))
    g = from_csv(geom4, to_csv(f))
    assert np.array_equal(f.values, g.values)


def test_json_roundtrip_bit_exact(rng):
    geom = GridGeometry(2, 3)
    f = GridFunction(geom, rng.standard_normal(geom.n_cells))
    g = from_json(to_json(f))
    assert g.geometry == geom
    assert np.array_equal(f.values, g.values)


def test_immutability(geom4):
    f = GridFunction.constant(geom4, 1.0)
    with pytest.raises((AttributeError, ValueError)):
        f.values[0] = 2.0
