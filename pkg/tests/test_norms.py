import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from semiclass_lab.grid import GridSpec, forward_transform, l2_norm
from semiclass_lab.norms import SobolevWeight, apply_weight, hst_norm
from semiclass_lab.profiles import discrete_sobolev_norm

from conftest import random_function

G = GridSpec(128, 4.0)


def test_s_zero_is_l2(rng):
    f = random_function(G, rng)
    assert hst_norm(f, 0.0, 0.3) == pytest.approx(l2_norm(f), rel=1e-12)
    assert_allclose(apply_weight(f, 0.0, 0.3).values, f.values, atol=1e-12)


def test_t_one_is_classical(rng):
    f = random_function(G, rng)
    assert hst_norm(f, 1.5, 1.0) == pytest.approx(discrete_sobolev_norm(f.values, G, 1.5), rel=1e-12)


def test_pure_mode():
    m, s, t = 5, -1.3, 0.4
    xi = m / G.period
    assert hst_norm(G.mode(m), s, t) == pytest.approx(
        (1 + 4 * np.pi**2 * t**2 * xi**2) ** (s / 2) * np.sqrt(G.period), rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(0.0, 1.0))
def test_weight_round_trip_and_definition(seed, s, t):
    f = random_function(G, np.random.default_rng(seed))
    back = apply_weight(apply_weight(f, s, t), -s, t)
    assert_allclose(back.values, f.values, rtol=1e-10, atol=1e-10)
    assert hst_norm(f, s, t) == pytest.approx(l2_norm(apply_weight(f, s, t)), rel=1e-10)


@given(st.integers(0, 2**32 - 1), st.floats(-2, 2), st.floats(0, 2), st.floats(0.01, 1.0))
def test_monotone_in_s(seed, s, ds, t):
    f = random_function(G, np.random.default_rng(seed))
    assert hst_norm(f, s, t) <= hst_norm(f, s + ds, t) * (1 + 1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(-2, 2), st.floats(0.01, 1.0))
def test_duality_bound(seed, s, t):
    rng = np.random.default_rng(seed)
    f, g = random_function(G, rng), random_function(G, rng)
    assert abs(f.inner(g)) <= hst_norm(f, s, t) * hst_norm(g, -s, t) * (1 + 1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(-2, 2), st.floats(0.01, 1.0), st.floats(0.5, 1.0))
def test_equivalence_across_t(seed, s, t, frac):
    f = random_function(G, np.random.default_rng(seed))
    a, b = hst_norm(f, s, t), hst_norm(f, s, frac * t)
    c = 2 ** abs(s)
    assert a / c * (1 - 1e-12) <= b <= a * c * (1 + 1e-12)


def test_weight_magnitude_bounds():
    w = SobolevWeight(1.0, 0.5)
    xi = np.linspace(-10, 10, 41)
    assert np.all(w.magnitude(xi) >= 1)
    assert_allclose(np.abs(w.complex_value(xi)), w.magnitude(xi))
    with pytest.raises(ValueError):
        SobolevWeight(1.0, -0.1)
