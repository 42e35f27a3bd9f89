import numpy as np
import pytest
from numpy.testing import assert_allclose

from semiclass_lab.grid import GridSpec
from semiclass_lab.profiles import Cosine, Gaussian, SpeedProfile
from semiclass_lab.seminorms import fd4_nonperiodic, seminorm_M, seminorm_N
from semiclass_lab.symbols import Symbol, decompose_pi_sigma, make_symbol_d, make_symbol_p

G = GridSpec(64, 1.0)


def test_fd4_is_exact_on_quartics():
    x = np.linspace(0, 1, 21)
    h = x[1] - x[0]
    assert_allclose(fd4_nonperiodic(x**4, h), 4 * x**3, atol=1e-10)


def test_constant_symbol():
    one = Symbol(lambda x, xi: np.ones(np.broadcast(x, xi).shape), 0.0, x_independent=True)
    for j, k in [(0, 0), (1, 2), (2, 1)]:
        e = seminorm_M(one, j, k, 0.0, G)
        assert e.value == pytest.approx(1.0)
        assert e.converged


def test_d_sup_approaches_one():
    d = make_symbol_d(SpeedProfile(1.0, 0.9, 1.1))
    vals = [seminorm_M(d, 0, 0, 0.0, G, xi_max=xm).value for xm in (10, 100, 1e4)]
    assert vals == sorted(vals)
    assert vals[-1] == pytest.approx(1e4 / (1 + 1e4))


def test_p_half_order_two():
    # (1 + xi/2)^2 / (1 + xi)^2 <= 1 with equality at xi = 0
    p = make_symbol_p(SpeedProfile(0.5, 0.4, 0.6))
    e = seminorm_M(p, 0, 0, 2.0, G, xi_max=1e4)
    assert e.value == pytest.approx(1.0)
    xi = np.linspace(0, 1e4, 100001)
    assert np.max((1 + xi / 2) ** 2 / (1 + xi) ** 2) == pytest.approx(1.0)


def test_first_derivative_value():
    # d_xi of |xi|/(1+|xi|) is 1/(1+|xi|)^2, sup 1 at the origin
    d = make_symbol_d(SpeedProfile(1.0, 0.9, 1.1))
    e = seminorm_M(d, 0, 1, 0.0, G, xi_max=100)
    assert e.value == pytest.approx(1.0, rel=1e-3)


def test_x_derivative_value():
    c = SpeedProfile(1.0, 0.85, 1.15, Cosine(0.1, 1.0), period=1.0)
    d = make_symbol_d(c)
    g = GridSpec(128, 1.0)
    e1 = seminorm_M(d, 1, 0, 0.0, g, xi_max=1e3)
    # alpha = 0 dominates: sup d = 1e3 / (1 + 0.9e3); |d_x d| stays below |c'|/c^2 <= 0.2 pi / 0.81
    assert e1.value == pytest.approx(1e3 / (1 + 0.9e3), rel=1e-6)
    x = g.x_nodes
    xi = 1e3
    dx_d = np.abs(-0.2 * np.pi * np.sin(2 * np.pi * x)) * xi**2 / (1 + np.real(c(x)) * xi) ** 2
    assert dx_d.max() < e1.value
    assert e1.converged


def test_n_of_pure_mode():
    a = Symbol(lambda x, xi: np.exp(2j * np.pi * x) + 0 * xi, 0.0, xi_independent=True, meta={"period": 1.0})
    e = seminorm_N(a, 0.0, 0, 0.0, G)
    assert e.value == pytest.approx(1.0)


def test_pi_part_constant_profile_is_zero():
    c = SpeedProfile(1.0, 0.9, 1.1, period=1.0)
    pi, _ = decompose_pi_sigma(make_symbol_d(c), c)
    e = seminorm_N(pi, 2.0, 1, 0.0, G)
    assert e.value == 0.0
    assert "nonzero_mean" not in e.flags


def test_pi_part_finite_and_stable():
    L = 8.0
    c = SpeedProfile(1.0, 0.85, 1.15, Gaussian(0.1, L / 2, 1.0), period=L)
    pi, _ = decompose_pi_sigma(make_symbol_d(c), c)
    a = seminorm_N(pi, 2.0, 1, 0.0, GridSpec(512, L), xi_max=50)
    b = seminorm_N(pi, 2.0, 1, 0.0, GridSpec(1024, L), xi_max=50)
    assert np.isfinite(a.value) and a.value > 0
    assert abs(a.value - b.value) <= 0.05 * a.value
    assert "nonzero_mean" not in a.flags


def test_full_symbol_flagged():
    c = SpeedProfile(1.0, 0.85, 1.15, Cosine(0.1, 1.0), period=1.0)
    e = seminorm_N(make_symbol_d(c), 1.0, 0, 0.0, G)
    assert "nonzero_mean" in e.flags


def test_estimates_converge_upward_or_flag():
    c = SpeedProfile(1.0, 0.85, 1.15, Cosine(0.1, 1.0), period=1.0)
    e = seminorm_M(make_symbol_p(c), 1, 1, c.m1, G)
    assert e.converged
    assert e.refined_value >= e.value * (1 - 0.05)
    assert e.grid_meta["fd_order"] == 4 and e.grid_meta["xi_max"] == G.xi_max


def test_seminorms_nonincreasing_under_rescaling():
    c = SpeedProfile(1.0, 0.85, 1.15, Cosine(0.1, 1.0), period=1.0)
    for sym, m in ((make_symbol_d(c), 0.0), (make_symbol_p(c), c.m1)):
        for j, k in [(0, 0), (1, 1)]:
            vals = [seminorm_M(sym.rescaled(t), j, k, m, G).value for t in (1, 0.5, 0.25, 0.125)]
            assert all(b <= a * 1.02 for a, b in zip(vals, vals[1:]))


def test_negative_s_rejected():
    c = SpeedProfile(1.0, 0.9, 1.1, period=1.0)
    with pytest.raises(ValueError):
        seminorm_N(make_symbol_d(c), -1.0, 0, 0.0, G)
