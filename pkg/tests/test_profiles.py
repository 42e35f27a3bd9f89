import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from semiclass_lab.grid import GridSpec
from semiclass_lab.profiles import (AdmissibilityError, BSplineBump, Cosine, Gaussian, Plateau,
                                    SpeedProfile, Tabulated, check_admissible, check_pair,
                                    load_profile_csv, load_profile_json, required_regularity,
                                    save_profile_json, smooth_step)


def test_smooth_step_exact_plateau_and_support():
    u = np.array([0.0, 0.25, 0.5, -0.5, 1.0, -1.0, 1.7])
    assert_allclose(smooth_step(u), [1, 1, 1, 1, 0, 0, 0])
    mid = smooth_step(np.linspace(0.5, 1.0, 101))
    assert np.all(np.diff(mid) <= 0)
    assert smooth_step(0.75) == pytest.approx(0.5)


@pytest.mark.parametrize("pair", [(0.0, 1.0), (1.0, 1.0), (1.2, 1.1), (1.0, 2.5), (0.4, 1.0)])
def test_bad_pairs_rejected(pair):
    with pytest.raises(AdmissibilityError):
        check_pair(*pair)


def test_boundary_pair_accepted():
    check_pair(0.5, 1.0)  # 1/c1 - 1/c2 = 1 exactly
    check_pair(1.0, 2.0)


def test_constant_profile_admissible():
    rep = check_admissible(SpeedProfile(1.0, 0.9, 1.1), GridSpec(128, 4.0))
    assert rep.c1_c2_check
    assert "C2" in rep.verdict and "C2'" in rep.verdict
    assert all(v == (0.0, 0.0) for k, v in rep.derivative_seminorms.items() if k > 0)


def test_required_regularity_for_unit_pair():
    n_min, s_bound, strict = required_regularity(1.0)
    assert n_min == 3
    assert s_bound == 2.5 and strict


@given(st.floats(0.3, 1.99))
def test_required_regularity_invariants(c1):
    m1 = 1 / c1
    n_min, s_bound, strict = required_regularity(c1)
    assert n_min > 1.5 + m1 and n_min >= 1 + np.ceil(m1 - 1e-12)
    assert n_min - 1 <= 1.5 + m1 or n_min - 1 < 1 + np.ceil(m1 - 1e-12)
    assert s_bound >= 1.5 + m1


def test_report_records_valid_n_and_s():
    g = GridSpec(256, 16.0)
    c = SpeedProfile(1.0, 0.85, 1.15, Gaussian(0.1, 8.0, 1.0), period=16.0)
    rep = check_admissible(c, g)
    m1 = 1 / 0.85
    assert rep.n_required > 1.5 + m1
    assert rep.s_used > 1.5 + m1
    assert set(rep.verdict) == {"C2", "C2'"}
    json.dumps(rep.to_dict())


def test_c1_violation_is_hard_failure():
    c = SpeedProfile(1.0, 0.95, 1.15, Cosine(0.1, 1.0), period=1.0)
    with pytest.raises(AdmissibilityError):
        check_admissible(c, GridSpec(64, 1.0))


def test_period_mismatch_rejected():
    c = SpeedProfile(1.0, 0.85, 1.15, Cosine(0.1, 1.0), period=1.0)
    with pytest.raises(AdmissibilityError):
        check_admissible(c, GridSpec(64, 2.0))


def test_bspline_has_finite_smoothness():
    L = 0.125
    c = SpeedProfile(1.0, 0.85, 1.15, BSplineBump(0.1, L / 2, L / 2), period=L)
    rep = check_admissible(c, GridSpec(512, L))
    assert rep.n_supported == 4


def test_bspline_shape():
    b = BSplineBump(0.2, 0.5, 0.4)
    x = np.array([0.5, 0.3, 0.7, 0.1, 0.9])
    assert_allclose(b(x, 1.0), [0.2, 0, 0, 0, 0], atol=1e-15)


def test_plateau_is_flat_near_center():
    p = Plateau(0.3, 1.0, 0.9)
    x = np.linspace(0.56, 1.44, 50)
    assert_allclose(p(x, 2.0), 0.0, atol=1e-15)
    assert p(np.array([0.0]), 2.0)[0] == pytest.approx(0.3)


def test_gaussian_periodization_is_smooth_across_the_seam():
    gauss = Gaussian(0.1, 0.0, 0.3)
    assert gauss(np.array([1e-9]), 1.0)[0] == pytest.approx(gauss(np.array([1.0 - 1e-9]), 1.0)[0])


def test_json_round_trip(tmp_path):
    c = SpeedProfile(1.0, 0.85, 1.15, Gaussian(0.1, 0.5, 0.1), period=1.0)
    save_profile_json(c, tmp_path / "c.json")
    back = load_profile_json(tmp_path / "c.json")
    x = np.linspace(0, 1, 17)
    assert_allclose(back(x), c(x))


def test_cosine_cycles_key():
    c = SpeedProfile.from_dict({"c0": 1, "c1": 0.85, "c2": 1.15,
                                "perturbation": {"kind": "cosine", "amplitude": 0.1, "cycles": 2}}, period=4.0)
    assert c.perturbation.wavenumber == pytest.approx(0.5)


def test_csv_profile_interpolates(tmp_path):
    x = np.linspace(0, 2, 32, endpoint=False)
    c = 1 + 0.05 * np.sin(np.pi * x)
    path = tmp_path / "c.csv"
    path.write_text("x,c\n" + "\n".join(f"{a},{b}" for a, b in zip(x, c)))
    prof = load_profile_csv(path, 0.9, 1.1, period=2.0)
    assert_allclose(prof(x), c, atol=1e-12)
    xm = x + 1 / 32
    assert_allclose(prof(xm), 1 + 0.05 * np.sin(np.pi * xm), atol=1e-5)


def test_csv_out_of_range_rejected(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("0,1.0\n0.5,1.3\n1.0,1.0\n1.5,0.95\n")
    with pytest.raises(AdmissibilityError):
        load_profile_csv(path, 0.9, 1.1, period=2.0)


def test_tabulated_needs_period():
    t = Tabulated((0.0, 0.5), (0.0, 0.1))
    with pytest.raises(ValueError):
        t(np.array([0.1]), None)
