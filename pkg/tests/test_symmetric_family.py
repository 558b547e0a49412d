import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minkhyp.core_geometry import shape_at
from minkhyp.errors import InvalidParams, OutOfRange
from minkhyp.symmetric_family import (ProfileParams, comparison_check, embed,
                                      first_integral, geodesic_ray, gradient_image,
                                      hyperboloid_bounds_check, integrate_profile, lambda_c,
                                      profile_curvatures, tau_c)


@pytest.fixture(scope="module")
def p1():
    return integrate_profile(ProfileParams(1.0, 2), t_max=40.0)


def test_params_validation():
    with pytest.raises(InvalidParams):
        ProfileParams(1.5)
    with pytest.raises(InvalidParams):
        ProfileParams(0.0, n=1)
    with pytest.raises(InvalidParams):
        ProfileParams(1.0, normalization="even-at-zero")
    assert ProfileParams(1.0).normalization == "unit-at-zero-increasing"


@pytest.mark.parametrize("n", [2, 3, 4])
def test_c0_is_hyperbola(n):
    p = integrate_profile(ProfileParams(0.0, n), t_max=10.0)
    t = np.linspace(-10, 10, 401)
    f, fp, _ = p.eval(t)
    np.testing.assert_allclose(f, np.sqrt(1 + t * t), atol=1e-9)
    np.testing.assert_allclose(fp, t / np.sqrt(1 + t * t), atol=1e-9)


@given(st.floats(-10, 0.99), st.sampled_from([2, 3]))
def test_first_integral_conserved(c, n):
    p = integrate_profile(ProfileParams(c, n), t_max=5.0)
    f, fp, _ = p.eval(p.t)
    assert np.max(np.abs(first_integral(f, fp, n) - c) / np.maximum(1, f**n)) < 1e-9


def test_c1_left_tail_matches_closed_form(p1):
    # n = 2, c = 1: G(f) = sqrt(1 + f^2) - atanh(1/sqrt(1 + f^2)) equals t + G(1)
    mp.mp.dps = 40
    G = lambda f: mp.sqrt(1 + f * f) - mp.atanh(1 / mp.sqrt(1 + f * f))
    G1 = G(mp.mpf(1))
    for t in (-1.0, -5.0, -15.0, -30.0):
        # for small f, G(f) ~ 1 + log(f / 2)
        s = mp.findroot(lambda s: G(mp.exp(s)) - (t + G1), t + G1 - 1 + math.log(2))
        assert float(p1.state(np.array([t]))[0][0]) == pytest.approx(float(mp.exp(s)), rel=1e-7)


def test_c1_right_side_and_range(p1):
    f, fp, _ = p1.eval(np.array([0.0]))
    assert f[0] == pytest.approx(1.0)
    assert fp[0] == pytest.approx(math.sqrt(0.5))
    with pytest.raises(OutOfRange):
        p1.state(np.array([41.0]))


@pytest.mark.parametrize("c", [-3.0, 0.5, 1.0])
def test_curvature_K_one(c):
    p = integrate_profile(ProfileParams(c, 2), t_max=10.0)
    t = np.linspace(-5, 5, 41)
    K = profile_curvatures(p, t)[2]
    np.testing.assert_allclose(K, 1.0, atol=1e-7)
    jet = embed(p, np.array([0.7, -1.3]))
    assert shape_at(jet).K == pytest.approx(1.0, abs=1e-7)


def test_lambda_against_quadrature():
    import importlib.util
    import pathlib

    spec = importlib.util.spec_from_file_location(
        "oracle_lambda", pathlib.Path(__file__).parents[1] / "scripts" / "oracle_lambda.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    for c in (-3.0, 0.5):
        assert lambda_c(c).lambda_c == pytest.approx(float(mod.lam(str(c))), abs=1e-6)
    assert lambda_c(0.0).lambda_c == 0.0


def test_comparison_and_hyperboloid_bounds():
    grid = np.linspace(0, 10, 501)
    pa = integrate_profile(ProfileParams(-3.0), t_max=10.0)
    pb = integrate_profile(ProfileParams(0.5), t_max=10.0)
    rep = comparison_check(pa, pb, grid)
    assert rep.passed
    assert hyperboloid_bounds_check(pb, grid) >= 0
    assert tau_c(-3.0, 2, pa) > 0


def test_geodesic_and_gradient_image():
    p = integrate_profile(ProfileParams(0.5), t_max=30.0)
    rep = geodesic_ray(p, np.zeros(2), np.array([1.0, 0.0]), 2.0)
    assert np.all(np.diff(rep.s) > 0) and np.all(np.isfinite(rep.path))
    img = gradient_image(p, 25.0, n_dirs=32, n_rings=8)
    assert np.all(np.linalg.norm(img.hull_vertices, axis=1) < 1)
    assert img.hausdorff < 0.1
