import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minkhyp.convex_analysis import (BlowdownFn, ConvexGridFn, ProfileConjugate, Region,
                                     SupportSet, blowdown, extremal_representation_check,
                                     hausdorff_polytopes, hausdorff_to_ball, hull_vertices,
                                     involution_check, legendre_transform, null_condition_check,
                                     profile_conjugate, support_function, tangent_cone)
from minkhyp.core_geometry import GridSpec
from minkhyp.errors import EmptySet, InvalidParams, NotConvex, NoWitness, NonMonotone
from minkhyp.symmetric_family import ProfileParams, embed_values, integrate_profile, lambda_c


def quad_fn(a, b):
    return lambda X: 0.5 * (a * X[..., 0] ** 2 + b * X[..., 1] ** 2)


@given(st.floats(0.5, 3), st.floats(0.5, 3))
def test_legendre_of_quadratic(a, b):
    g = GridSpec.box([-1, -1], [1, 1], 1 / 32)
    f = ConvexGridFn.sample(quad_fn(a, b), g)
    fs = legendre_transform(f, newton=False)
    Y, v = fs.nodes()
    exact = 0.5 * (Y[:, 0] ** 2 / a + Y[:, 1] ** 2 / b)
    assert np.max(np.abs(v - exact)) < 2 * g.h * g.h * max(a, b, 1 / a, 1 / b) ** 2


def test_newton_polish_is_exact():
    g = GridSpec.box([-1, -1], [1, 1], 1 / 16)
    fn = lambda X: np.sqrt(1 + np.sum(X * X, -1))
    grad = lambda X: X / fn(X)[..., None]
    hess = lambda X: (np.eye(2) - X[..., :, None] * X[..., None, :] / fn(X)[..., None, None] ** 2) \
        / fn(X)[..., None, None]
    f = ConvexGridFn.sample(fn, g, gradient=grad, hessian=hess)
    fs = legendre_transform(f)
    Y, v = fs.nodes()
    np.testing.assert_allclose(v, -np.sqrt(1 - np.sum(Y * Y, 1)), atol=1e-10)


def test_involution_and_nonconvex_input():
    g = GridSpec.box([-1, -1], [1, 1], 1 / 16)
    f = ConvexGridFn.sample(quad_fn(1.0, 2.0), g, region=Region("disk"))
    assert involution_check(f) < 1e-2
    bad = ConvexGridFn.sample(lambda X: -np.sum(X * X, -1), g)
    with pytest.raises(NotConvex):
        legendre_transform(bad)


def test_region_kinds():
    Y = np.array([[0.5, 0.0], [-0.5, 0.0], [2.0, 0.0]])
    assert Region("disk").contains(Y).tolist() == [True, True, False]
    assert Region("half-disk").contains(Y).tolist() == [True, False, False]
    tri = Region("polygon", vertices=((1, 0), (-0.5, 0.8), (-0.5, -0.8)))
    assert tri.contains(np.zeros((1, 2)))[0]
    with pytest.raises(InvalidParams):
        Region("blob")


@given(st.lists(st.floats(0, 2 * math.pi), min_size=3, max_size=12, unique=True))
def test_support_function_properties(ths):
    E = SupportSet(np.stack([np.cos(ths), np.sin(ths)], -1))
    X = np.random.default_rng(0).normal(size=(50, 2))
    V = support_function(E, X)
    # 1-homogeneous, 1-Lipschitz and subadditive
    np.testing.assert_allclose(support_function(E, 3 * X), 3 * V, rtol=1e-12, atol=1e-12)
    assert np.all(V <= np.linalg.norm(X, axis=1) + 1e-12)
    assert np.all(support_function(E, X + X[::-1]) <= V + V[::-1] + 1e-12)


def test_support_set_validation():
    with pytest.raises(EmptySet):
        SupportSet(np.zeros((0, 2)))
    with pytest.raises(InvalidParams):
        SupportSet([[2.0, 0.0]])


def test_hulls_and_hausdorff():
    sq = np.array([[1, 0], [0, 1], [-1, 0], [0, -1], [0, 0]], float)
    assert len(hull_vertices(sq)) == 4
    assert hausdorff_polytopes(sq, sq[:4]) == pytest.approx(0.0, abs=1e-12)
    assert hausdorff_to_ball(SupportSet.circle(400).E) < 1e-3
    assert hausdorff_to_ball(sq) == pytest.approx(1 - math.sqrt(0.5), abs=1e-3)


def test_blowdown_of_hyperboloid():
    u = lambda X: np.sqrt(1 + np.sum(np.asarray(X) ** 2, -1))
    e = blowdown(u, np.array([3.0, 4.0]))
    assert e.value == pytest.approx(5.0, abs=1e-6)
    with pytest.raises(NonMonotone):
        blowdown(lambda X: -np.sum(np.asarray(X) ** 2, -1), np.array([1.0, 0.0]))
    V = BlowdownFn(u, r=1e4)
    hom, lip = V.residuals(50)
    assert hom < 1e-4 and lip < 1e-4  # O(1/r) near the origin


def test_null_condition():
    V = lambda X: np.linalg.norm(X, axis=-1)
    w = null_condition_check(V, np.array([1.0, 2.0]))
    assert w.gap < 1e-6 and not np.allclose(w.y, w.x)
    with pytest.raises(NoWitness):
        null_condition_check(lambda X: 0.5 * np.linalg.norm(X, axis=-1), np.array([1.0, 0.0]))


def test_tangent_cone_polytope():
    E = SupportSet(np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], float))
    # smooth-ish convex u with blowdown V_E
    u = lambda X: np.log(np.sum(np.exp(np.asarray(X) @ E.E.T), -1))
    cone = tangent_cone(u, sample_radius=250.0)
    assert cone.hausdorff_to(E.E) < 1e-2
    assert extremal_representation_check(cone, E, np.random.default_rng(1).normal(size=(20, 2))) < 1e-2


@pytest.mark.parametrize("c", [-3.0, 0.5])
def test_profile_conjugate_trace(c):
    p = integrate_profile(ProfileParams(c), t_max=2000.0)
    tr = profile_conjugate(p, 32)
    lam = lambda_c(c).lambda_c
    assert np.max(np.abs(tr.ustar - lam * np.abs(tr.y[:, 0]))) < 2e-3


def test_profile_conjugate_interior():
    p = integrate_profile(ProfileParams(0.0), t_max=200.0)
    pc = ProfileConjugate(p)
    Y = np.array([[0.0, 0.0], [0.3, -0.4], [-0.6, 0.2]])
    np.testing.assert_allclose(pc(Y), -np.sqrt(1 - np.sum(Y * Y, 1)), atol=1e-9)
    # conjugate inequality u(x) + u*(y) >= x.y
    X = np.random.default_rng(2).normal(size=(20, 2))
    u = embed_values(p, X)[0]
    assert np.all(u[:, None] + pc(Y)[None, :] >= X @ Y.T - 1e-9)
