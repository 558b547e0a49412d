import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minkhyp.core_geometry import (GraphPatch, GridSpec, JetPoint, LorentzPoint,
                                   classify_spacelike, gauss_curvature_field,
                                   mean_curvature_field, shape_at)
from minkhyp.errors import InvalidParams, NotSpacelike


def hyperboloid_jet(x):
    x = np.asarray(x, float)
    s = np.sqrt(1 + x @ x)
    return JetPoint(s, x / s, (np.eye(x.size) - np.outer(x, x) / s**2) / s)


def test_lorentz_norm():
    assert LorentzPoint(np.array([3.0, 4.0]), 5.0).norm2() == 0.0


@given(st.lists(st.floats(-20, 20), min_size=2, max_size=4))
def test_hyperboloid_is_umbilic_with_K_one(x):
    s = shape_at(hyperboloid_jet(x))
    assert s.K == pytest.approx(1.0, rel=1e-8)
    assert s.K_from_eigen == pytest.approx(s.K, rel=1e-8)
    np.testing.assert_allclose(s.principal_curvatures, 1.0, rtol=1e-6)
    assert s.H == pytest.approx(1.0, rel=1e-6)


@given(st.floats(-0.9, 0.9), st.floats(-0.4, 0.4), st.floats(0.1, 5), st.floats(0.1, 5))
def test_curvature_identities(p1, p2, a, b):
    D2 = np.array([[a, 0.3], [0.3, b]])
    if np.hypot(p1, p2) > 0.95:
        return
    s = shape_at(JetPoint(0.0, [p1, p2], D2))
    assert s.K == pytest.approx(s.K_from_eigen, rel=1e-9, abs=1e-12)
    assert np.allclose(s.g @ s.g_inv, np.eye(2))
    # the normal is future timelike of unit Lorentzian length
    nu = s.nu
    assert nu[:-1] @ nu[:-1] - nu[-1] ** 2 == pytest.approx(-1.0)


def test_not_spacelike_and_bad_jets():
    with pytest.raises(NotSpacelike):
        shape_at(JetPoint(0.0, [1.0, 0.0], np.eye(2)))
    with pytest.raises(InvalidParams):
        JetPoint(0.0, [0.0, 0.0], np.eye(3))
    with pytest.raises(InvalidParams):
        JetPoint(0.0, [0.0, 0.0], [[1.0, 2.0], [0.0, 1.0]])


def test_grid_fields_second_order():
    errs = []
    for h in (0.1, 0.05):
        g = GridSpec.box([-1, -1], [1, 1], h)
        p = GraphPatch.from_function(g, lambda X: np.sqrt(1 + np.sum(X * X, -1)))
        K = gauss_curvature_field(p)[2:-2, 2:-2]
        H = mean_curvature_field(p)[2:-2, 2:-2]
        errs.append(max(np.max(np.abs(K - 1)), np.max(np.abs(H - 1))))
    assert errs[1] < errs[0] / 3


def test_classify_and_csv_roundtrip(tmp_path):
    g = GridSpec.box([-1, -1], [1, 1], 0.25)
    cone = GraphPatch.from_function(g, lambda X: np.linalg.norm(X, axis=-1),
                                    lambda X: X / np.maximum(np.linalg.norm(X, axis=-1), 1e-300)[..., None])
    assert classify_spacelike(cone).kind == "weakly-spacelike"
    steep = GraphPatch.from_function(g, lambda X: 2 * X[..., 0])
    assert classify_spacelike(steep).kind == "not-spacelike"
    flat = GraphPatch.from_function(g, lambda X: 0.1 * X[..., 0])
    assert classify_spacelike(flat).kind == "strictly-spacelike"
    flat.to_csv(tmp_path / "p.csv")
    back = GraphPatch.from_csv(tmp_path / "p.csv")
    np.testing.assert_array_equal(back.u_values, flat.u_values)


def test_patch_validation():
    g = GridSpec.box([0, 0], [1, 1], 0.5)
    with pytest.raises(InvalidParams):
        GraphPatch(g, np.zeros((2, 2)))
    with pytest.raises(InvalidParams):
        GridSpec((0.0,), -1.0, (3,))
