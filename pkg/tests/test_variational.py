import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minkhyp.core_geometry import GraphPatch, GridSpec
from minkhyp.errors import HypothesisViolated, NotWeaklySpacelike
from minkhyp.variational import (ProbeSpec, admissible_subsolution_check, cauchy_schwarz_margin,
                                 cell_weights, disk_region, discrete_convexity, ellipse_region,
                                 maximality_probe, spacelike_volume, volume_comparison)


def hyp(g, a=1.0):
    return GraphPatch.from_function(g, lambda X: a * np.sqrt(1 + np.sum(X * X, -1) / a**2),
                                    lambda X: X / np.sqrt(a * a + np.sum(X * X, -1))[..., None])


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_cauchy_schwarz(v):
    p, q = np.array(v[:2]), np.array(v[2:])
    if p @ p > 1 or q @ q > 1:
        return
    assert cauchy_schwarz_margin(p, q) >= -1e-15


def test_cell_weights_area():
    g = GridSpec.box([-1.25, -1.25], [1.25, 1.25], 1 / 32)
    w = cell_weights(g, disk_region())
    assert w.sum() * g.h**2 == pytest.approx(math.pi, abs=2e-3)
    e = cell_weights(g, ellipse_region((0, 0), np.diag([1.0, 4.0])))
    assert e.sum() * g.h**2 == pytest.approx(math.pi / 2, abs=2e-3)


def test_volume_of_hyperboloid_converges():
    oracle = 2 * math.pi * (math.sqrt(2) - 1)  # int_B1 1/sqrt(1+r^2)
    errs = []
    for h in (1 / 16, 1 / 32):
        g = GridSpec.box([-1.25, -1.25], [1.25, 1.25], h)
        errs.append(abs(spacelike_volume(hyp(g), disk_region()).volume - oracle))
    assert errs[1] < errs[0] / 3


def test_not_weakly_spacelike():
    g = GridSpec.box([-1, -1], [1, 1], 1 / 16)
    u = GraphPatch.from_function(g, lambda X: 2 * np.sum(X * X, -1))
    with pytest.raises(NotWeaklySpacelike):
        spacelike_volume(u, disk_region())


def test_volume_comparison_and_hypotheses():
    g = GridSpec.box([-1.25, -1.25], [1.25, 1.25], 1 / 32)
    u1 = hyp(g)
    par = GraphPatch.from_function(g, lambda X: 0.5 * np.sum(X * X, -1) + math.sqrt(2) - 0.5,
                                   lambda X: X)
    v = volume_comparison(u1, par, disk_region())
    assert v.passed and v.vol1 > v.vol2 and v.cs_min >= 0
    assert volume_comparison(u1, u1, disk_region()).passed
    with pytest.raises(HypothesisViolated):
        volume_comparison(par, u1, disk_region())
    shifted = GraphPatch(g, u1.u_values - 0.1)
    with pytest.raises(HypothesisViolated):
        volume_comparison(u1, shifted, disk_region())


def test_subsolution_check():
    g = GridSpec.box([-1, -1], [1, 1], 1 / 32)
    assert admissible_subsolution_check(hyp(g), 1.0, tol=1e-3).passed
    # a = 1/2 gives K = 4
    assert admissible_subsolution_check(hyp(g, 0.5), 4.0, tol=3e-2).passed
    aff = GraphPatch.from_function(g, lambda X: 0.3 * X[..., 0])
    assert not admissible_subsolution_check(aff, 1.0).passed
    conc = GraphPatch.from_function(g, lambda X: -0.1 * np.sum(X * X, -1))
    assert discrete_convexity(conc)[0] < 0


def test_maximality_probe_bumps_only():
    g = GridSpec.box([-1, -1], [1, 1], 1 / 32)
    r = maximality_probe(hyp(g), 1.0, ProbeSpec(disks=(), n_bumps=6, seed=3))
    assert r.passed and r.n_competitors >= 1
    assert all(rec.vol_u >= rec.vol_v - 1e-9 for rec in r.records if rec.admissible)
