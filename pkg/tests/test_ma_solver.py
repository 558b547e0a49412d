import math

import numpy as np
import pytest

from minkhyp.convex_analysis import ConvexGridFn, Region, SupportSet
from minkhyp.core_geometry import GridSpec
from minkhyp.errors import DegenerateCone, GridTooCoarse, InvalidParams
from minkhyp.ma_solver import (DomainSpec, MAProblem, barrier_check, barrier_pass,
                               build_barriers, constant_data, constant_eta,
                               gradient_range_radius, lambda_wedge_data, lipschitz_samples_data,
                               prescribed_cone_solve, problem_from_config, solve_fixed,
                               solve_primal_disk)
from minkhyp.variational import cauchy_schwarz_margin

H = 1 / 32


def disk_problem(phi=None, eta=1.0, h=H):
    return MAProblem(DomainSpec("disk"), constant_eta(eta), phi or constant_data(0.0), grid_h=h)


@pytest.fixture(scope="module")
def zero():
    return solve_fixed(disk_problem(), 1.0)


@pytest.fixture(scope="module")
def wedge():
    return solve_fixed(disk_problem(lambda_wedge_data(-0.5)), 1.0)


def test_closed_form(zero):
    y = zero.y
    m = np.sum(y * y, 1) <= 0.81
    assert zero.residual_inf < 1e-9
    assert np.max(np.abs(zero.w[m] + np.sqrt(1 - np.sum(y[m] ** 2, 1)))) < 5e-3
    assert zero.convexity_certificate > 0


def mirror_index(y):
    key = {tuple(np.round(p, 10)): i for i, p in enumerate(y)}
    return np.array([key[(round(-a, 10) + 0.0, round(b, 10) + 0.0)] for a, b in y])


def test_reflection_symmetry(wedge):
    j = mirror_index(wedge.y)
    assert np.max(np.abs(wedge.w - wedge.w[j])) < 1e-8


def test_comparison_principle(zero):
    # larger right-hand side (smaller eta) and lower boundary data give a lower solution
    low = solve_fixed(disk_problem(constant_data(-0.1), eta=0.5), 1.0)
    assert np.all(low.w <= zero.w + 1e-12)


def test_lipschitz_data_and_barriers():
    th = np.linspace(0, 2 * np.pi, 9)[:-1]
    data = lipschitz_samples_data(th, 0.3 * np.cos(th))
    prob = disk_problem(data)
    sol = solve_fixed(prob, 1.0)
    m = barrier_check(sol, build_barriers(prob))
    assert barrier_pass(m, H)


def test_cauchy_schwarz_on_solution_gradients(zero):
    G = zero.gradients()
    # the Legendre dual gradients are the x-points; on |y| < 1 compare y with itself and 0
    assert np.all(cauchy_schwarz_margin(zero.y, zero.y[::-1]) >= -1e-12)
    assert np.all(np.isfinite(G))


def test_gradient_range_grows_and_control_bounded(zero):
    assert gradient_range_radius(zero) > 5
    for h in (1 / 32, 1 / 64):
        g = GridSpec.box([-1, -1], [1, 1], h)
        Y = np.stack(g.mesh(), -1)
        mask = np.sum(Y * Y, -1) < 1
        vf = ConvexGridFn.sample(lambda Y: 0.5 * np.sum(Y * Y, -1), g, region=Region("disk"), mask=mask)
        assert gradient_range_radius(vf) <= 1 + h


def test_primal_recovers_hyperboloid():
    u = lambda X: np.sqrt(1 + np.sum(np.asarray(X) ** 2, -1))
    sol = solve_primal_disk(u, 1.0, (0.1, -0.2), 0.6, h=H)
    assert np.max(np.abs(sol.u - u(sol.x))) < 1e-3


def test_config_and_validation(tmp_path):
    cfg = {"domain": {"kind": "half-disk", "radius": 1.0},
           "boundary": {"kind": "lambda-wedge", "params": {"lambda": -0.5}},
           "grid_h": H, "exhaustion": "default"}
    p = tmp_path / "c.json"
    import json

    p.write_text(json.dumps(cfg))
    prob = problem_from_config(p)
    assert prob.domain.kind == "half-disk" and len(prob.exhaustion) == len(prob.eps_schedule)
    with pytest.raises(InvalidParams):
        problem_from_config({"domain": {"kind": "disk"}})
    with pytest.raises(InvalidParams):
        DomainSpec("disk", radius=1.5)
    with pytest.raises(InvalidParams):
        DomainSpec("convex-polygon", vertices=((0, 0), (0.5, 0.5), (1, 1)))
    with pytest.raises(InvalidParams):
        MAProblem(DomainSpec("disk"), constant_eta(1.0), constant_data(0.0), eps_schedule=(0.5, 0.25))
    with pytest.raises(GridTooCoarse):
        solve_fixed(disk_problem(h=1 / 8), 1.0)


def test_cone_solver_validation():
    with pytest.raises(DegenerateCone):
        prescribed_cone_solve(SupportSet(np.array([[1.0, 0.0], [-1.0, 0.0]])))
    with pytest.raises(InvalidParams):
        prescribed_cone_solve(SupportSet.circle(4), radius_schedule=(4.0, 2.0))
