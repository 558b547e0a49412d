"""Barriers for the Dirichlet problem and the search for their parameters.

Disk, Lipschitz data (paper's Lipschitz theorem). At a boundary point yh the
profile conjugates u_c^*, rotated so that their zero direction is yh, give

    phi(yh) + psi_max^{1/2} u_{c1}^*(R y) - A (1 - yh.y) <= v
    v <= phi(yh) + psi_min^{1/2} u_{c2}^*(R y) + A (1 - yh.y)

as soon as psi_max^{1/2} |lambda_{c1}| >= L, psi_min^{1/2} lambda_{c2} >= L and
A >= L (on the circle the first two terms dominate L |y - yh|).

Half-disk (flat side affine): with a(y) the affine data on the flat side and
u_t = shifted c = 1 conjugate (zero on the whole boundary),

    a - A y_1 + psi_max^{1/2} u_t <= v <= a + A y_1 + psi_min^{1/2} u_t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from ..errors import InvalidParams, SearchFailed
from .problem import MAProblem

SAFETY = 2.0


@lru_cache(maxsize=64)
def _lambda(c: float) -> float:
    from ..symmetric_family import lambda_c

    return lambda_c(c, 2).lambda_c


@lru_cache(maxsize=16)
def _conjugate(c: float, shift: float = 0.0):
    from ..convex_analysis import ProfileConjugate
    from ..symmetric_family import ProfileParams, integrate_profile

    p = integrate_profile(ProfileParams(c, 2), t_max=4000.0)
    return ProfileConjugate(p, shift=shift)


def barrier_params_lipschitz(L: float, psi_bounds, safety: float = SAFETY,
                             c_min: float = -1e6, k_max: int = 40) -> tuple:
    """(c1, c2, A) with lambda_{c1} <= -safety L / psi_max^{1/2},
    lambda_{c2} >= safety L / psi_min^{1/2} and A = safety L.

    c1 is searched along -1, -2, -4, ... and c2 along 1 - 2^{-k}; the first
    hit is refined by bisection towards c = 0 so the barriers are not steeper
    than needed. L = 0 gives small |c| and A = 0.
    """
    psi_min, psi_max = map(float, psi_bounds)
    if not (L >= 0 and 0 < psi_min <= psi_max):
        raise InvalidParams("need L >= 0 and 0 < psi_min <= psi_max")
    A = safety * L
    t1 = safety * L / math.sqrt(psi_max)
    t2 = safety * L / math.sqrt(psi_min)
    if L == 0:
        return -1e-3, 1e-3, 0.0

    c = -1.0
    while _lambda(c) > -t1:
        c *= 2
        if c < c_min:
            raise SearchFailed(f"lambda_c stays above {-t1:.3g} for c >= {c_min:g}")
    lo, hi = c, c / 2 if c < -1 else 0.0  # lambda(lo) <= -t1 < lambda(hi)
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        if _lambda(mid) <= -t1:
            lo = mid
        else:
            hi = mid
    c1 = lo

    for k in range(1, k_max + 1):
        c = 1.0 - 2.0 ** (-k)
        if _lambda(c) >= t2:
            break
    else:
        raise SearchFailed(f"lambda_c stays below {t2:.3g} for c <= 1 - 2^-{k_max}")
    lo, hi = (1.0 - 2.0 ** (-(k - 1)) if k > 1 else 0.0), c
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        if _lambda(mid) >= t2:
            hi = mid
        else:
            lo = mid
    return c1, hi, A


def _rotated_coords(Y, yh):
    """(y . yh_perp, y . yh): the profile's zero direction is the second axis."""
    perp = np.array([yh[1], -yh[0]])
    return np.stack([Y @ perp, Y @ yh], -1)


@dataclass
class BarrierSet:
    """Evaluators of the barriers of one problem (all vectorized on (..., 2))."""

    lower_simple: Callable
    profile_lower: Optional[Callable] = None
    profile_upper: Optional[Callable] = None
    linear_factor: Optional[Callable] = None
    coefficients: dict = field(default_factory=dict)

    def evaluators(self) -> dict:
        out = {"lower_simple": ("lower", self.lower_simple)}
        if self.profile_lower is not None:
            out["profile_lower"] = ("lower", self.profile_lower)
        if self.profile_upper is not None:
            out["profile_upper"] = ("upper", self.profile_upper)
        return out


def build_barriers(problem: MAProblem, n_anchor: int = 32, L: Optional[float] = None,
                   verify_samples: int = 512) -> BarrierSet:
    """Barriers for a disk or half-disk problem, with the boundary inequalities
    they rely on verified on ``verify_samples`` boundary points."""
    from .solve import lower_simple_values

    dom = problem.domain
    psi_min, psi_max = problem.eta.psi_bounds(dom)
    lower = lambda Y: lower_simple_values(problem, np.asarray(Y, float))
    if dom.kind == "half-disk":
        lam1 = _lambda(1.0)
        ut = _conjugate(1.0, lam1)
        a = problem.boundary._flat_affine(dom)
        aff = lambda Y: a[0] + np.asarray(Y)[..., 0] * a[1] + np.asarray(Y)[..., 1] * a[2]
        P = dom.boundary_points(verify_samples)
        arc = P[:, 0] > 1e-9
        A = float(np.max(np.abs(problem.boundary(P[arc]) - aff(P[arc])) / P[arc, 0]))
        A *= 1 + 1e-9

        def plo(Y):
            Y = np.asarray(Y, float)
            return aff(Y) - A * Y[..., 0] + math.sqrt(psi_max) * ut(Y)

        def pup(Y):
            Y = np.asarray(Y, float)
            return aff(Y) + A * Y[..., 0] + math.sqrt(psi_min) * ut(Y)
        return BarrierSet(lower_simple=lower, profile_lower=plo, profile_upper=pup,
                          linear_factor=lambda Y: np.asarray(Y)[..., 0],
                          coefficients={"A": A, "c": 1.0, "shift": lam1})
    if dom.kind != "disk":
        return BarrierSet(lower_simple=lower)
    R = dom.radius
    if L is None:
        L = problem.boundary.validate(dom)
    c1, c2, A = barrier_params_lipschitz(L, (psi_min, psi_max))
    u1, u2 = _conjugate(c1), _conjugate(c2)
    th = 2 * np.pi * np.arange(n_anchor) / n_anchor
    anchors = np.stack([np.cos(th), np.sin(th)], -1)
    phi_a = problem.boundary(R * anchors)

    def plo(Y):
        Y = np.asarray(Y, float) / R
        vals = [phi_a[i] + math.sqrt(psi_max) * u1(_rotated_coords(Y, yh)) - A * R * (1 - Y @ yh)
                for i, yh in enumerate(anchors)]
        return np.max(vals, axis=0)

    def pup(Y):
        Y = np.asarray(Y, float) / R
        vals = [phi_a[i] + math.sqrt(psi_min) * u2(_rotated_coords(Y, yh)) + A * R * (1 - Y @ yh)
                for i, yh in enumerate(anchors)]
        return np.min(vals, axis=0)
    bs = BarrierSet(lower_simple=lower, profile_lower=plo, profile_upper=pup,
                    linear_factor=lambda Y: 1 - np.asarray(Y)[..., 1],
                    coefficients={"c1": c1, "c2": c2, "A": A, "L": L})
    P = dom.boundary_points(verify_samples)
    phi = problem.boundary(P)
    bs.coefficients["boundary_slack_lower"] = float(np.min(phi - plo(P)))
    bs.coefficients["boundary_slack_upper"] = float(np.min(pup(P) - phi))
    return bs


def barrier_check(solution, barriers: BarrierSet) -> dict:
    """Worst slack of each barrier inequality over all nodes (negative = violated)."""
    Y, v = solution.y, solution.w
    out = {}
    for name, (side, fn) in barriers.evaluators().items():
        b = fn(Y)
        slack = v - b if side == "lower" else b - v
        out[name] = float(np.min(slack))
    solution.barrier_margins.update(out)
    return out


def barrier_pass(margins: dict, h: float, C: float = 1.0) -> bool:
    return all(m >= -C * h for m in margins.values())
