"""Dirichlet problem for the primal equation det D^2 u = psi (1 - |Du|^2)^2 on
disks, and the prescribed-cone construction on growing balls.

A disk B_rho(c) is handled in the variable z = (x - c) / rho on the unit disk
(Cartesian lattice with cut cells); with U(z) = u(c + rho z),

    det D^2_z U = rho^4 psi(c + rho z) (1 - |D_z U|^2 / rho^2)^2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import CloughTocher2DInterpolator

from ..convex_analysis import SupportSet, convex_hull, hausdorff_polytopes
from ..errors import DegenerateCone, GridTooCoarse, InvalidParams, NewtonStall
from .grid import DiscreteMA, Stencils, build_stencils
from .problem import DomainSpec, _fourier_extension
from .solve import CONVEX_TOL, SOLVER_TOL, _convexity_certificate, _path_solve, newton

log = logging.getLogger(__name__)

# the primal solution is smooth up to the boundary: no radial compression
_UNIT = DomainSpec("disk", radial_map=False)


def _as_field(psi) -> Callable:
    if callable(psi):
        return lambda X: np.broadcast_to(np.asarray(psi(X), dtype=float), np.shape(X)[:-1])
    val = float(psi)
    return lambda X: np.full(np.shape(X)[:-1], val)


def primal_rhs(psi: Callable, center, radius: float, nodal=None) -> Callable:
    """(R, dR/dp) in the z variable; ``nodal`` (values at the lattice nodes)
    replaces psi when given."""
    rho = float(radius)
    c = np.asarray(center, dtype=float)

    def rhs(z, p):
        q = 1.0 - np.sum(p * p, -1) / rho**2
        qs = np.maximum(q, 1e-12)  # timelike iterates get a huge (finite) residual
        f = rho**4 * (nodal if nodal is not None else psi(c + rho * z))
        return f * qs**2, (f * 2 * qs * (q > 0))[:, None] * (-2 * p / rho**2)
    return rhs


@dataclass
class PrimalSolution:
    """Discrete solution on the disk B_radius(center)."""

    center: np.ndarray
    radius: float
    stencils: Stencils = field(repr=False)
    op: DiscreteMA = field(repr=False)
    w: np.ndarray = field(repr=False)  # U at the nodes (= u at the node images)
    boundary: Callable = field(repr=False)
    residual_inf: float = math.nan
    convexity_certificate: float = math.nan
    history: list = field(default_factory=list)

    @property
    def h(self) -> float:
        return self.stencils.h

    @property
    def x(self) -> np.ndarray:
        return self.center + self.radius * self.op.y

    @property
    def u(self) -> np.ndarray:
        return self.w

    def gradients(self) -> np.ndarray:
        return self.op.gradient_y(self.w) / self.radius

    def hessians(self) -> np.ndarray:
        return self.op.hessian_y(self.w) / self.radius**2

    def interpolant(self):
        if getattr(self, "_interp", None) is None:
            zb = _UNIT.boundary_points(1024)
            P = np.vstack([self.stencils.xi, self.stencils.yb_xi, _UNIT.to_xi(zb)])
            V = np.concatenate([self.w, self.op.phi_b, self.boundary(self.center + self.radius * zb)])
            P, keep = np.unique(np.round(P, 13), axis=0, return_index=True)
            self._interp = CloughTocher2DInterpolator(P, V[keep])
        return self._interp

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        z = (X.reshape(-1, 2) - self.center) / self.radius
        return self.interpolant()(_UNIT.to_xi(z)).reshape(X.shape[:-1])


def _hyperboloid(psi0: float, center):
    a2 = 1.0 / psi0

    def H(X):
        return np.sqrt(a2 + np.sum((np.asarray(X) - center) ** 2, -1))
    return H


def smoothed_support(E: SupportSet, eps: float = 1.0) -> Callable:
    """u_0(x) = max over y in conv(E) of x.y + eps sqrt(1 - |y|^2).

    Convex and strictly spacelike (the maximizer never reaches the unit
    circle), with V_E <= u_0 <= V_E + eps; for a round E it is
    sqrt(eps^2 + |x|^2)."""
    V = convex_hull(E.E).vertices
    A, B = V, np.roll(V, -1, axis=0)
    D = B - A
    from ..convex_analysis import Region

    region = Region("polygon", vertices=V) if len(V) >= 3 else None

    def u0(X):
        X = np.asarray(X, dtype=float)
        flat = X.reshape(-1, 2)
        r = np.sqrt(eps * eps + np.sum(flat * flat, -1))
        y_free = flat / r[:, None]
        out = r.copy()
        outside = ~region.contains(y_free) if region is not None else np.ones(len(flat), bool)
        if outside.any():
            x = flat[outside][:, None, :]
            def g(t):  # derivative of the concave edge objective in t
                y = A + t[..., None] * D
                den = np.sqrt(np.maximum(1 - np.sum(y * y, -1), 1e-300))
                return np.sum(x * D, -1) - eps * np.sum(y * D, -1) / den
            lo = np.zeros((x.shape[0], len(A)))
            hi = np.ones_like(lo)
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                up = g(mid) > 0
                lo = np.where(up, mid, lo)
                hi = np.where(up, hi, mid)
            y = A + (0.5 * (lo + hi))[..., None] * D
            val = np.sum(x * y, -1) + eps * np.sqrt(np.maximum(1 - np.sum(y * y, -1), 0.0))
            out[outside] = np.max(val, axis=1)
        return out.reshape(X.shape[:-1])
    return u0


def _start_rhs(st: Stencils, start_vals, start_b, rho: float):
    """Nodal psi for which ``start`` solves the discrete problem exactly."""
    op = DiscreteMA(st, start_b, lambda z, p: (np.ones(len(z)), None))
    M11, M22, M12, p = op.parts(start_vals)
    det = (M11 * M22 - M12**2) / op.detJ**2
    q = 1.0 - np.sum(p * p, -1) / rho**2
    return det / (rho**4 * np.maximum(q, 1e-12) ** 2)


def solve_primal_disk(boundary: Callable, psi=1.0, center=(0.0, 0.0), radius: float = 1.0,
                      h: float = 1.0 / 64, tol: float = SOLVER_TOL, warm_start=None,
                      start: Optional[Callable] = None, multilevel: bool = True) -> PrimalSolution:
    """Solve det D^2 u = psi (1 - |Du|^2)^2 in B_radius(center), u = boundary on the circle.

    Newton starts from ``warm_start`` (a callable on x), else from the
    solution on the 2h lattice, else from ``start`` (default: the hyperboloid
    of curvature psi(center)) plus the harmonic extension of the data
    mismatch. If that fails, the problem is deformed from the one that
    ``start`` solves discretely (its own trace and discrete curvature).
    """
    c = np.asarray(center, dtype=float)
    rho = float(radius)
    if rho <= 0:
        raise InvalidParams("radius must be positive")
    psi_f = _as_field(psi)
    st = build_stencils(_UNIT, h)
    Xb = c + rho * st.yb
    g_b = np.asarray(boundary(Xb), dtype=float)
    psi0 = float(psi_f(c[None, :])[0])
    if not psi0 > 0:
        raise InvalidParams("psi must be positive")
    S = start if start is not None else _hyperboloid(psi0, c)
    m = 4096
    th = 2 * np.pi * np.arange(m) / m
    ring = c + rho * np.stack([np.cos(th), np.sin(th)], -1)
    mismatch = _fourier_extension(np.asarray(boundary(ring), dtype=float) - S(ring))
    z = st.y
    X = c + rho * z
    op = DiscreteMA(st, g_b, primal_rhs(psi_f, c, rho))

    if warm_start is None and multilevel:
        try:
            build_stencils(_UNIT, 2 * h)
        except GridTooCoarse:
            pass
        else:
            warm_start = solve_primal_disk(boundary, psi, c, rho, 2 * h, tol, start=start)
    w0 = S(X) + mismatch(z)
    if warm_start is not None:
        ws = np.asarray(warm_start(X), dtype=float)
        w0 = np.where(np.isfinite(ws), ws, w0)
    try:
        res = newton(op, w0, tol, max_iter=40)
        w, hist = res.w, res.history
        if _convexity_certificate(op, w) < -CONVEX_TOL:
            raise NewtonStall("non-convex Newton limit", history=hist)
    except NewtonStall as err:
        log.info("direct primal Newton failed (%s); deforming from the start function", err)
        S_x, S_b = S(X), S(Xb)
        psi_S = _start_rhs(st, S_x, S_b, rho)
        psi_X = psi_f(X)

        def build(t):
            nodal = (1 - t) * psi_S + t * psi_X
            o = DiscreteMA(st, (1 - t) * S_b + t * g_b, primal_rhs(psi_f, c, rho, nodal=nodal))
            return o, t * mismatch(z)
        op, w, more = _path_solve(build, S_x, tol)
        hist = list(err.history) + more
    bres = op.backward_residual(w)
    return PrimalSolution(center=c, radius=rho, stencils=st, op=op, w=w, boundary=boundary,
                          residual_inf=float(np.max(np.abs(bres))),
                          convexity_certificate=_convexity_certificate(op, w), history=hist)


@dataclass
class ConeStage:
    radius: float
    residual_inf: float
    lower_margin: float  # min (u_k - V_E) over the nodes
    upper_margin: float  # min (hyperboloid barrier - u_k)
    gradient_hull_hausdorff: float  # conv(Du_k(nodes)) vs conv(E)
    max_grad: float

    def to_json(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


@dataclass
class ConeReport:
    E: SupportSet
    stages: list
    solutions: list = field(repr=False)
    blowdown_error: float  # max |u_K(R x)/R - V_E(x)| over nodes with |x| <= 1, R = radius_K
    cone_hausdorff: float  # Hausdorff distance of the final gradient hull to conv(E)

    def to_json(self) -> dict:
        return {"E": self.E.to_json(), "stages": [s.to_json() for s in self.stages],
                "blowdown_error": self.blowdown_error, "cone_hausdorff": self.cone_hausdorff}


def prescribed_cone_solve(E: Union[SupportSet, np.ndarray], radius_schedule: Sequence[float] = (2.0, 4.0, 8.0),
                          h: float = 1.0 / 64, tol: float = SOLVER_TOL) -> ConeReport:
    """Solve K = 1 on growing balls B_k with data V_E on the boundary.

    V_E <= u_k (|DV_E| = 1 > |Du_k|) and u_k <= sqrt(1 + |x|^2) + k - sqrt(1 + k^2)
    (comparison with the hyperboloid, whose trace k dominates V_E) are
    reported per stage; the blowdown of the last u_k is compared with V_E and
    its gradient image with conv(E).
    """
    if not isinstance(E, SupportSet):
        E = SupportSet(E)
    if E.n != 2:
        raise InvalidParams("the cone construction is implemented for n = 2")
    if not E.nondegenerate:
        raise DegenerateCone("E lies in a hyperplane")
    radii = [float(r) for r in radius_schedule]
    if not radii or any(r <= 0 for r in radii) or any(np.diff(radii) <= 0):
        raise InvalidParams("radius_schedule must be positive and increasing")
    VE = lambda X: E(np.asarray(X, dtype=float))
    hull = convex_hull(E.E).vertices
    u0 = smoothed_support(E)
    stages, sols = [], []
    for k in radii:
        sol = solve_primal_disk(VE, 1.0, (0.0, 0.0), k, h, tol, start=u0)
        X, u = sol.x, sol.u
        upper = np.sqrt(1 + np.sum(X * X, -1)) + k - math.sqrt(1 + k * k)
        G = sol.gradients()
        stages.append(ConeStage(radius=k, residual_inf=sol.residual_inf,
                                lower_margin=float(np.min(u - VE(X))),
                                upper_margin=float(np.min(upper - u)),
                                gradient_hull_hausdorff=hausdorff_polytopes(G, hull),
                                max_grad=float(np.max(np.linalg.norm(G, axis=-1)))))
        sols.append(sol)
        log.info("cone stage R=%g res=%.2e lower=%.2e upper=%.2e haus=%.3f", k, sol.residual_inf,
                 stages[-1].lower_margin, stages[-1].upper_margin, stages[-1].gradient_hull_hausdorff)
    last = sols[-1]
    Xs = last.x / last.radius
    blow = float(np.max(np.abs(last.u / last.radius - VE(Xs))))
    return ConeReport(E=E, stages=stages, solutions=sols, blowdown_error=blow,
                      cone_hausdorff=stages[-1].gradient_hull_hausdorff)
