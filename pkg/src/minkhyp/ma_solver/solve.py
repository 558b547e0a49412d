"""Newton solves of the discrete problem, epsilon-continuation and exhaustion."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse.linalg as spla
from scipy.interpolate import CloughTocher2DInterpolator

from ..convex_analysis import ConvexGridFn, Region
from ..core_geometry import GridSpec
from ..errors import GridTooCoarse, MonotonicityViolated, NewtonStall, NonConvexIterate
from .grid import DiscreteMA, Stencils, build_stencils, dual_rhs
from .problem import DomainSpec, MAProblem, stage_domain

log = logging.getLogger(__name__)

SOLVER_TOL = 1e-9
ROUNDOFF_FLOOR = 1e-7  # a stalled line search below this counts as converged
STEP_TOL = 1e-12


@dataclass
class NewtonResult:
    w: np.ndarray
    history: list
    iterations: int


def newton(op: DiscreteMA, w0, tol: float = SOLVER_TOL, max_iter: int = 60,
           keep_convex: bool = False) -> NewtonResult:
    """Damped Newton on the residual det M / R' - 1.

    Stops when the backward residual (see DiscreteMA.backward_residual) is below
    ``tol`` or the update is at roundoff level. History records the backward
    residual.
    """
    w = np.array(w0, dtype=float)
    history = []
    for it in range(max_iter):
        F, cache = op.residual(w)
        res = float(np.max(np.abs(op.backward_residual(cache=cache)))) if F.size else 0.0
        history.append(res)
        if not np.isfinite(res):
            raise NewtonStall("non-finite residual", history=history)
        if res < tol:
            return NewtonResult(w=w, history=history, iterations=it)
        try:
            dw = spla.spsolve(op.jacobian(w, cache), -F)
        except RuntimeError as err:  # SuperLU gives up on singular/non-finite systems
            raise NewtonStall(f"factorization failed: {err}", history=history) from err
        if not np.all(np.isfinite(dw)):
            raise NewtonStall("singular Newton system", history=history)
        if np.max(np.abs(dw)) < STEP_TOL * max(1.0, float(np.max(np.abs(w)))):
            return NewtonResult(w=w + dw, history=history, iterations=it)
        # Armijo backtracking on the 2-norm (the max norm need not decrease)
        # and never leave the discrete convex cone
        l2 = float(np.linalg.norm(F))
        floor = min(float(np.min(op.relative_min_eig(w))), 0.0) - 1e-12 if keep_convex else -np.inf
        t = 1.0
        while True:
            Fn, _ = op.residual(w + t * dw)
            rn = float(np.linalg.norm(Fn))
            if (np.isfinite(rn) and rn < (1 - 1e-4 * t) * l2
                    and np.min(op.relative_min_eig(w + t * dw)) >= floor):
                break
            t *= 0.5
            if t < 1e-6:
                break
        if t < 1e-6:
            # F is roundoff-dominated once the update is this small
            if np.max(np.abs(dw)) < 1e-7 * max(1.0, float(np.max(np.abs(w)))):
                t = 1.0
            elif res < ROUNDOFF_FLOOR:
                return NewtonResult(w=w, history=history, iterations=it)
            else:
                raise NewtonStall(f"line search failed at residual {res:.3e}", history=history)
        w = w + t * dw
    raise NewtonStall(f"no convergence in {max_iter} iterations (residual {history[-1]:.3e})",
                      history=history)


@dataclass
class StageReport:
    eps: float
    scale: float
    iterations: int
    residual_inf: float
    seconds: float
    cauchy_increment: float = float("nan")
    sandwich_min: float = float("nan")  # min (v_{k-1} - v_k) on the previous stage's nodes
    majorant_min: float = float("nan")  # min (phi_ext - v_k)
    lower_min: float = float("nan")  # min (v_k - lower_simple)

    def to_json(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


@dataclass
class MASolution:
    problem: MAProblem
    domain: DomainSpec
    eps: float
    stencils: Stencils = field(repr=False)
    op: DiscreteMA = field(repr=False)
    w: np.ndarray = field(repr=False)
    residual_inf: float
    convexity_certificate: float
    stages: list = field(default_factory=list)
    barrier_margins: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    scale: float = 1.0

    @property
    def h(self) -> float:
        return self.stencils.h

    @property
    def y(self) -> np.ndarray:
        return self.op.y

    @property
    def values(self) -> np.ndarray:
        return self.w

    @property
    def boundary_points(self) -> np.ndarray:
        return self.stencils.yb

    @property
    def boundary_values(self) -> np.ndarray:
        return self.op.phi_b

    def gradients(self) -> np.ndarray:
        return self.op.gradient_y(self.w)

    def hessians(self) -> np.ndarray:
        return self.op.hessian_y(self.w)

    def relative_residuals(self) -> np.ndarray:
        return self.op.backward_residual(self.w)

    def interpolant(self):
        """C^1 piecewise-cubic interpolant in reference coordinates, where the
        solution stays Lipschitz up to the boundary."""
        if getattr(self, "_interp", None) is None:
            extra = self.domain.boundary_points(1024)
            P = np.vstack([self.stencils.xi, self.stencils.yb_xi, self.domain.to_xi(extra)])
            V = np.concatenate([self.w, self.boundary_values, self.problem.boundary(extra)
                                if self.domain == stage_domain(self.problem, 1.0)
                                else self.problem.boundary.extension(self.problem.domain)(extra)])
            P, keep = np.unique(np.round(P, 13), axis=0, return_index=True)
            self._interp = CloughTocher2DInterpolator(P, V[keep])
        return self._interp

    def __call__(self, Y):
        Y = np.asarray(Y, dtype=float)
        xi = self.domain.to_xi(Y.reshape(-1, 2))
        return self.interpolant()(xi).reshape(Y.shape[:-1])

    @property
    def v(self) -> ConvexGridFn:
        """The solution resampled on a Cartesian y-grid of spacing h * radius."""
        if getattr(self, "_v", None) is None:
            lo, hi = self._bbox()
            hy = self.h * (self.domain.radius if self.domain.mapped else 1.0)
            grid = GridSpec.box(lo, hi, hy)
            Y = np.stack(grid.mesh(), -1)
            mask = self.domain.contains(Y, strict=True)
            vals = np.where(mask, self(Y), np.nan)
            mask &= np.isfinite(vals)
            self._v = ConvexGridFn(grid=grid, values=vals, mask=mask, region=self.region())
        return self._v

    def _bbox(self):
        d = self.domain
        if d.kind == "disk":
            return -d.radius * np.ones(2), d.radius * np.ones(2)
        if d.kind == "half-disk":
            return np.array([0.0, -d.radius]), d.radius * np.ones(2)
        V = np.asarray(d.vertices)
        return V.min(0), V.max(0)

    def region(self) -> Region:
        d = self.domain
        if d.kind == "convex-polygon":
            return Region("polygon", vertices=d.vertices)
        return Region(d.kind, radius=d.radius)

    @property
    def gradient_range_radius(self) -> float:
        from .diagnostics import gradient_range_radius

        return gradient_range_radius(self)

    def to_csv(self, path) -> None:
        """Rows ``y1,y2,v,residual`` over the interior nodes."""
        data = np.column_stack([self.y, self.w, self.relative_residuals()])
        np.savetxt(path, data, delimiter=",", header="y1,y2,v,residual", comments="", fmt="%.17g")

    def report(self) -> dict:
        return {
            "domain": self.domain.to_json(),
            "h": self.h,
            "eps": self.eps,
            "nodes": int(self.w.size),
            "residual_inf": self.residual_inf,
            "convexity_certificate": self.convexity_certificate,
            "gradient_range_radius": self.gradient_range_radius,
            "barrier_margins": {k: float(v) for k, v in self.barrier_margins.items()},
            "stages": [s.to_json() for s in self.stages],
        }

    def write_report(self, path) -> None:
        Path(path).write_text(json.dumps(self.report(), indent=2))


def _convexity_certificate(op: DiscreteMA, w) -> float:
    return float(np.min(op.relative_min_eig(w)))


def lower_simple_values(problem: MAProblem, y, eps: float = 1.0) -> np.ndarray:
    """phi_min - psi_max^{1/2} sqrt(1 - eps |y|^2) / eps (eps -> 1 gives the paper's barrier)."""
    phi_min = problem_phi_min(problem)
    _, psi_max = problem.eta.psi_bounds(problem.domain)
    r2 = np.sum(np.asarray(y) ** 2, axis=-1)
    return phi_min - np.sqrt(psi_max) * np.sqrt(np.maximum(1 - eps * r2, 0.0)) / eps


def problem_phi_min(problem: MAProblem) -> float:
    P = problem.domain.boundary_points(2048)
    return float(np.min(problem.boundary(P)))


def _operator(problem: MAProblem, eps: float, scale: float, h: float,
              stencils: Optional[Stencils] = None):
    dom = stage_domain(problem, scale)
    st = stencils if stencils is not None else build_stencils(dom, h)
    if scale < 1.0:
        phi_b = problem.boundary.extension(problem.domain)(st.yb)
    else:
        phi_b = problem.boundary(st.yb)
    return dom, st, DiscreteMA(st, phi_b, dual_rhs(problem.eta.psi, eps))


def _barrier_start(op: DiscreteMA, problem: MAProblem, eps: float) -> np.ndarray:
    """psi_max^{1/2} (sqrt(1 - eps R^2) - sqrt(1 - eps |y|^2)) / eps, zero on the circle |y| = R."""
    y = op.y
    _, psi_max = problem.eta.psi_bounds(problem.domain)
    dom = op.st.domain
    R2 = dom.radius**2 if dom.mapped else float(np.max(np.sum(np.asarray(dom.vertices) ** 2, 1)))
    r2 = np.sum(y * y, -1)
    if eps == 0:
        return 0.5 * np.sqrt(psi_max) * (r2 - R2)
    return np.sqrt(psi_max) * (np.sqrt(1 - eps * R2) - np.sqrt(1 - eps * r2)) / eps


CONVEX_TOL = 1e-6


def _path_solve(build, w, tol: float, d0: float = 1.0, min_step: float = 1.0 / 256,
                max_iter: int = 15):
    """Follow a one-parameter family of discrete problems from tau = 0 to 1.

    ``build(tau)`` returns (operator, harmonic extension at its nodes); ``w``
    solves the tau = 0 problem. Steps use the harmonic predictor
    w + ext(tau') - ext(tau), and a step whose Newton limit is not discretely
    convex counts as a failure and is halved.
    """
    tau, dt = 0.0, d0
    op, e = build(0.0)
    hist = []
    while tau < 1.0:
        t1 = min(1.0, tau + dt)
        op1, e1 = build(t1)
        try:
            res = newton(op1, w + e1 - e, tol, max_iter=max_iter)
            hist += res.history
            ok = _convexity_certificate(op1, res.w) >= -CONVEX_TOL
        except NewtonStall as err:
            hist += err.history
            ok = False
            log.debug("path step failed: %s", err)
        else:
            if not ok:
                log.debug("path step non-convex: %.3e", _convexity_certificate(op1, res.w))
        log.debug("path tau %.4f -> %.4f ok=%s newton=%d", tau, t1, ok, len(hist))
        if not ok:
            dt *= 0.5
            if dt < min_step:
                raise NewtonStall(f"continuation stalled at tau = {tau:.4f}", history=hist)
            continue
        w, tau, op, e = res.w, t1, op1, e1
        dt = min(2 * dt, 0.5)
    return op, w, hist


def _data_homotopy(problem: MAProblem, eps: float, scale: float, st: Stencils,
                   tol: float) -> tuple:
    """Solve with boundary data s * phi, s: 0 -> 1, from the barrier solution at s = 0."""
    _, _, op = _operator(problem, eps, scale, st.h, stencils=st)
    ext_y = problem.boundary.extension(problem.domain)(op.y)
    op0 = DiscreteMA(st, 0 * op.phi_b, op.rhs)
    res = newton(op0, _barrier_start(op, problem, eps), tol)

    def build(s):
        return DiscreteMA(st, s * op.phi_b, op.rhs), s * ext_y
    op1, w, hist = _path_solve(build, res.w, tol)
    return op1, w, res.history + hist


def solve_fixed(problem: MAProblem, eps: float = 1.0, scale: float = 1.0, warm_start=None,
                h: Optional[float] = None, tol: float = SOLVER_TOL,
                multilevel: bool = True) -> MASolution:
    """Solve det D^2 v = psi (1 - eps|y|^2)^{-2} on the scaled domain.

    Newton starts from ``warm_start``. By default that is the solution on the
    grid of spacing 2h when such a grid is still admissible, and the lower
    barrier otherwise. If Newton stalls or lands on a non-convex discrete
    solution, the problem is solved by continuation in the boundary data
    from the barrier solution.
    """
    h = problem.grid_h if h is None else h
    dom, st, op = _operator(problem, eps, scale, h)
    if warm_start is None and multilevel:
        try:
            build_stencils(dom, 2 * h)
        except GridTooCoarse:
            pass
        else:
            warm_start = solve_fixed(problem, eps, scale, h=2 * h, tol=tol)
    if warm_start is None:
        w0 = lower_simple_values(problem, op.y, eps)
    elif callable(warm_start):
        w0 = np.asarray(warm_start(op.y), dtype=float)
        bad = ~np.isfinite(w0)
        w0[bad] = lower_simple_values(problem, op.y[bad], eps)
    else:
        w0 = np.asarray(warm_start, dtype=float)
    try:
        res = newton(op, w0, tol)
        w, hist = res.w, res.history
        if _convexity_certificate(op, w) < -CONVEX_TOL:
            raise NewtonStall("non-convex Newton limit", history=hist)
    except NewtonStall as err:
        log.info("direct Newton failed (%s); continuing in the boundary data", err)
        op, w, more = _data_homotopy(problem, eps, scale, st, tol)
        hist = list(err.history) + more
    sol = _finish(problem, dom, eps, st, op, w, hist)
    sol.scale = scale
    return sol


def _finish(problem, dom, eps, st, op, w, hist) -> MASolution:
    F, cache = op.residual(w)
    bres = op.backward_residual(cache=cache)
    cert = _convexity_certificate(op, w)
    if cert < -1e-6:
        raise NonConvexIterate(f"discrete Hessian has eigenvalue {cert:.3e}")
    return MASolution(problem=problem, domain=dom, eps=eps, stencils=st, op=op, w=w,
                      residual_inf=float(np.max(np.abs(bres))), convexity_certificate=cert,
                      history=hist)


def exhaustion_solve(problem: MAProblem, h: Optional[float] = None, tol: float = SOLVER_TOL,
                     sandwich_tol: Optional[float] = None, check: bool = True) -> MASolution:
    """Solve along (eps_k, Omega_k), warm-starting each stage from the previous.

    Asserts phi_ext >= v_k, v_{k} >= v_{k+1} and v_k >= lower_simple up to
    ``sandwich_tol`` (default h / 4) at the nodes, and records Cauchy increments.
    The last stage is the limit problem (eps = 1 on the full domain) unless
    ``problem.final_stage`` is False.
    """
    h = problem.grid_h if h is None else h
    stol = h / 4 if sandwich_tol is None else sandwich_tol
    ext = problem.boundary.extension(problem.domain)
    stages = problem.stages()
    prev: Optional[MASolution] = None
    reports = []
    hist = []
    for k, (eps, scale) in enumerate(stages):
        t0 = time.perf_counter()
        same = prev is not None and problem.domain.mapped
        dom, st, op = _operator(problem, eps, scale, h,
                                stencils=replace(prev.stencils, domain=stage_domain(problem, scale))
                                if same else None)
        if prev is None:
            fresh = solve_fixed(problem, eps, scale, h=h, tol=tol)
            st, op, w, more = fresh.stencils, fresh.op, fresh.w, fresh.history
        else:
            if prev.w.size == op.N and dom.mapped:
                # same reference lattice: shift by the change of the harmonic extension
                w0 = prev.w + ext(op.y) - ext(prev.y)
            else:
                w0 = prev(op.y)
                bad = ~np.isfinite(w0)
                w0[bad] = ext(op.y[bad])
            try:
                res = newton(op, w0, tol, max_iter=20)
                w, more = res.w, res.history
                if _convexity_certificate(op, w) < -CONVEX_TOL:
                    raise NewtonStall("non-convex Newton limit", history=more)
            except NewtonStall as err:
                fresh = solve_fixed(problem, eps, scale, h=h, tol=tol)
                st, op, w = fresh.stencils, fresh.op, fresh.w
                more = list(err.history) + fresh.history
        hist += more
        sol = _finish(problem, dom, eps, st, op, w, hist)
        sol.scale = scale
        rep = StageReport(eps=eps, scale=scale, iterations=len(more),
                          residual_inf=sol.residual_inf, seconds=time.perf_counter() - t0)
        rep.majorant_min = float(np.min(ext(sol.y) - sol.w))
        rep.lower_min = float(np.min(sol.w - lower_simple_values(problem, sol.y)))
        if prev is not None:
            vk1 = sol(prev.y)
            ok = np.isfinite(vk1)
            diff = prev.w[ok] - vk1[ok]
            rep.sandwich_min = float(np.min(diff))
            rep.cauchy_increment = float(np.max(np.abs(diff)))
            if check and rep.sandwich_min < -stol:
                i = int(np.flatnonzero(ok)[np.argmin(diff)])
                raise MonotonicityViolated(
                    f"v_{k - 1} - v_{k} = {rep.sandwich_min:.3e} at y = {prev.y[i]}",
                    node=tuple(prev.y[i]), stage=k)
        if check and rep.majorant_min < -stol:
            i = int(np.argmin(ext(sol.y) - sol.w))
            raise MonotonicityViolated(f"v_{k} exceeds the harmonic majorant by {-rep.majorant_min:.3e}",
                                       node=tuple(sol.y[i]), stage=k)
        if check and rep.lower_min < -stol:
            i = int(np.argmin(sol.w - lower_simple_values(problem, sol.y)))
            raise MonotonicityViolated(f"v_{k} is below the lower barrier by {-rep.lower_min:.3e}",
                                       node=tuple(sol.y[i]), stage=k)
        reports.append(rep)
        log.info("stage %d eps=%.6f scale=%.6f res=%.2e incr=%.3e", k, eps, scale,
                 rep.residual_inf, rep.cauchy_increment)
        prev = sol
    prev.stages = reports
    prev.barrier_margins["lower_simple"] = reports[-1].lower_min
    return prev
