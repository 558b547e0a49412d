"""Diagnostics of dual solutions: gradient range, strict convexity and the
Legendre map back to an entire spacelike graph."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..convex_analysis import ConvexGridFn, _conjugate_on_product
from ..core_geometry import GraphPatch, GridSpec
from ..errors import NotStrictlyConvex


def _nodes_and_gradients(obj):
    """(Y, v, Dv) at nodes where a gradient is available."""
    if isinstance(obj, ConvexGridFn):
        v = np.where(obj.mask, obj.values, np.nan)
        h = obj.grid.h
        g1 = (np.roll(v, -1, 0) - np.roll(v, 1, 0)) / (2 * h)
        g2 = (np.roll(v, -1, 1) - np.roll(v, 1, 1)) / (2 * h)
        G = np.stack([g1, g2], -1)
        ok = obj.interior_mask(1) & np.all(np.isfinite(G), -1)
        ok[0, :] = ok[-1, :] = ok[:, 0] = ok[:, -1] = False
        return obj.points()[ok], obj.values[ok], G[ok]
    return obj.y, obj.w, obj.gradients()


def gradient_range_radius(obj, n_dirs: int = 720) -> float:
    """Radius of the largest origin-centred disk inside the convex hull of the
    sampled gradients (min over directions of the support function)."""
    _, _, G = _nodes_and_gradients(obj)
    if G.shape[0] == 0:
        return 0.0
    th = 2 * np.pi * np.arange(n_dirs) / n_dirs
    D = np.stack([np.cos(th), np.sin(th)], -1)
    return float(max(0.0, np.min(np.max(G @ D.T, axis=0))))


@dataclass
class ConvexityVerdict:
    passed: bool
    flat_witness: Optional[tuple] = None  # (y_i, y_j, gap)
    boundary_quotients: list = field(default_factory=list)  # per solution: min quotient per t
    quotient_decreasing: Optional[bool] = None
    notes: str = ""


def _flat_segments(vf: ConvexGridFn, rel_curv: float, reach: int = 4):
    """A supporting line touching the convex graph at y - d and y + d means v
    is affine on the segment, i.e. the midpoint deficit
    (v(y - d) + v(y + d)) / 2 - v(y) vanishes. Segments with |2d| > 2h and
    deficit <= rel_curv |2d|^2 are reported as (y - d, y + d, deficit)."""
    V = np.where(vf.mask, vf.values, np.nan)
    h = vf.grid.h
    n0, n1 = V.shape
    P = vf.points()
    worst = None
    for a in range(0, reach + 1):
        for b in range(-reach, reach + 1):
            if (a == 0 and b <= 0) or a * a + b * b <= 1:
                continue
            lo0, hi0 = a, n0 - a
            lo1, hi1 = abs(b), n1 - abs(b)
            c = V[lo0:hi0, lo1:hi1]
            m = V[lo0 - a:hi0 - a, lo1 - b:hi1 - b]
            p = V[lo0 + a:hi0 + a, lo1 + b:hi1 + b]
            ratio = (0.5 * (m + p) - c) / (4 * h * h * (a * a + b * b))
            if np.all(np.isnan(ratio)):
                continue
            k = np.unravel_index(np.nanargmin(ratio), ratio.shape)
            if ratio[k] <= rel_curv and (worst is None or ratio[k] < worst[0]):
                i0, i1 = k[0] + lo0, k[1] + lo1
                worst = (float(ratio[k]), tuple(P[i0 - a, i1 - b]), tuple(P[i0 + a, i1 + b]),
                         float(ratio[k] * 4 * h * h * (a * a + b * b)))
    return None if worst is None else worst[1:]


def _flat_segments_lattice(sol, rel_curv: float, reach: int = 4):
    """Supporting-line test on the solver's own lattice. For nodes xi - d,
    xi, xi + d with images y_-, y_0, y_+ the mean gap of the supporting line
    at y_0 over the two ends is

        delta = (v_+ + v_-) / 2 - v_0 - p_0 . (y_+ + y_- - 2 y_0) / 2,

    which vanishes for affine v. A gradient error at the centre enters only
    through y_+ + y_- - 2 y_0 = O(|d|^2)."""
    st = sol.stencils
    idx = st.index
    Y, w, G = sol.y, sol.w, sol.gradients()
    hy = sol.h * (sol.domain.radius if sol.domain.mapped else 1.0)
    n0, n1 = idx.shape
    worst = None
    for a in range(0, reach + 1):
        for b in range(-reach, reach + 1):
            if (a == 0 and b <= 0) or a * a + b * b <= 1:
                continue
            lo0, hi0, lo1, hi1 = a, n0 - a, abs(b), n1 - abs(b)
            c = idx[lo0:hi0, lo1:hi1]
            m = idx[lo0 - a:hi0 - a, lo1 - b:hi1 - b]
            p = idx[lo0 + a:hi0 + a, lo1 + b:hi1 + b]
            ok = (c >= 0) & (m >= 0) & (p >= 0)
            c, m, p = c[ok], m[ok], p[ok]
            ell2 = np.sum((Y[p] - Y[m]) ** 2, -1)
            far = ell2 > 4 * hy * hy
            c, m, p, ell2 = c[far], m[far], p[far], ell2[far]
            if c.size == 0:
                continue
            delta = 0.5 * (w[p] + w[m]) - w[c] - 0.5 * np.sum(G[c] * (Y[p] + Y[m] - 2 * Y[c]), -1)
            ratio = delta / ell2
            k = int(np.argmin(ratio))
            if ratio[k] <= rel_curv and (worst is None or ratio[k] < worst[0]):
                worst = (float(ratio[k]), tuple(Y[m[k]]), tuple(Y[p[k]]), float(delta[k]))
    return None if worst is None else worst[1:]


def strict_convexity_probe(solutions, rel_curv: float = 1e-4,
                           n_boundary: int = 32, t_multiples=(1, 2, 4, 8)) -> ConvexityVerdict:
    """(i) flat-segment detector: no supporting line of the sampled graph may
    touch it at two nodes more than 2h apart (see ``_flat_segments``);
    (ii) inward difference quotients (v(yh + t e) - phi(yh)) / t at boundary
    points of round boundary arcs, with t = k h. For a sequence of solutions
    (coarse to fine) the smallest quotient must decrease under refinement.
    """
    if not isinstance(solutions, (list, tuple)):
        solutions = [solutions]
    verdict = ConvexityVerdict(passed=True)
    for sol in solutions:
        if isinstance(sol, ConvexGridFn):
            h = sol.grid.h
            w = _flat_segments(sol, rel_curv)
        else:
            h = sol.h * (sol.domain.radius if sol.domain.mapped else 1.0)
            w = _flat_segments_lattice(sol, rel_curv)
        if w is not None:
            verdict.passed = False
            verdict.flat_witness = w
            verdict.notes = "supporting plane touches at distant nodes"
            return verdict
        if isinstance(sol, ConvexGridFn) or not sol.domain.mapped:
            continue
        R = sol.domain.radius
        if sol.domain.kind == "disk":
            th = 2 * np.pi * (np.arange(n_boundary) + 0.5) / n_boundary
        else:
            th = np.pi * ((np.arange(n_boundary) + 0.5) / n_boundary - 0.5) * 0.9
        yh = R * np.stack([np.cos(th), np.sin(th)], -1)
        phi = sol.problem.boundary(yh)
        qs = []
        for k in t_multiples:
            t = k * h
            q = (sol(yh * (1 - t / R)) - phi) / t
            qs.append(float(np.nanmin(q)))
        verdict.boundary_quotients.append(qs)
        if np.any(np.diff(qs) < -1e-9 * max(1.0, abs(qs[0]))):
            verdict.passed = False
            verdict.notes = "inward quotients are not monotone in t"
    if len(verdict.boundary_quotients) > 1:
        first = [q[0] for q in verdict.boundary_quotients]
        verdict.quotient_decreasing = bool(np.all(np.diff(first) < 0))
        if not verdict.quotient_decreasing:
            verdict.passed = False
            verdict.notes = "inward quotients do not decrease under refinement"
    return verdict


def refined_conjugate(vf: ConvexGridFn, x_grid: GridSpec):
    """u(x) = max_y (x.y - v(y)) on ``x_grid``, refined by maximizing a local
    third-order Taylor model of v about the discrete maximizer (5x5 stencil,
    fourth-order first and second differences). Returns (u, y*), y* = Du(x)."""
    vals, arg = _conjugate_on_product(vf.grid.axes(), vf.values, x_grid.axes())
    X = np.stack(x_grid.mesh(), -1)
    V = np.where(vf.mask, vf.values, np.nan)
    h = vf.grid.h
    ya = vf.grid.axes()
    i, j = arg[..., 0], arg[..., 1]
    n0, n1 = vf.grid.shape
    ok = (i > 1) & (i < n0 - 2) & (j > 1) & (j < n1 - 2)
    ic, jc = np.clip(i, 2, n0 - 3), np.clip(j, 2, n1 - 3)
    at = lambda a, b: V[ic + a, jc + b]
    c = at(0, 0)
    d1 = lambda f: (8 * (f(1) - f(-1)) - (f(2) - f(-2))) / (12 * h)
    d2 = lambda f: (-f(2) + 16 * f(1) - 30 * f(0) + 16 * f(-1) - f(-2)) / (12 * h * h)
    g1, g2 = d1(lambda k: at(k, 0)), d1(lambda k: at(0, k))
    h11, h22 = d2(lambda k: at(k, 0)), d2(lambda k: at(0, k))
    h12 = d1(lambda k: d1(lambda m: at(k, m)))
    t111 = (at(2, 0) - 2 * at(1, 0) + 2 * at(-1, 0) - at(-2, 0)) / (2 * h**3)
    t222 = (at(0, 2) - 2 * at(0, 1) + 2 * at(0, -1) - at(0, -2)) / (2 * h**3)
    t112 = (at(1, 1) - 2 * at(0, 1) + at(-1, 1) - at(1, -1) + 2 * at(0, -1) - at(-1, -1)) / (2 * h**3)
    t122 = (at(1, 1) - 2 * at(1, 0) + at(1, -1) - at(-1, 1) + 2 * at(-1, 0) - at(-1, -1)) / (2 * h**3)
    y0 = np.stack([ya[0][ic], ya[1][jc]], -1)
    r1, r2 = X[..., 0] - g1, X[..., 1] - g2
    e1 = e2 = np.zeros_like(c)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        for _ in range(4):
            # stationarity of x.d - model(d): x - g - H d - T[d, d] / 2 = 0
            f1 = r1 - h11 * e1 - h12 * e2 - 0.5 * (t111 * e1 * e1 + 2 * t112 * e1 * e2 + t122 * e2 * e2)
            f2 = r2 - h12 * e1 - h22 * e2 - 0.5 * (t112 * e1 * e1 + 2 * t122 * e1 * e2 + t222 * e2 * e2)
            a11 = h11 + t111 * e1 + t112 * e2
            a12 = h12 + t112 * e1 + t122 * e2
            a22 = h22 + t122 * e1 + t222 * e2
            det = a11 * a22 - a12**2
            e1 = e1 + (a22 * f1 - a12 * f2) / det
            e2 = e2 + (a11 * f2 - a12 * f1) / det
        model = (c + g1 * e1 + g2 * e2 + 0.5 * (h11 * e1 * e1 + 2 * h12 * e1 * e2 + h22 * e2 * e2)
                 + (t111 * e1**3 + 3 * t112 * e1 * e1 * e2 + 3 * t122 * e1 * e2 * e2 + t222 * e2**3) / 6)
        quad = X[..., 0] * (y0[..., 0] + e1) + X[..., 1] * (y0[..., 1] + e2) - model
        ok &= np.isfinite(quad) & (det > 0) & (a11 > 0)
        ok &= (np.abs(e1) <= 1.5 * h) & (np.abs(e2) <= 1.5 * h)
    u = np.where(ok, np.maximum(vals, quad), vals)
    ystar = np.where(ok[..., None], y0 + np.stack([e1, e2], -1),
                     np.stack([ya[0][i], ya[1][j]], -1))
    return u, ystar


def _d1(u, h, axis):
    s = lambda k: np.roll(u, -k, axis)
    return (8 * (s(1) - s(-1)) - (s(2) - s(-2))) / (12 * h)


def _curvature4(u, h):
    """(Du, K) with fourth-order central differences; the two outer rings are NaN."""
    g1, g2 = _d1(u, h, 0), _d1(u, h, 1)
    s = lambda a, k: np.roll(u, -k, a)
    h11 = (-s(0, 2) + 16 * s(0, 1) - 30 * u + 16 * s(0, -1) - s(0, -2)) / (12 * h * h)
    h22 = (-s(1, 2) + 16 * s(1, 1) - 30 * u + 16 * s(1, -1) - s(1, -2)) / (12 * h * h)
    h12 = _d1(g1, h, 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        K = (h11 * h22 - h12**2) / (1 - g1**2 - g2**2) ** 2
    bad = np.zeros(u.shape, bool)
    bad[:4, :] = bad[-4:, :] = bad[:, :4] = bad[:, -4:] = True
    Du = np.stack([g1, g2], -1)
    Du[bad] = np.nan
    return Du, np.where(bad, np.nan, K)


@dataclass
class GaussMapReport:
    x_radius: float
    max_grad: float
    outside_fraction: float
    max_K_error: float
    strictly_spacelike: bool
    gauss_image_inside: bool
    K_within_tol: bool

    @property
    def passed(self) -> bool:
        return self.strictly_spacelike and self.gauss_image_inside and self.K_within_tol


def entire_graph_from_solution(solution, eta: Optional[Callable] = None,
                               x_radius: Optional[float] = None, hx: float = 0.1,
                               hy: Optional[float] = None, K_tol: float = 5e-3,
                               contains: Optional[Callable] = None, probe: bool = True):
    """u = v^* on a square x-grid of half-width x_radius, with checks that
    u is strictly spacelike, Du lands in the domain and K(x) = eta(Du(x)).

    ``solution`` is an MASolution or a ConvexGridFn (then ``eta`` and
    ``contains`` default to 1 and the unit disk).
    """
    if isinstance(solution, ConvexGridFn):
        vf = solution
        eta = eta or (lambda Y: np.ones(np.shape(Y)[:-1]))
        contains = contains or (lambda Y: np.sum(Y * Y, -1) < 1)
    else:
        if probe:
            verdict = strict_convexity_probe(solution)
            if verdict.flat_witness is not None:
                raise NotStrictlyConvex(f"flat segment {verdict.flat_witness}")
        eta = eta or solution.problem.eta.eta
        contains = contains or (lambda Y: solution.domain.contains(Y, strict=True))
        if hy is None:
            vf = solution.v
        else:
            lo, hi = solution._bbox()
            g = GridSpec.box(lo, hi, hy)
            Yg = np.stack(g.mesh(), -1)
            mask = solution.domain.contains(Yg, strict=True)
            vals = np.where(mask, solution(Yg), np.nan)
            mask &= np.isfinite(vals)
            vf = ConvexGridFn(grid=g, values=vals, mask=mask)
    if x_radius is None:
        # the local Taylor model resolves v where |Dv| is well inside the sampled range
        x_radius = min(5.0, 0.25 * gradient_range_radius(vf))
    xg = GridSpec.box([-x_radius] * 2, [x_radius] * 2, hx)
    u, ystar = refined_conjugate(vf, xg)
    patch = GraphPatch(grid=xg, u_values=u)
    Du, K = _curvature4(u, hx)
    inner = np.isfinite(K)
    gn = np.linalg.norm(Du, axis=-1)[inner]
    inside = contains(ystar[inner])
    Kerr = np.abs(K - eta(ystar))[inner]
    rep = GaussMapReport(x_radius=float(x_radius), max_grad=float(gn.max()),
                         outside_fraction=float(1 - inside.mean()),
                         max_K_error=float(np.nanmax(Kerr)),
                         strictly_spacelike=bool(gn.max() < 1),
                         gauss_image_inside=bool(inside.all()),
                         K_within_tol=bool(np.nanmax(Kerr) <= K_tol))
    return patch, rep
