"""Convex-analysis toolkit: discrete Legendre transforms, support functions,
convex hulls, blowdowns at infinity, tangent cones and the null condition."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.spatial import ConvexHull, Delaunay

from .core_geometry import GridSpec
from .errors import (DegenerateCone, EmptySet, InvalidParams, NonMonotone,
                     NotConvex, NoWitness)


# ---------------------------------------------------------------- domains

@dataclass(frozen=True)
class Region:
    """Convex planar region: disk, half-disk {y_1 >= 0}, polygon or rectangle."""

    kind: str
    radius: float = 1.0
    center: tuple = (0.0, 0.0)
    vertices: Optional[tuple] = None
    lo: Optional[tuple] = None
    hi: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("disk", "half-disk", "polygon", "rectangle"):
            raise InvalidParams(f"unknown region kind {self.kind!r}")
        if self.kind == "polygon":
            V = np.asarray(self.vertices, dtype=float)
            if V.ndim != 2 or V.shape[0] < 3:
                raise InvalidParams("polygon needs at least 3 vertices")
            hv = hull_vertices(V)
            if hv.shape[0] != V.shape[0]:
                raise InvalidParams("polygon vertices must be in convex position")
            object.__setattr__(self, "vertices", tuple(map(tuple, hv)))

    def contains(self, Y, strict: bool = False) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        c = np.asarray(self.center)
        if self.kind in ("disk", "half-disk"):
            r2 = np.sum((Y - c) ** 2, axis=-1)
            inside = r2 < self.radius**2 if strict else r2 <= self.radius**2
            if self.kind == "half-disk":
                y1 = Y[..., 0] - c[0]
                inside &= (y1 > 0) if strict else (y1 >= 0)
            return inside
        if self.kind == "rectangle":
            lo, hi = np.asarray(self.lo), np.asarray(self.hi)
            if strict:
                return np.all((Y > lo) & (Y < hi), axis=-1)
            return np.all((Y >= lo) & (Y <= hi), axis=-1)
        V = np.asarray(self.vertices)
        E = np.roll(V, -1, axis=0) - V
        cross = E[:, 0] * (Y[..., None, 1] - V[:, 1]) - E[:, 1] * (Y[..., None, 0] - V[:, 0])
        return np.all(cross > 0, axis=-1) if strict else np.all(cross >= 0, axis=-1)

    def bbox(self):
        c = np.asarray(self.center)
        if self.kind == "disk":
            return c - self.radius, c + self.radius
        if self.kind == "half-disk":
            return c + np.array([0.0, -self.radius]), c + self.radius
        if self.kind == "rectangle":
            return np.asarray(self.lo, float), np.asarray(self.hi, float)
        V = np.asarray(self.vertices)
        return V.min(0), V.max(0)

    def to_json(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("disk", "half-disk"):
            d.update(radius=self.radius, center=list(self.center))
        elif self.kind == "polygon":
            d["vertices"] = [list(v) for v in self.vertices]
        else:
            d.update(lo=list(self.lo), hi=list(self.hi))
        return d


# ---------------------------------------------------------------- convex grid functions

def second_difference_certificate(values: np.ndarray, mask: np.ndarray, h: float) -> float:
    """Smallest second-difference quotient along axes and both diagonals over
    node triples lying in ``mask`` (inf if there are none)."""
    worst = math.inf
    v = np.where(mask, values, np.nan)
    for d, scale in (((1, 0), 1.0), ((0, 1), 1.0), ((1, 1), 2.0), ((1, -1), 2.0)):
        a = _shift(v, d)
        b = _shift(v, (-d[0], -d[1]))
        sd = (a + b - 2 * v) / (scale * h * h)
        ok = np.isfinite(sd)
        if ok.any():
            worst = min(worst, float(sd[ok].min()))
    return worst


def _shift(v, d):
    """out[i, j] = v[i + d0, j + d1] (NaN outside)."""
    out = np.full_like(v, np.nan)
    n0, n1 = v.shape
    i0, j0 = d
    src = v[max(i0, 0):n0 + min(i0, 0), max(j0, 0):n1 + min(j0, 0)]
    out[max(-i0, 0):n0 + min(-i0, 0), max(-j0, 0):n1 + min(-j0, 0)] = src
    return out


@dataclass(frozen=True)
class ConvexGridFn:
    """A convex function sampled on the nodes of ``grid`` lying in ``mask``.

    ``evaluator`` may carry exact (u, Du, D2u) callbacks used to polish
    Legendre transforms.
    """

    grid: GridSpec
    values: np.ndarray
    mask: np.ndarray
    region: Optional[Region] = None
    convexity_certificate: float = field(default=math.nan)
    evaluator: Optional[Callable] = field(default=None, repr=False, compare=False)
    gradient: Optional[Callable] = field(default=None, repr=False, compare=False)
    hessian: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if vals.shape != self.grid.shape or mask.shape != self.grid.shape:
            raise InvalidParams("values/mask shape must match the grid")
        vals[~mask] = np.nan
        vals.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "mask", mask)
        if math.isnan(self.convexity_certificate):
            object.__setattr__(self, "convexity_certificate",
                               second_difference_certificate(vals, mask, self.grid.h))

    @classmethod
    def sample(cls, fn, grid: GridSpec, region: Optional[Region] = None, gradient=None,
               hessian=None, mask=None) -> "ConvexGridFn":
        X = np.stack(grid.mesh(), axis=-1)
        if mask is None:
            mask = np.ones(grid.shape, bool) if region is None else region.contains(X)
        vals = np.where(mask, fn(X), np.nan)
        return cls(grid=grid, values=vals, mask=mask, region=region, evaluator=fn,
                   gradient=gradient, hessian=hessian)

    def points(self) -> np.ndarray:
        return np.stack(self.grid.mesh(), axis=-1)

    def nodes(self):
        """(X, u) over the masked nodes."""
        X = self.points()[self.mask]
        return X, self.values[self.mask]

    def discrete_gradients(self) -> np.ndarray:
        """Central-difference gradients at nodes whose 4 neighbours are masked."""
        v = np.where(self.mask, self.values, np.nan)
        h = self.grid.h
        g1 = (_shift(v, (1, 0)) - _shift(v, (-1, 0))) / (2 * h)
        g2 = (_shift(v, (0, 1)) - _shift(v, (0, -1))) / (2 * h)
        G = np.stack([g1, g2], axis=-1)
        ok = np.all(np.isfinite(G), axis=-1)
        return G[ok]

    def interior_mask(self, layers: int = 1) -> np.ndarray:
        m = self.mask.copy()
        for _ in range(layers):
            s = m.copy()
            for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                sh = np.zeros_like(m)
                n0, n1 = m.shape
                i0, j0 = d
                sh[max(-i0, 0):n0 + min(-i0, 0), max(-j0, 0):n1 + min(-j0, 0)] = \
                    m[max(i0, 0):n0 + min(i0, 0), max(j0, 0):n1 + min(j0, 0)]
                s &= sh
            m = s
        return m


def _conjugate_on_product(x_axes, U, y_axes):
    """Exact discrete sup_x (x.y - U(x)) for y on a product grid (U=+inf off-domain).

    Separable: max_{x1} [x1 y1 + max_{x2} (x2 y2 - U(x1, x2))].
    """
    x1, x2 = x_axes
    y1, y2 = y_axes
    Uf = np.where(np.isfinite(U), U, np.inf)
    # inner[i, k] = max_j x2_j y2_k - U[i, j]
    inner = np.empty((x1.size, y2.size))
    arg2 = np.empty((x1.size, y2.size), dtype=int)
    for i in range(x1.size):
        M = np.outer(y2, x2) - Uf[i][None, :]
        arg2[i] = np.argmax(M, axis=1)
        inner[i] = M[np.arange(y2.size), arg2[i]]
    out = np.empty((y1.size, y2.size))
    arg = np.empty((y1.size, y2.size, 2), dtype=int)
    for k in range(y2.size):
        M = np.outer(y1, x1) + inner[:, k][None, :]
        a1 = np.argmax(M, axis=1)
        out[:, k] = M[np.arange(y1.size), a1]
        arg[:, k, 0] = a1
        arg[:, k, 1] = arg2[a1, k]
    return out, arg


def _grid_for_range(lo, hi, h):
    shape = []
    for a, b in zip(lo, hi):
        shape.append(max(1, int(math.floor((b - a) / h + 1e-9)) + 1))
    return GridSpec(origin=tuple(lo), h=h, shape=tuple(shape))


def legendre_transform(f: ConvexGridFn, y_grid: Optional[GridSpec] = None,
                       y_mask=None, newton: bool = True, tol: float = 1e-9) -> ConvexGridFn:
    """Discrete conjugate f*(y) = max over nodes x of (x.y - f(x)).

    The output lives on ``y_grid`` (default: a grid of the same spacing over
    the bounding box of the discrete gradients) and is masked to the convex
    hull of the discrete gradient image. When ``f`` carries exact gradient and
    Hessian callbacks each value is refined by Newton steps on Du(x) = y
    started from the discrete maximizer.
    """
    if f.convexity_certificate < -tol * max(1.0, np.nanmax(np.abs(f.values))):
        raise NotConvex(f"input convexity certificate {f.convexity_certificate:.3g}")
    G = f.discrete_gradients()
    if G.shape[0] == 0:
        # affine or tiny input: use the whole-domain secant slopes
        X, u = f.nodes()
        G = np.array([[0.0, 0.0]]) if X.shape[0] < 2 else _affine_slope(X, u)[None, :]
    if y_grid is None:
        lo, hi = G.min(0), G.max(0)
        ext = float(np.max(hi - lo))
        hy = ext / (max(f.grid.shape) - 1) if ext > 0 else f.grid.h
        y_grid = _grid_for_range(lo, hi, hy)
    Y = np.stack(y_grid.mesh(), axis=-1)
    if y_mask is None:
        y_mask = _inside_hull(G, Y, pad=1e-12 + 1e-9 * f.grid.h)
    vals, arg = _conjugate_on_product(f.grid.axes(), f.values, y_grid.axes())
    if newton and f.gradient is not None and f.hessian is not None:
        xa = f.grid.axes()
        X0 = np.stack([xa[0][arg[..., 0]], xa[1][arg[..., 1]]], axis=-1)
        vals = _newton_polish(f, X0, Y, vals, y_mask)
    vals = np.where(y_mask, vals, np.nan)
    return ConvexGridFn(grid=y_grid, values=vals, mask=y_mask)


def _affine_slope(X, u):
    A = np.column_stack([X, np.ones(len(X))])
    coef = np.linalg.lstsq(A, u, rcond=None)[0]
    return coef[:2]


def _inside_hull(P, Y, pad=0.0):
    P = np.unique(np.round(P, 14), axis=0)
    if P.shape[0] < 3 or np.linalg.matrix_rank(P - P.mean(0), tol=1e-12) < 2:
        # lower-dimensional image: nodes within pad of the points/segment
        d = np.min(np.linalg.norm(Y[..., None, :] - P, axis=-1), axis=-1)
        return d <= max(pad, 1e-12)
    tri = Delaunay(P)
    return tri.find_simplex(Y, tol=pad) >= 0


def _newton_polish(f, X0, Y, vals, mask, iters=8):
    X = X0[mask].copy()
    Yq = Y[mask]
    for _ in range(iters):
        r = f.gradient(X) - Yq
        H = f.hessian(X)
        step = np.linalg.solve(H, r[..., None])[..., 0]
        X = X - step
        if np.max(np.abs(step)) < 1e-14:
            break
    ok = np.all(np.isfinite(X), axis=-1) & np.all(np.abs(f.gradient(X) - Yq) < 1e-10, axis=-1)
    refined = np.einsum("ij,ij->i", X, Yq) - f.evaluator(X)
    out = vals.copy()
    cur = out[mask]
    # keep the better of discrete and refined values (the sup is the larger one)
    cur = np.where(ok, np.maximum(cur, refined), cur)
    out[mask] = cur
    return out


def involution_check(f: ConvexGridFn, layers: int = 2) -> float:
    """max |f** - f| over interior nodes of f."""
    fs = legendre_transform(f, newton=False)
    fss = legendre_transform(fs, y_grid=f.grid, y_mask=f.mask, newton=False)
    m = f.interior_mask(layers)
    if not m.any():
        m = f.mask
    d = np.abs(fss.values - f.values)[m]
    d = d[np.isfinite(d)]
    return float(d.max()) if d.size else 0.0


# ---------------------------------------------------------------- profile conjugates

@dataclass
class ConjugateTrace:
    directions: np.ndarray
    radius: float
    y: np.ndarray
    ustar: np.ndarray


def profile_conjugate(p, boundary_samples: int = 64, radius: Optional[float] = None,
                      shift: float = 0.0) -> ConjugateTrace:
    """Emit (Du_c(x), x.Du_c(x) - u_c(x)) for x on a large circle.

    ``shift`` replaces the profile by f(t + shift) (shift = lambda_1 gives the
    shifted c = 1 profile).
    """
    from .symmetric_family import embed_values

    if p.n != 2:
        raise InvalidParams("profile_conjugate traces the plane (n = 2)")
    R = radius if radius is not None else 0.9 * p.t_range[1] - abs(shift)
    th = 2 * np.pi * (np.arange(boundary_samples) + 0.5) / boundary_samples
    X = R * np.stack([np.cos(th), np.sin(th)], -1)
    Xs = X + np.array([shift, 0.0])
    u, Du = embed_values(p, Xs)
    ustar = np.einsum("ij,ij->i", X, Du) - u
    return ConjugateTrace(directions=th, radius=R, y=Du, ustar=ustar)


class ProfileConjugate:
    """u_c^* on B_1 (or B_1^+ for c = 1) from the profile:

        u^*(y) = t y_1 - f(t) sqrt(1 - |y'|^2),   f'(t) = y_1 / sqrt(1 - |y'|^2),

    with an optional shift f(t) -> f(t + shift). The optimal t is clamped to
    the profile range, which leaves an O(1/t_max) error only in a thin layer
    at the boundary.
    """

    def __init__(self, p, shift: float = 0.0):
        if p.n != 2:
            raise InvalidParams("ProfileConjugate is implemented for n = 2")
        self.p = p
        self.shift = float(shift)
        t = p.samples[:, 0]
        keep = np.concatenate([[True], np.diff(p.theta) > 0])
        # the c = 1 tail reaches theta ~ 1e-250; the inverse spline overflows there
        keep &= (p.theta == 0) | (np.abs(p.theta) >= 1e-60)
        self._t = t[keep]
        self._th = p.theta[keep]

    def _t_of_q(self, q):
        from scipy.interpolate import PchipInterpolator

        th = np.arctanh(np.clip(q, -1 + 1e-16, 1 - 1e-16))
        inv = PchipInterpolator(self._th, self._t, extrapolate=True)
        lo, hi = self.p.t_range
        t = np.clip(inv(np.clip(th, self._th[0], self._th[-1])), lo, hi)
        # Newton polish on theta(t) = atanh(q)
        for _ in range(3):
            f, tht = self.p.state(t)
            thp = f / np.cosh(tht) ** 2
            t = np.clip(t - (tht - th) / thp, lo, hi)
        return t

    def __call__(self, Y):
        Y = np.asarray(Y, dtype=float)
        s = np.sqrt(np.clip(1.0 - Y[..., 1] ** 2, 0.0, None))
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(s > 0, Y[..., 0] / np.where(s > 0, s, 1.0), 0.0)
        t = self._t_of_q(q)
        f = self.p.state(t)[0]
        # t here is the argument of f; the shifted profile uses t - shift
        return (t - self.shift) * Y[..., 0] - f * s


# ---------------------------------------------------------------- blowdown

@dataclass
class BlowdownEntry:
    x: np.ndarray
    radii: np.ndarray
    secants: np.ndarray
    value: float
    raw_value: float
    monotone: bool


def blowdown(u: Callable, x, r_schedule=(10.0, 100.0, 1000.0), tol: float = 1e-9) -> BlowdownEntry:
    """V_u(x) = lim_{r -> inf} u(rx)/r.

    Convexity makes the secant (u(rx) - u(0))/r nondecreasing in r; this is
    asserted along the schedule. The returned value applies one Richardson
    step 2 u(Rx)/R - u(Rx/2)/(R/2) at the largest radius R, which removes the
    O(1/R) offset of the raw quotient.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(sorted(r_schedule), dtype=float)
    u0 = float(u(np.zeros_like(x)))
    ur = np.array([float(u(ri * x)) for ri in r])
    sec = (ur - u0) / r
    scale = tol * (1.0 + np.abs(sec))
    if np.any(np.diff(sec) < -scale[1:]):
        k = int(np.argmin(np.diff(sec)))
        raise NonMonotone(f"secant decreases between r={r[k]} and r={r[k + 1]}")
    R = r[-1]
    raw = ur[-1] / R
    half = float(u(0.5 * R * x)) / (0.5 * R)
    return BlowdownEntry(x=x, radii=r, secants=sec, value=2 * raw - half, raw_value=raw,
                         monotone=True)


class BlowdownFn:
    """Vectorized evaluator V(x) ~ blowdown of u with the Richardson step."""

    def __init__(self, u: Callable, r: float = 1e5):
        self.u = u
        self.r = float(r)
        self.homogeneity_residual = math.nan
        self.lipschitz_residual = math.nan

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        R = self.r
        return 2 * self.u(R * X) / R - self.u(0.5 * R * X) / (0.5 * R)

    def residuals(self, n_samples: int = 200, seed: int = 0, dim: int = 2):
        rng = np.random.default_rng(seed)
        def ball(m):
            Z = rng.normal(size=(m, dim))
            return Z / np.linalg.norm(Z, axis=1, keepdims=True) * rng.uniform(0, 1, (m, 1))
        X, Y = ball(n_samples), ball(n_samples)
        hom = np.abs(self(2 * X) - 2 * self(X)) / (1 + np.linalg.norm(X, axis=1))
        lip = np.abs(self(X) - self(Y)) - np.linalg.norm(X - Y, axis=1)
        self.homogeneity_residual = float(hom.max())
        self.lipschitz_residual = float(max(0.0, lip.max()))
        return self.homogeneity_residual, self.lipschitz_residual


# ---------------------------------------------------------------- support sets and hulls

@dataclass(frozen=True)
class Polytope:
    vertices: np.ndarray
    facets: Optional[np.ndarray]
    nondegenerate: bool
    dim: int


def convex_hull(points) -> Polytope:
    """Hull of a point set in R^2 (monotone chain) or R^3 (Qhull)."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] == 0:
        raise EmptySet("no points")
    n = P.shape[1]
    rank = int(np.linalg.matrix_rank(P - P.mean(0), tol=1e-10)) if P.shape[0] > 1 else 0
    if rank < n:
        # degenerate: keep extreme points along the principal directions
        if rank == 0:
            V = P[:1]
        else:
            _, _, Vt = np.linalg.svd(P - P.mean(0))
            proj = (P - P.mean(0)) @ Vt[:rank].T
            if rank == 1:
                V = P[[int(np.argmin(proj[:, 0])), int(np.argmax(proj[:, 0]))]]
            else:
                V = P[hull_indices_2d(proj)]
        return Polytope(vertices=V, facets=None, nondegenerate=False, dim=rank)
    if n == 2:
        idx = hull_indices_2d(P)
        V = P[idx]
        m = len(idx)
        facets = np.array([[i, (i + 1) % m] for i in range(m)])
        return Polytope(vertices=V, facets=facets, nondegenerate=True, dim=2)
    if n == 3:
        h = ConvexHull(P)
        return Polytope(vertices=P[h.vertices], facets=h.simplices, nondegenerate=True, dim=3)
    raise InvalidParams("hulls are supported for n = 2, 3")


def hull_indices_2d(P) -> np.ndarray:
    """Counter-clockwise hull vertex indices (Andrew's monotone chain)."""
    P = np.asarray(P, dtype=float)
    order = np.lexsort((P[:, 1], P[:, 0]))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for i in order:
        while len(lower) >= 2 and cross(P[lower[-2]], P[lower[-1]], P[i]) <= 0:
            lower.pop()
        lower.append(i)
    for i in order[::-1]:
        while len(upper) >= 2 and cross(P[upper[-2]], P[upper[-1]], P[i]) <= 0:
            upper.pop()
        upper.append(i)
    return np.array(lower[:-1] + upper[:-1], dtype=int)


def hull_vertices(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape[1] == 2:
        return P[hull_indices_2d(P)]
    return convex_hull(P).vertices


@dataclass(frozen=True)
class SupportSet:
    E: np.ndarray

    def __post_init__(self):
        E = np.atleast_2d(np.asarray(self.E, dtype=float))
        if E.size == 0:
            raise EmptySet("E is empty")
        nrm = np.linalg.norm(E, axis=1)
        if np.any(np.abs(nrm - 1.0) > 1e-12):
            raise InvalidParams("members of E must be unit vectors")
        E.setflags(write=False)
        object.__setattr__(self, "E", E)

    @property
    def n(self) -> int:
        return self.E.shape[1]

    @property
    def hull(self) -> Polytope:
        return convex_hull(self.E)

    @property
    def nondegenerate(self) -> bool:
        return self.E.shape[0] >= self.n + 1 and self.hull.nondegenerate

    @classmethod
    def circle(cls, m: int, phase: float = 0.0) -> "SupportSet":
        th = phase + 2 * np.pi * np.arange(m) / m
        return cls(np.stack([np.cos(th), np.sin(th)], -1))

    def __call__(self, X):
        return support_function(self, X)

    def gradient(self, X):
        X = np.asarray(X, dtype=float)
        return self.E[np.argmax(X @ self.E.T, axis=-1)]

    def to_json(self) -> dict:
        return {"E": self.E.tolist()}

    @classmethod
    def from_json(cls, data) -> "SupportSet":
        if isinstance(data, (str, Path)):
            data = json.loads(Path(data).read_text())
        return cls(np.asarray(data["E"], dtype=float))


def support_function(E: SupportSet, x):
    """V_E(x) = max_{alpha in E} alpha.x."""
    if not isinstance(E, SupportSet):
        E = SupportSet(E)
    x = np.asarray(x, dtype=float)
    out = np.max(x @ E.E.T, axis=-1)
    return float(out) if out.ndim == 0 else out


def _directions(n: int, m: int) -> np.ndarray:
    if n == 2:
        th = 2 * np.pi * np.arange(m) / m
        return np.stack([np.cos(th), np.sin(th)], -1)
    k = np.arange(m) + 0.5
    z = 1 - 2 * k / m
    phi = np.pi * (1 + 5**0.5) * k
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], -1)


def ball_support(D, half: bool = False):
    """Support function of B_1 (or B_1^+ = B_1 cap {y_1 >= 0}) in directions D."""
    D = np.asarray(D, dtype=float)
    if not half:
        return np.ones(D.shape[0])
    return np.where(D[:, 0] >= 0, 1.0, np.linalg.norm(D[:, 1:], axis=1))


def hausdorff_support(V, support_b, n_dirs: int = 4096) -> float:
    """Hausdorff distance between conv(V) and a convex body given by its
    support function, as the sup-norm difference of support functions."""
    V = np.asarray(V, dtype=float)
    D = _directions(V.shape[1], n_dirs)
    hA = np.max(D @ V.T, axis=1)
    return float(np.max(np.abs(hA - support_b(D))))


def hausdorff_to_ball(V, half: bool = False, n_dirs: int = 4096) -> float:
    return hausdorff_support(V, lambda D: ball_support(D, half), n_dirs)


def hausdorff_polytopes(VA, VB, n_dirs: int = 4096) -> float:
    VB = np.asarray(VB, dtype=float)
    return hausdorff_support(VA, lambda D: np.max(D @ VB.T, axis=1), n_dirs)


# ---------------------------------------------------------------- tangent cones

@dataclass
class TangentCone:
    vertices: np.ndarray
    extreme_boundary_points: np.ndarray
    radii: tuple
    t60_residual: float = math.nan

    def hausdorff_to(self, other_vertices) -> float:
        return hausdorff_polytopes(self.vertices, other_vertices)

    def hausdorff_to_ball(self, half: bool = False) -> float:
        return hausdorff_to_ball(self.vertices, half=half)


def _numeric_gradient(u, X, h=1e-6):
    X = np.asarray(X, dtype=float)
    G = np.empty_like(X)
    for k in range(X.shape[-1]):
        e = np.zeros(X.shape[-1])
        e[k] = h * max(1.0, 1.0)
        G[..., k] = (u(X + e) - u(X - e)) / (2 * h)
    return G


def tangent_cone(u: Callable, sample_radius: float = 250.0, gradient: Optional[Callable] = None,
                 n_dirs: int = 256, radii=(10.0, 50.0, 250.0), V: Optional[Callable] = None,
                 sphere_tol: float = 0.02) -> TangentCone:
    """Convex hull of gradients of u sampled on concentric rings.

    Hull vertices within ``sphere_tol`` of the unit sphere are reported as the
    extreme boundary points. If a blowdown evaluator V is supplied, the
    identity V(y) = |y| is checked at those points.
    """
    radii = tuple(r for r in radii if r <= sample_radius) or (sample_radius,)
    th = 2 * np.pi * np.arange(n_dirs) / n_dirs
    dirs = np.stack([np.cos(th), np.sin(th)], -1)
    X = np.concatenate([r * dirs for r in radii] + [np.zeros((1, 2))])
    G = gradient(X) if gradient is not None else _numeric_gradient(u, X)
    Vt = hull_vertices(G)
    ext = Vt[np.abs(np.linalg.norm(Vt, axis=1) - 1.0) <= sphere_tol]
    cone = TangentCone(vertices=Vt, extreme_boundary_points=ext, radii=radii)
    if V is not None and ext.size:
        cone.t60_residual = float(np.max(np.abs(V(ext) - np.linalg.norm(ext, axis=1))))
    return cone


def extremal_representation_check(cone: TangentCone, V: Callable, x_samples) -> float:
    """max_x |V(x) - sup_{alpha in extreme points} alpha.x|."""
    X = np.asarray(x_samples, dtype=float)
    A = cone.extreme_boundary_points
    if A.size == 0:
        raise DegenerateCone("cone has no extreme points on the unit sphere")
    A = A / np.linalg.norm(A, axis=1, keepdims=True)
    rep = np.max(X @ A.T, axis=1)
    return float(np.max(np.abs(V(X) - rep)))


@dataclass
class NullWitness:
    x: np.ndarray
    y: np.ndarray
    gap: float


def null_condition_check(V: Callable, x, search_radius: float = 10.0, tol: float = 1e-6,
                         extreme_points=None, n_dirs: int = 128) -> NullWitness:
    """Find y != x with | |V(x) - V(y)| - |x - y| | < tol.

    Candidate directions: the supplied extreme points, then the numerical
    gradient direction of V at x (and its opposite), then a uniform fan.
    Steps run over a geometric ladder up to ``search_radius``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    cands = []
    if extreme_points is not None:
        cands.extend(np.asarray(extreme_points, dtype=float))
    g = _numeric_gradient(lambda Z: np.asarray(V(Z)), x[None, :], h=1e-6)[0]
    if np.linalg.norm(g) > 0:
        cands.extend([g / np.linalg.norm(g), -g / np.linalg.norm(g)])
    cands.extend(_directions(n, n_dirs))
    D = np.asarray(cands)
    D = D / np.linalg.norm(D, axis=1, keepdims=True)
    steps = search_radius * np.geomspace(1e-3, 1.0, 25)
    Vx = float(V(x[None, :])[0]) if np.ndim(V(x[None, :])) else float(V(x[None, :]))
    best = None
    for d in D:
        Y = x + steps[:, None] * d
        gap = np.abs(np.abs(Vx - V(Y)) - steps)
        k = int(np.argmin(gap))
        if best is None or gap[k] < best.gap:
            best = NullWitness(x=x, y=Y[k], gap=float(gap[k]))
        if gap[k] < tol:
            return best
    raise NoWitness(f"no witness found at x={x.tolist()} (best gap {best.gap:.3g})")
