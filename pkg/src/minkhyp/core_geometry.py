"""Extrinsic geometry of spacelike graphs x_{n+1} = u(x) in Minkowski space R^{n,1}.

Pointwise quantities come from a 2-jet (u, Du, D^2u); grid quantities from a
:class:`GraphPatch`, whose derivatives are either supplied analytically or taken
by second-order central differences (one-sided at the edges).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParams, NotSpacelike

TOL_SPACELIKE_POINT = 1e-9
TOL_SPACELIKE_GRID = 1e-6


@dataclass(frozen=True)
class LorentzPoint:
    x: np.ndarray
    t: float

    def norm2(self) -> float:
        """Lorentzian square |x|^2 - t^2."""
        return float(np.dot(self.x, self.x) - self.t**2)


@dataclass(frozen=True)
class JetPoint:
    u: float
    Du: np.ndarray
    D2u: np.ndarray

    def __post_init__(self):
        Du = np.asarray(self.Du, dtype=float).reshape(-1)
        D2u = np.asarray(self.D2u, dtype=float)
        n = Du.size
        if D2u.shape != (n, n):
            raise InvalidParams(f"Hessian shape {D2u.shape} does not match gradient size {n}")
        scale = max(1.0, float(np.max(np.abs(D2u))))
        if np.max(np.abs(D2u - D2u.T)) > 1e-12 * scale:
            raise InvalidParams("Hessian is not symmetric")
        object.__setattr__(self, "Du", Du)
        object.__setattr__(self, "D2u", 0.5 * (D2u + D2u.T))
        object.__setattr__(self, "u", float(self.u))

    @property
    def n(self) -> int:
        return self.Du.size


@dataclass(frozen=True)
class ShapeData:
    g: np.ndarray
    g_inv: np.ndarray
    h: np.ndarray
    nu: np.ndarray
    K: float
    H: float
    grad_norm: float
    K_from_eigen: float

    @property
    def principal_curvatures(self) -> np.ndarray:
        return np.sort(np.linalg.eigvals(self.g_inv @ self.h).real)


def shape_at(jet: JetPoint, tol: float = TOL_SPACELIKE_POINT) -> ShapeData:
    """Metric, second fundamental form, normal and curvatures at a jet.

    K is computed from det D^2u / (1-|Du|^2)^{(n+2)/2}; ``K_from_eigen`` is the
    independent value det(g^{-1} h).
    """
    p = jet.Du
    n = jet.n
    p2 = float(p @ p)
    if p2 >= (1.0 - tol) ** 2:
        raise NotSpacelike(f"|Du| = {np.sqrt(p2):.12g} >= 1 - {tol:g}")
    w = 1.0 - p2
    sw = np.sqrt(w)
    eye = np.eye(n)
    pp = np.outer(p, p)
    g = eye - pp
    g_inv = eye + pp / w
    h = jet.D2u / sw
    nu = np.append(p, 1.0) / sw
    K = float(np.linalg.det(jet.D2u) / w ** ((n + 2) / 2))
    K_eig = float(np.linalg.det(g_inv @ h))
    # H = (1/n) div(Du / sqrt(1-|Du|^2)) = (1/n) tr(g^{-1} h)
    H = float(np.trace(g_inv @ h) / n)
    return ShapeData(g=g, g_inv=g_inv, h=h, nu=nu, K=K, H=H,
                     grad_norm=float(np.sqrt(p2) / sw), K_from_eigen=K_eig)


@dataclass(frozen=True)
class GridSpec:
    origin: tuple
    h: float
    shape: tuple

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidParams("grid spacing must be positive")
        if len(self.origin) != len(self.shape):
            raise InvalidParams("origin and shape dimension mismatch")
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def axes(self):
        return [o + self.h * np.arange(s) for o, s in zip(self.origin, self.shape)]

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    @classmethod
    def box(cls, lo, hi, h):
        """Grid covering [lo, hi] per axis with spacing h (hi rounded to the lattice)."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        shape = tuple(int(round((b - a) / h)) + 1 for a, b in zip(lo, hi))
        return cls(origin=tuple(lo), h=float(h), shape=shape)

    def to_json(self) -> dict:
        return {"origin": list(self.origin), "h": self.h, "shape": list(self.shape)}


@dataclass(frozen=True)
class GraphPatch:
    """A graph u sampled on a rectangular lattice.

    With ``derivative_source='analytic'`` the callbacks ``grad_fn``/``hess_fn``
    take coordinate arrays ``X`` of shape (..., n) and return (..., n) and
    (..., n, n) arrays.
    """

    grid: GridSpec
    u_values: np.ndarray
    derivative_source: str = "central-differences"
    grad_fn: Optional[Callable] = field(default=None, repr=False, compare=False)
    hess_fn: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        u = np.array(self.u_values, dtype=float)
        if u.shape != self.grid.shape:
            raise InvalidParams(f"u_values shape {u.shape} != grid shape {self.grid.shape}")
        if self.grid.ndim not in (2, 3):
            raise InvalidParams("grid operations support n = 2 and n = 3 only")
        if self.derivative_source not in ("central-differences", "analytic"):
            raise InvalidParams(f"unknown derivative source {self.derivative_source!r}")
        if self.derivative_source == "analytic" and self.grad_fn is None:
            raise InvalidParams("analytic patches need grad_fn")
        u.setflags(write=False)
        object.__setattr__(self, "u_values", u)

    @classmethod
    def from_function(cls, grid: GridSpec, fn, grad_fn=None, hess_fn=None):
        X = np.stack(grid.mesh(), axis=-1)
        src = "analytic" if grad_fn is not None else "central-differences"
        return cls(grid=grid, u_values=fn(X), derivative_source=src,
                   grad_fn=grad_fn, hess_fn=hess_fn)

    @property
    def n(self) -> int:
        return self.grid.ndim

    def points(self) -> np.ndarray:
        return np.stack(self.grid.mesh(), axis=-1)

    def gradient(self) -> np.ndarray:
        """Du on every node, shape grid.shape + (n,)."""
        if self.derivative_source == "analytic":
            return np.asarray(self.grad_fn(self.points()), dtype=float)
        return np.stack(np.gradient(self.u_values, self.grid.h, edge_order=2), axis=-1)

    def hessian(self) -> np.ndarray:
        if self.derivative_source == "analytic" and self.hess_fn is not None:
            return np.asarray(self.hess_fn(self.points()), dtype=float)
        Du = self.gradient()
        rows = [np.stack(np.gradient(Du[..., i], self.grid.h, edge_order=2), axis=-1)
                for i in range(self.n)]
        H = np.stack(rows, axis=-2)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    def interior_mask(self) -> np.ndarray:
        m = np.zeros(self.grid.shape, dtype=bool)
        m[(slice(1, -1),) * self.n] = True
        return m

    def to_csv(self, path) -> None:
        """Write ``x1,...,xn,u`` rows (row-major) plus a JSON grid sidecar."""
        path = Path(path)
        X = self.points().reshape(-1, self.n)
        data = np.column_stack([X, self.u_values.reshape(-1)])
        header = ",".join([f"x{i + 1}" for i in range(self.n)] + ["u"])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")
        path.with_suffix(".grid.json").write_text(json.dumps(self.grid.to_json()))

    @classmethod
    def from_csv(cls, path) -> "GraphPatch":
        path = Path(path)
        spec = json.loads(path.with_suffix(".grid.json").read_text())
        grid = GridSpec(origin=tuple(spec["origin"]), h=spec["h"], shape=tuple(spec["shape"]))
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(grid=grid, u_values=data[:, -1].reshape(grid.shape))


def mean_curvature_field(patch: GraphPatch, tol: float = TOL_SPACELIKE_POINT) -> np.ndarray:
    """H = div(Du / sqrt(1 - |Du|^2)) / n on the grid (second order)."""
    Du = patch.gradient()
    p2 = np.sum(Du**2, axis=-1)
    interior = patch.interior_mask()
    if np.any(p2[interior] >= (1.0 - tol) ** 2):
        bad = np.argwhere(interior & (p2 >= (1.0 - tol) ** 2))[0]
        raise NotSpacelike(f"|Du| >= 1 at interior node {tuple(bad)}")
    W = Du / np.sqrt(np.clip(1.0 - p2, np.finfo(float).tiny, None))[..., None]
    h = patch.grid.h
    div = sum(np.gradient(W[..., i], h, axis=i, edge_order=2) for i in range(patch.n))
    return div / patch.n


@dataclass(frozen=True)
class SpacelikeClass:
    kind: str
    max_grad: float


def classify_spacelike(patch: GraphPatch, tol: float = TOL_SPACELIKE_GRID) -> SpacelikeClass:
    max_grad = float(np.max(np.linalg.norm(patch.gradient(), axis=-1)))
    if max_grad <= 1.0 - tol:
        kind = "strictly-spacelike"
    elif max_grad <= 1.0 + tol:
        kind = "weakly-spacelike"
    else:
        kind = "not-spacelike"
    return SpacelikeClass(kind=kind, max_grad=max_grad)


def gauss_curvature_field(patch: GraphPatch) -> np.ndarray:
    """K = det D^2u / (1-|Du|^2)^{(n+2)/2} on every node (NaN where not spacelike)."""
    Du = patch.gradient()
    w = 1.0 - np.sum(Du**2, axis=-1)
    det = np.linalg.det(patch.hessian())
    with np.errstate(invalid="ignore", divide="ignore"):
        K = det / w ** ((patch.n + 2) / 2)
    return np.where(w > 0, K, np.nan)
