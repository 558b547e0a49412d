"""Problem description for the dual Monge-Ampere Dirichlet problem

    det D^2 v = psi(y) (1 - eps |y|^2)^{-2}   in Omega (n = 2),   v = phi on dOmega,

with psi = 1/eta, plus the continuation (eps_k) and exhaustion (Omega_k)
schedules."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import InvalidParams


@dataclass(frozen=True)
class DomainSpec:
    """Convex domain in the unit disk.

    Disks and half-disks (flat side on y_1 = 0) are centred at the origin and
    solved on the mapped grid y = radius * F(xi), F(xi) = xi (3 - |xi|^2) / 2,
    which compresses nodes towards the round boundary. Polygons use the
    identity map, and so do disks with ``radial_map=False`` (used for
    functions that stay smooth up to the boundary).
    """

    kind: str
    radius: float = 1.0
    vertices: Optional[tuple] = None
    radial_map: bool = True

    def __post_init__(self):
        if self.kind not in ("disk", "half-disk", "convex-polygon"):
            raise InvalidParams(f"unknown domain kind {self.kind!r}")
        if self.kind == "convex-polygon":
            from ..convex_analysis import hull_vertices

            V = np.asarray(self.vertices, dtype=float)
            if V.ndim != 2 or V.shape[0] < 3 or V.shape[1] != 2:
                raise InvalidParams("convex-polygon needs >= 3 planar vertices")
            hv = hull_vertices(V)
            if hv.shape[0] != V.shape[0]:
                raise InvalidParams("polygon vertices are not in convex position")
            if np.any(np.linalg.norm(hv, axis=1) > 1 + 1e-12):
                raise InvalidParams("polygon must lie in the closed unit disk")
            object.__setattr__(self, "vertices", tuple(map(tuple, hv)))
        elif not 0 < self.radius <= 1:
            raise InvalidParams("radius must lie in (0, 1]")

    @property
    def mapped(self) -> bool:
        return self.radial_map and self.kind in ("disk", "half-disk")

    def scaled(self, radius: float) -> "DomainSpec":
        if self.kind == "convex-polygon":
            V = np.asarray(self.vertices)
            return DomainSpec("convex-polygon", vertices=tuple(map(tuple, V * radius)))
        return DomainSpec(self.kind, radius=float(radius), radial_map=self.radial_map)

    # ---- coordinates
    def xi_inside(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.mapped:
            ok = np.sum(xi * xi, axis=-1) < 1.0
            if self.kind == "half-disk":
                ok &= xi[..., 0] > 0
            return ok
        return self.contains(xi, strict=True)

    def xi_bbox(self):
        if self.kind != "convex-polygon" and not self.mapped:
            R = self.radius
            return np.array([0.0 if self.kind == "half-disk" else -R, -R]), np.array([R, R])
        if self.kind == "disk":
            return np.array([-1.0, -1.0]), np.array([1.0, 1.0])
        if self.kind == "half-disk":
            return np.array([0.0, -1.0]), np.array([1.0, 1.0])
        V = np.asarray(self.vertices)
        return V.min(0), V.max(0)

    def to_y(self, xi):
        xi = np.asarray(xi, dtype=float)
        if not self.mapped:
            return xi.copy()
        q = np.sum(xi * xi, axis=-1)
        return self.radius * xi * ((3.0 - q) / 2.0)[..., None]

    def to_xi(self, y):
        """Inverse of to_y (radial cubic solved by Newton)."""
        y = np.asarray(y, dtype=float)
        if not self.mapped:
            return y.copy()
        r = np.linalg.norm(y, axis=-1) / self.radius
        s = np.clip(r, 0.0, 1.0)
        rho = s.copy()
        for _ in range(60):
            g = rho * (3 - rho * rho) / 2 - s
            dg = 1.5 * (1 - rho * rho)
            step = np.where(dg > 1e-14, g / np.where(dg > 1e-14, dg, 1.0), 0.0)
            rho = np.clip(rho - step, 0.0, 1.0)
        # bisection polish near rho = 1 where the derivative vanishes
        lo, hi = np.zeros_like(s), np.ones_like(s)
        near = s > 0.999
        if np.any(near):
            a, b = lo[near], hi[near]
            t = s[near]
            for _ in range(60):
                m = 0.5 * (a + b)
                big = m * (3 - m * m) / 2 > t
                b = np.where(big, m, b)
                a = np.where(big, a, m)
            rho[near] = 0.5 * (a + b)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(r > 0, rho / np.where(r > 0, r, 1.0), 1.0 / 1.5)
        return y / self.radius * scale[..., None]

    def jacobian(self, xi):
        """Dy/Dxi, shape (..., 2, 2)."""
        xi = np.asarray(xi, dtype=float)
        if not self.mapped:
            return np.broadcast_to(np.eye(2), xi.shape[:-1] + (2, 2)).copy()
        q = np.sum(xi * xi, axis=-1)
        s = (3.0 - q) / 2.0
        J = s[..., None, None] * np.eye(2) - xi[..., :, None] * xi[..., None, :]
        return self.radius * J

    def map_hessians(self, xi):
        """D^2 y_k / Dxi^2, shape (..., k, i, j)."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape[:-1] + (2, 2, 2))
        if not self.mapped:
            return out
        for k in range(2):
            for i in range(2):
                for j in range(2):
                    out[..., k, i, j] = -((k == i) * xi[..., j] + (k == j) * xi[..., i]
                                          + (i == j) * xi[..., k])
        return self.radius * out

    # ---- y-space geometry
    def contains(self, y, strict: bool = False) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.kind == "convex-polygon":
            V = np.asarray(self.vertices)
            E = np.roll(V, -1, axis=0) - V
            cr = E[:, 0] * (y[..., None, 1] - V[:, 1]) - E[:, 1] * (y[..., None, 0] - V[:, 0])
            return np.all(cr > 0, axis=-1) if strict else np.all(cr >= -1e-14, axis=-1)
        r2 = np.sum(y * y, axis=-1)
        ok = r2 < self.radius**2 if strict else r2 <= self.radius**2 * (1 + 1e-14)
        if self.kind == "half-disk":
            ok &= (y[..., 0] > 0) if strict else (y[..., 0] >= 0)
        return ok

    def boundary_points(self, m: int = 256) -> np.ndarray:
        """Roughly uniform samples of the boundary."""
        if self.kind == "disk":
            th = 2 * np.pi * (np.arange(m) + 0.5) / m
            return self.radius * np.stack([np.cos(th), np.sin(th)], -1)
        if self.kind == "half-disk":
            k = int(m * np.pi / (np.pi + 2))
            th = np.pi * ((np.arange(k) + 0.5) / k - 0.5)
            arc = self.radius * np.stack([np.cos(th), np.sin(th)], -1)
            s = self.radius * (2 * (np.arange(m - k) + 0.5) / (m - k) - 1)
            flat = np.stack([np.zeros_like(s), s], -1)
            return np.vstack([arc, flat])
        V = np.asarray(self.vertices)
        L = np.linalg.norm(np.roll(V, -1, 0) - V, axis=1)
        pts = []
        for i, (a, b) in enumerate(zip(V, np.roll(V, -1, 0))):
            k = max(2, int(round(m * L[i] / L.sum())))
            t = (np.arange(k) + 0.5) / k
            pts.append(a + t[:, None] * (b - a))
        return np.vstack(pts)

    def on_flat(self, y, tol: float = 1e-12) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.kind != "half-disk":
            return np.zeros(y.shape[:-1], bool)
        return np.abs(y[..., 0]) <= tol

    def to_json(self) -> dict:
        if self.kind == "convex-polygon":
            return {"kind": self.kind, "vertices": [list(v) for v in self.vertices]}
        out = {"kind": self.kind, "radius": self.radius}
        if not self.radial_map:
            out["radial_map"] = False
        return out

    @classmethod
    def from_json(cls, d) -> "DomainSpec":
        if d["kind"] == "convex-polygon":
            return cls("convex-polygon", vertices=tuple(map(tuple, d["vertices"])))
        return cls(d["kind"], radius=float(d.get("radius", 1.0)),
                   radial_map=bool(d.get("radial_map", True)))


def _fourier_extension(values: np.ndarray):
    """Harmonic extension into the unit disk of data sampled at equispaced angles."""
    m = values.size
    c = np.fft.rfft(values) / m
    if m % 2 == 0:
        c[-1] *= 0.5
    big = np.flatnonzero(np.abs(c) > 1e-17 * np.sum(np.abs(c)))
    c = c[: big[-1] + 1] if big.size else c[:1]

    def ext(y):
        y = np.asarray(y, dtype=float)
        z = y[..., 0] + 1j * y[..., 1]
        z = np.where(np.abs(z) > 1, z / np.maximum(np.abs(z), 1e-300), z)
        acc = np.zeros(z.shape, complex)
        for ck in c[:0:-1]:  # Horner in z for sum_{k>=1} c_k z^k
            acc = (acc + ck) * z
        return c[0].real + 2 * acc.real
    return ext


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet data phi on the boundary, with its Lipschitz constant.

    ``phi`` is a vectorized callable on boundary points. For half-disks,
    ``affine_on_flat = (a0, a1, a2)`` records phi = a0 + a1 y_1 + a2 y_2 on the
    flat side.
    """

    phi: Callable
    lipschitz_constant: float = math.nan
    affine_on_flat: Optional[tuple] = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, y):
        return np.asarray(self.phi(np.asarray(y, dtype=float)), dtype=float)

    def validate(self, domain: DomainSpec, m: int = 512, tol: float = 1e-9) -> float:
        """Check the Lipschitz bound on sampled boundary pairs (and the affine
        condition on the flat side) and return the sampled constant."""
        P = domain.boundary_points(m)
        v = self(P)
        if not np.all(np.isfinite(v)):
            raise InvalidParams("boundary data is not finite on the boundary")
        D = np.linalg.norm(P[:, None] - P[None], axis=-1)
        np.fill_diagonal(D, np.inf)
        L = float(np.max(np.abs(v[:, None] - v[None]) / D))
        if np.isfinite(self.lipschitz_constant) and L > self.lipschitz_constant * (1 + 1e-6) + tol:
            raise InvalidParams(f"sampled Lipschitz constant {L:.4g} exceeds the declared "
                                f"{self.lipschitz_constant:.4g}")
        if domain.kind == "half-disk":
            flat = domain.on_flat(P)
            if self.affine_on_flat is None:
                A = np.column_stack([np.ones(flat.sum()), P[flat]])
                coef, *_ = np.linalg.lstsq(A, v[flat], rcond=None)
                resid = np.max(np.abs(A @ coef - v[flat]))
            else:
                a = np.asarray(self.affine_on_flat)
                resid = np.max(np.abs(a[0] + P[flat] @ a[1:] - v[flat]))
            if resid > 1e-12 * max(1.0, np.max(np.abs(v))):
                raise InvalidParams("boundary data must be affine on the flat side")
        return L

    def extension(self, domain: DomainSpec, modes: int = 4096) -> Callable:
        """Harmonic extension of phi to the closed domain.

        Disk: Fourier series of the boundary samples. Half-disk: subtract the
        affine flat-side data, reflect oddly across y_1 = 0 and extend on the
        full disk. Polygons: phi itself must be defined on the closure.
        """
        R = domain.radius
        if domain.kind == "disk":
            th = 2 * np.pi * np.arange(modes) / modes
            ext = _fourier_extension(self(R * np.stack([np.cos(th), np.sin(th)], -1)))
            return lambda y: ext(np.asarray(y, dtype=float) / R)
        if domain.kind == "half-disk":
            a = self._flat_affine(domain)
            aff = lambda y: a[0] + np.asarray(y)[..., 0] * a[1] + np.asarray(y)[..., 1] * a[2]
            th = 2 * np.pi * np.arange(modes) / modes
            P = R * np.stack([np.cos(th), np.sin(th)], -1)
            Pr = P.copy()
            Pr[:, 0] = np.abs(P[:, 0])
            odd = np.sign(P[:, 0]) * (self(Pr) - aff(Pr))
            ext = _fourier_extension(odd)
            return lambda y: aff(y) + ext(np.asarray(y, dtype=float) / R)
        return self.phi

    def _flat_affine(self, domain):
        if self.affine_on_flat is not None:
            return np.asarray(self.affine_on_flat, dtype=float)
        s = np.linspace(-domain.radius, domain.radius, 33)
        P = np.stack([np.zeros_like(s), s], -1)
        v = self(P)
        coef = np.polyfit(s, v, 1)
        return np.array([coef[1], 0.0, coef[0]])

    @property
    def minimum_hint(self) -> Optional[float]:
        return self.params.get("min")


def constant_data(c: float) -> BoundaryData:
    return BoundaryData(phi=lambda y: np.full(np.shape(y)[:-1], float(c)), lipschitz_constant=0.0,
                        affine_on_flat=(float(c), 0.0, 0.0), kind="constant", params={"value": c})


def lambda_wedge_data(lam: float, half: bool = False) -> BoundaryData:
    """lambda |y_1| on the circle (or lambda y_1 on the half-disk boundary)."""
    if half:
        return BoundaryData(phi=lambda y: lam * np.asarray(y)[..., 0],
                            lipschitz_constant=abs(lam), affine_on_flat=(0.0, 0.0, 0.0),
                            kind="lambda-wedge", params={"lambda": lam, "half": True})
    return BoundaryData(phi=lambda y: lam * np.abs(np.asarray(y)[..., 0]),
                        lipschitz_constant=abs(lam), kind="lambda-wedge",
                        params={"lambda": lam, "half": False})


def lipschitz_samples_data(angles, values, L: Optional[float] = None) -> BoundaryData:
    """Periodic piecewise-linear data on the unit circle from samples (theta_k, phi_k)."""
    th = np.asarray(angles, dtype=float) % (2 * np.pi)
    order = np.argsort(th)
    th, val = th[order], np.asarray(values, dtype=float)[order]
    thx = np.concatenate([th - 2 * np.pi, th, th + 2 * np.pi])
    vx = np.concatenate([val, val, val])

    def phi(y):
        y = np.asarray(y, dtype=float)
        return np.interp(np.arctan2(y[..., 1], y[..., 0]) % (2 * np.pi), thx, vx)
    chord = 2 * np.sin(np.diff(np.concatenate([th, [th[0] + 2 * np.pi]])) / 2)
    slopes = np.abs(np.diff(np.concatenate([val, [val[0]]]))) / np.maximum(chord, 1e-300)
    L_est = float(slopes.max()) * (np.pi / 2)
    return BoundaryData(phi=phi, lipschitz_constant=L if L is not None else L_est,
                        kind="lipschitz-samples",
                        params={"angles": th.tolist(), "values": val.tolist()})


@dataclass(frozen=True)
class CurvatureDensity:
    """eta > 0 on the closed domain; psi = 1/eta."""

    eta: Callable
    bounds: Optional[tuple] = None  # (eta_min, eta_max) if known exactly
    kind: str = "constant"
    params: dict = field(default_factory=dict)

    def psi(self, y):
        return 1.0 / np.asarray(self.eta(np.asarray(y, dtype=float)), dtype=float)

    def psi_bounds(self, domain: DomainSpec, m: int = 200) -> tuple[float, float]:
        """(psi_min, psi_max) over the closed domain (sampled unless exact)."""
        if self.bounds is not None:
            lo, hi = self.bounds
            return 1.0 / hi, 1.0 / lo
        lo, hi = domain.xi_bbox()
        g = np.stack(np.meshgrid(np.linspace(lo[0], hi[0], m), np.linspace(lo[1], hi[1], m),
                                 indexing="ij"), -1).reshape(-1, 2)
        Y = domain.to_y(g[domain.xi_inside(g)])
        Y = np.vstack([Y, domain.boundary_points(4 * m)])
        p = self.psi(Y)
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            raise InvalidParams("eta must be positive and finite")
        return float(p.min()), float(p.max())


def constant_eta(value: float = 1.0) -> CurvatureDensity:
    if not value > 0:
        raise InvalidParams("eta must be positive")
    return CurvatureDensity(eta=lambda y: np.full(np.shape(y)[:-1], float(value)),
                            bounds=(value, value), kind="constant", params={"value": value})


def default_eps_schedule(levels: int = 10) -> tuple:
    return tuple(1.0 - 2.0 ** (-j) for j in range(1, levels + 1))


@dataclass(frozen=True)
class MAProblem:
    domain: DomainSpec
    eta: CurvatureDensity
    boundary: BoundaryData
    grid_h: float = 1.0 / 64
    eps_schedule: tuple = field(default_factory=default_eps_schedule)
    exhaustion: Optional[tuple] = None  # radii (scale factors) of Omega_k, same length as eps_schedule
    final_stage: bool = True  # append the limit stage (eps = 1, Omega)

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_schedule)
        if len(eps) == 0:
            raise InvalidParams("empty eps schedule")
        if any(b <= a for a, b in zip(eps[:-1], eps[1:])):
            raise InvalidParams("eps schedule must be strictly increasing")
        if eps[0] <= 0 or eps[-1] > 1:
            raise InvalidParams("eps values must lie in (0, 1]")
        object.__setattr__(self, "eps_schedule", eps)
        if self.exhaustion is not None:
            ex = tuple(float(r) for r in self.exhaustion)
            if len(ex) != len(eps):
                raise InvalidParams("exhaustion and eps schedules must have equal length")
            if any(b <= a for a, b in zip(ex[:-1], ex[1:])) or ex[0] <= 0 or ex[-1] > 1:
                raise InvalidParams("exhaustion radii must increase within (0, 1]")
            object.__setattr__(self, "exhaustion", ex)
        if not self.grid_h > 0:
            raise InvalidParams("grid_h must be positive")

    def stages(self):
        """[(eps_k, scale_k)] including the optional limit stage."""
        ex = self.exhaustion or (1.0,) * len(self.eps_schedule)
        st = list(zip(self.eps_schedule, ex))
        if self.final_stage and st[-1] != (1.0, 1.0):
            st.append((1.0, 1.0))
        return st


def stage_domain(problem: MAProblem, scale: float) -> DomainSpec:
    d = problem.domain
    if d.kind == "convex-polygon":
        return d.scaled(scale)
    return d.scaled(d.radius * scale)


def default_exhaustion(levels: int = 10) -> tuple:
    return tuple(1.0 - 2.0 ** (-j) for j in range(1, levels + 1))


# ---------------------------------------------------------------- config I/O

def problem_from_config(cfg) -> MAProblem:
    """Build a problem from the JSON config schema

    {domain: {kind, radius | vertices}, eta: {kind: constant|expression|grid, ...},
     boundary: {kind: constant|lipschitz-samples|lambda-wedge, params},
     grid_h, eps_schedule, exhaustion}
    """
    if isinstance(cfg, (str, Path)):
        cfg = json.loads(Path(cfg).read_text())
    try:
        domain = DomainSpec.from_json(cfg["domain"])
        eta = _eta_from_config(cfg.get("eta", {"kind": "constant", "value": 1.0}))
        boundary = _boundary_from_config(cfg["boundary"], domain)
        grid_h = float(cfg.get("grid_h", 1.0 / 64))
        eps = cfg.get("eps_schedule", "default")
        eps = default_eps_schedule() if eps == "default" else tuple(eps)
        ex = cfg.get("exhaustion")
        if ex == "default":
            ex = default_exhaustion(len(eps))
        return MAProblem(domain=domain, eta=eta, boundary=boundary, grid_h=grid_h,
                         eps_schedule=tuple(eps), exhaustion=None if ex is None else tuple(ex),
                         final_stage=bool(cfg.get("final_stage", True)))
    except KeyError as e:
        raise InvalidParams(f"config is missing key {e}") from None


def _eta_from_config(d) -> CurvatureDensity:
    kind = d.get("kind", "constant")
    if kind == "constant":
        return constant_eta(float(d.get("value", 1.0)))
    if kind == "expression":
        expr = d["expr"]
        code = compile(expr, "<eta>", "eval")
        ns = {k: getattr(np, k) for k in ("sqrt", "exp", "cos", "sin", "abs", "pi", "log")}

        def eta(y):
            y = np.asarray(y, dtype=float)
            return np.broadcast_to(eval(code, {"__builtins__": {}}, dict(ns, y1=y[..., 0], y2=y[..., 1])),
                                   y.shape[:-1]).astype(float)
        return CurvatureDensity(eta=eta, kind="expression", params={"expr": expr})
    if kind == "grid":
        from scipy.interpolate import RegularGridInterpolator

        ax1 = np.asarray(d["y1"], float)
        ax2 = np.asarray(d["y2"], float)
        vals = np.asarray(d["values"], float)
        if np.any(vals <= 0):
            raise InvalidParams("eta grid values must be positive")
        it = RegularGridInterpolator((ax1, ax2), vals, bounds_error=False, fill_value=None)
        return CurvatureDensity(eta=lambda y: it(np.asarray(y, float)), kind="grid",
                                params={"shape": list(vals.shape)})
    raise InvalidParams(f"unknown eta kind {kind!r}")


def _boundary_from_config(d, domain) -> BoundaryData:
    kind = d.get("kind")
    p = d.get("params", {})
    if kind == "constant":
        return constant_data(float(p.get("value", 0.0)))
    if kind == "lambda-wedge":
        lam = p.get("lambda")
        if lam is None:
            from ..symmetric_family import lambda_c

            lam = lambda_c(float(p["c"]), 2).lambda_c
        return lambda_wedge_data(float(lam), half=domain.kind == "half-disk")
    if kind == "lipschitz-samples":
        return lipschitz_samples_data(p["angles"], p["values"], p.get("L"))
    raise InvalidParams(f"unknown boundary kind {kind!r}")
