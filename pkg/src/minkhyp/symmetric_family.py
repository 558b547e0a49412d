"""Rotationally symmetric K = 1 hypersurfaces generated by the profile ODE

    f'' = f^{n-1} (1 - f'^2)^{(n+2)/2},

with first integral c = (1 - f'^2)^{-n/2} - f^n <= 1. The graph of
u_c(x) = sqrt(f_c(x_1)^2 + |x'|^2) is an entire spacelike graph with K = 1.

The ODE is integrated in the variables (f, theta) with f' = tanh(theta), so
that 1 - f'^2 = sech^2(theta) stays accurate when f' is close to 1:

    f' = tanh(theta),   theta' = f^{n-1} / cosh(theta)^n,

and the first integral reads cosh(theta)^n - f^n.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly
from scipy.optimize import brentq

from .core_geometry import JetPoint, shape_at
from .errors import (DomainError, InvalidParams, LeftDomain, OutOfRange,
                     TolUnachievable)

# underflow guard for the c = 1 profile as t -> -infinity
_F_FLOOR = 1e-250


@dataclass(frozen=True)
class ProfileParams:
    c: float
    n: int = 2
    normalization: Optional[str] = None

    def __post_init__(self):
        c = float(self.c)
        if not np.isfinite(c):
            raise InvalidParams("c must be finite")
        if c > 1.0:
            raise InvalidParams(f"c = {c} > 1: the profile changes sign and the graph is not entire")
        if int(self.n) != self.n or self.n < 2:
            raise InvalidParams("n must be an integer >= 2")
        norm = self.normalization
        expected = "unit-at-zero-increasing" if c == 1.0 else "even-at-zero"
        if norm is None:
            norm = expected
        if norm != expected:
            raise InvalidParams(f"normalization {norm!r} is incompatible with c = {c}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "normalization", norm)

    def initial_data(self) -> tuple[float, float]:
        """(f(0), f'(0))."""
        if self.c < 1.0:
            return (1.0 - self.c) ** (1.0 / self.n), 0.0
        return 1.0, math.sqrt(1.0 - 2.0 ** (-2.0 / self.n))


def first_integral(f, fp, n: int):
    """(1 - fp^2)^{-n/2} - f^n."""
    f = np.asarray(f, dtype=float)
    fp = np.asarray(fp, dtype=float)
    if np.any(np.abs(fp) >= 1.0):
        raise DomainError("|f'| >= 1")
    out = (1.0 - fp * fp) ** (-n / 2.0) - f**n
    return float(out) if out.ndim == 0 else out


def _rhs(n):
    def rhs(t, y):
        f, th = y
        return [math.tanh(th), f ** (n - 1) / math.cosh(th) ** n]
    return rhs


def _theta_dd(f, th, n):
    ch = np.cosh(th)
    thp = f ** (n - 1) / ch**n
    return (n - 1) * f ** (n - 2) * np.tanh(th) / ch**n - n * thp * np.tanh(th) * thp


@dataclass(frozen=True)
class Profile:
    """Sampled profile f_c on [t_lo, t_hi].

    ``samples`` has columns (t, f, fp, fpp). Between samples f and theta are
    interpolated by quintic Hermite polynomials; f'' is always recomputed from
    the ODE. For c = 1 and n = 2 the left tail below ``t_tail`` (where f
    underflows) follows the linearized decay f ~ f(t_tail) exp(t - t_tail).
    """

    params: ProfileParams
    samples: np.ndarray
    theta: np.ndarray
    c_drift: float
    c_drift_rel: float
    t_range: tuple
    t_tail: Optional[float] = None
    _f_interp: object = field(default=None, repr=False, compare=False)
    _th_interp: object = field(default=None, repr=False, compare=False)

    @property
    def c(self) -> float:
        return self.params.c

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def t(self) -> np.ndarray:
        return self.samples[:, 0]

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.t_range
        span = max(1.0, hi - lo)
        if np.any(t < lo - 1e-12 * span) or np.any(t > hi + 1e-12 * span):
            raise OutOfRange(f"t outside profile range [{lo}, {hi}]")
        return np.clip(t, lo, hi)

    def state(self, t):
        """(f, theta) at t."""
        t = self._check(t)
        if self.t_tail is None:
            return self._f_interp(t), self._th_interp(t)
        tt = np.maximum(t, self.t_tail)
        f = np.asarray(self._f_interp(tt), dtype=float)
        th = np.asarray(self._th_interp(tt), dtype=float)
        below = t < self.t_tail
        if np.any(below):
            # f' = f (1 + O(f^2)) for n = 2, c = 1
            k = th[below] / f[below]
            decay = np.exp(k * (t[below] - self.t_tail))
            f = f.copy()
            th = th.copy()
            f[below] = f[below] * decay
            th[below] = th[below] * decay
        return f, th

    def eval(self, t):
        """(f, f', f'') at t, with f'' taken from the ODE."""
        f, th = self.state(t)
        n = self.n
        fp = np.tanh(th)
        fpp = f ** (n - 1) / np.cosh(th) ** (n + 2)
        return f, fp, fpp

    def one_minus_fp2(self, t):
        _, th = self.state(t)
        return 1.0 / np.cosh(th) ** 2

    def to_csv(self, path) -> None:
        n = self.n
        th = self.theta
        resid = np.cosh(th) ** n - self.samples[:, 1] ** n - self.c
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "f", "fp", "fpp", "c_residual"])
            for row, r in zip(self.samples, resid):
                w.writerow([repr(float(v)) for v in row] + [repr(float(r))])


def _sample_grid(t_end, spacing):
    """Points on [0, t_end] uniform in asinh(t) with the given spacing."""
    s_end = math.asinh(abs(t_end))
    m = max(2, int(math.ceil(s_end / spacing)) + 1)
    return math.copysign(1.0, t_end) * np.sinh(np.linspace(0.0, s_end, m))


def _integrate_side(params, direction, t_max, rtol, spacing):
    """Integrate from 0 towards direction * t_max; returns (ts, f, theta).

    Steps are capped at a fixed fraction of (1 + |t|) by restarting the
    integrator on segments, which keeps the dense output as accurate as the
    step points themselves.
    """
    n = params.n
    f0, fp0 = params.initial_data()
    y = np.array([f0, math.atanh(fp0)])
    ts = _sample_grid(direction * t_max, spacing)
    if params.c == 1.0 and direction < 0:
        return _integrate_c1_left(n, f0, ts, t_max, rtol)
    out = [y[:, None]]
    edges = np.sinh(np.arange(0.0, math.asinh(t_max) + 0.5, 0.5))
    edges[-1] = t_max
    edges = np.unique(np.clip(edges, 0.0, t_max))
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (np.abs(ts) > a) & (np.abs(ts) <= b)
        sol = solve_ivp(_rhs(n), (direction * a, direction * b), y, method="DOP853",
                        rtol=rtol, atol=1e-280, t_eval=ts[sel],
                        first_step=min(1e-3, b - a), max_step=0.05 * (1.0 + a),
                        dense_output=True)
        if sol.status < 0:
            raise TolUnachievable(f"integration failed: {sol.message}")
        if sel.any():
            out.append(sol.y.reshape(2, -1))
        y = sol.sol(direction * b)
    Y = np.concatenate(out, axis=1)
    return ts[: Y.shape[1]], Y[0], Y[1], None


def _c1_ratios(s, n):
    """For x = f^n = exp(n s): (expm1((2/n) log1p(x)) / x, -expm1(-(2/n) log1p(x)) / x),
    both -> 2/n as x -> 0, so nothing underflows with f."""
    s = np.asarray(s, dtype=float)
    x = np.exp(n * s)
    small = x < 1e-12
    xs = np.where(small, 1.0, x)
    lp = (2.0 / n) * np.log1p(xs)
    a = np.where(small, 2.0 / n, np.expm1(lp) / xs)
    b = np.where(small, 2.0 / n, -np.expm1(-lp) / xs)
    return a, b


def _c1_theta(s, n):
    """theta on the level set cosh^n(theta) - f^n = 1, from s = log f."""
    a, _ = _c1_ratios(s, n)
    return np.arcsinh(np.sqrt(a) * np.exp(0.5 * n * np.asarray(s, dtype=float)))


def _integrate_c1_left(n, f0, ts, t_max, rtol):
    """Left half of the c = 1 profile.

    The second-order system is unstable towards t -> -infinity (the growing
    mode takes over near t = -18 for n = 2), so the decaying branch is
    followed on the invariant level set instead:

        (log f)' = tanh(theta) / f,   cosh^n(theta) = 1 + f^n.
    """
    def rhs(t, s):  # tanh(theta) / f
        _, b = _c1_ratios(s, n)
        return np.sqrt(b * np.exp((n - 2) * s))

    def floor(t, s):
        return s[0] - math.log(_F_FLOOR)
    floor.terminal = True
    sol = solve_ivp(rhs, (0.0, -t_max), [math.log(f0)], method="DOP853", rtol=rtol,
                    atol=1e-14, t_eval=np.clip(ts, -t_max, 0.0), events=[floor])
    if sol.status < 0:
        raise TolUnachievable(f"integration failed: {sol.message}")
    s = sol.y[0]
    hit = float(sol.t_events[0][0]) if sol.status == 1 else None
    k = s.size
    return ts[:k], np.exp(s), _c1_theta(s, n), hit


def integrate_profile(params: ProfileParams, t_max: float = 10.0, tol: float = 1e-9,
                      spacing: float = 0.01) -> Profile:
    """Integrate the profile ODE over [-t_max, t_max] from the normalized data.

    The drift of the first integral is measured at every sample, both in
    absolute terms (``c_drift``) and relative to max(1, f^n) (``c_drift_rel``,
    which accounts for the unavoidable cancellation in cosh^n - f^n once f is
    large). Tolerances are tightened until ``c_drift_rel < tol``.
    """
    if not isinstance(params, ProfileParams):
        raise InvalidParams("params must be a ProfileParams")
    if not t_max > 0 or not tol > 0:
        raise InvalidParams("t_max and tol must be positive")
    n = params.n
    rtol = 1e-13
    for _ in range(3):
        sides = []
        t_tail = None
        for direction in (-1.0, 1.0):
            ts, fs, ths, hit = _integrate_side(params, direction, t_max, rtol, spacing)
            if direction < 0 and hit is not None:
                t_tail = float(ts[-1])
            sides.append((ts, np.vstack([fs, ths])))
        (tl, yl), (tr, yr) = sides
        t = np.concatenate([tl[::-1], tr[1:]])
        f = np.concatenate([yl[0][::-1], yr[0][1:]])
        th = np.concatenate([yl[1][::-1], yr[1][1:]])
        fn = f**n
        drift = np.abs(np.cosh(th) ** n - fn - params.c)
        c_drift = float(drift.max())
        c_drift_rel = float(np.max(drift / np.maximum(1.0, fn)))
        if c_drift_rel < tol:
            break
        rtol = max(rtol / 10.0, 2.5e-14)
    else:
        raise TolUnachievable(f"first-integral drift {c_drift_rel:.3g} exceeds tol {tol:g}")
    if np.any(f <= 0):
        raise TolUnachievable("profile lost positivity")
    fp = np.tanh(th)
    fpp = f ** (n - 1) / np.cosh(th) ** (n + 2)
    thp = f ** (n - 1) / np.cosh(th) ** n
    f_interp = BPoly.from_derivatives(t, np.column_stack([f, fp, fpp]))
    th_interp = BPoly.from_derivatives(t, np.column_stack([th, thp, _theta_dd(f, th, n)]))
    samples = np.column_stack([t, f, fp, fpp])
    samples.setflags(write=False)
    return Profile(params=params, samples=samples, theta=th, c_drift=c_drift,
                   c_drift_rel=c_drift_rel, t_range=(-float(t_max), float(t_max)),
                   t_tail=t_tail, _f_interp=f_interp, _th_interp=th_interp)


def profile_curvatures(p: Profile, t) -> tuple:
    """(kappa_1, kappa_2, K) at t: kappa_1 = f''/(1-f'^2)^{3/2}, kappa_2 = 1/(f sqrt(1-f'^2))."""
    f, th = p.state(t)
    ch = np.cosh(th)
    fpp = f ** (p.n - 1) / ch ** (p.n + 2)
    k1 = fpp * ch**3
    k2 = ch / f
    return k1, k2, k1 * k2 ** (p.n - 1)


def embed(p: Profile, x) -> JetPoint:
    """2-jet of u_c(x) = sqrt(f(x_1)^2 + |x'|^2)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != p.n:
        raise InvalidParams(f"x must have {p.n} components")
    f, fp, fpp = (float(v) for v in p.eval(x[0]))
    xb = x[1:]
    u = math.sqrt(f * f + float(xb @ xb))
    Du = np.concatenate([[f * fp / u], xb / u])
    n = p.n
    H = np.empty((n, n))
    H[0, 0] = (f * fpp + fp * fp) / u - (f * fp) ** 2 / u**3
    H[0, 1:] = H[1:, 0] = -f * fp * xb / u**3
    H[1:, 1:] = (np.eye(n - 1) - np.outer(xb, xb) / u**2) / u
    return JetPoint(u=u, Du=Du, D2u=H)


def embed_values(p: Profile, X) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized u and Du at points X of shape (..., n)."""
    X = np.asarray(X, dtype=float)
    f, fp, _ = p.eval(X[..., 0])
    r2 = np.sum(X[..., 1:] ** 2, axis=-1)
    u = np.sqrt(f * f + r2)
    safe = np.where(u > 0, u, 1.0)
    ratio = np.where(u > 0, f / safe, 1.0)
    Du = np.concatenate([(ratio * fp)[..., None], X[..., 1:] / safe[..., None]], axis=-1)
    return u, Du


def tau_c(c: float, n: int = 2, profile: Optional[Profile] = None) -> float:
    """Shift in the two-sided hyperboloid comparison f_c vs sqrt(1+t^2)."""
    if c > 1:
        raise InvalidParams("c must be <= 1")
    if c == 0:
        raise InvalidParams("tau is undefined for c = 0")
    if c < 0:
        return math.sqrt((1.0 - c) ** (2.0 / n) - 1.0)
    if c == 1:
        return math.sqrt(2.0 ** (2.0 / n) - 1.0)
    if profile is None:
        profile = integrate_profile(ProfileParams(c, n), t_max=10.0)
    g = lambda t: float(profile.eval(t)[0]) - 1.0
    hi = 1.0
    while g(hi) < 0:
        hi *= 2.0
        if hi > profile.t_range[1]:
            raise OutOfRange("profile range too short to bracket tau")
    return brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class AsymptoticReport:
    c: float
    n: int
    lambda_c: float
    tau_c: Optional[float]
    F_limit_plus: float
    F_limit_minus: Optional[float]
    extrapolation_error: float
    direct_estimate: float = 0.0

    def to_json(self) -> dict:
        return {"c": self.c, "n": self.n, "lambda": self.lambda_c, "tau": self.tau_c,
                "F_plus": self.F_limit_plus, "F_minus": self.F_limit_minus,
                "err": self.extrapolation_error}


T_LADDER = (125.0, 250.0, 500.0, 1000.0)


def _extrapolate(T, vals):
    """Polynomial extrapolation in 1/T to 1/T = 0 plus an error estimate.

    Uses all points (degree len-1) and compares with the fit that drops the
    coarsest point.
    """
    h = 1.0 / np.asarray(T)
    v = np.asarray(vals)
    full = np.polyfit(h, v, len(h) - 1)[-1]
    sub = np.polyfit(h[1:], v[1:], len(h) - 2)[-1]
    return float(full), float(abs(full - sub))


def lambda_c(c: float, n: int = 2, tol: float = 1e-5, T=T_LADDER,
             profile: Optional[Profile] = None) -> AsymptoticReport:
    """lambda_c = lim (sqrt(1+t^2) - f_c(t)) = lim (t f_c' - f_c) as t -> +infinity.

    Both limits are extrapolated from the ladder T in 1/T; the spread between
    them (plus each extrapolation's own error estimate) is the reported error.
    """
    params = ProfileParams(c, n)
    T = np.asarray(sorted(T), dtype=float)
    if c == 0:
        return AsymptoticReport(c=0.0, n=n, lambda_c=0.0, tau_c=None, F_limit_plus=0.0,
                                F_limit_minus=None, extrapolation_error=0.0)
    p = profile if profile is not None else integrate_profile(params, t_max=float(T[-1]), tol=1e-9)
    f, th = p.state(T)
    # f0 - f and t f' - f, written to avoid cancellation
    direct = (np.sqrt(1.0 + T * T) - T) + (T - f)
    one_minus_tanh = 2.0 / (np.exp(2.0 * th) + 1.0)
    F = (T - f) - T * one_minus_tanh
    lam_d, err_d = _extrapolate(T, direct)
    lam_F, err_F = _extrapolate(T, F)
    err = abs(lam_d - lam_F) + err_d + err_F
    F_minus = None
    if c == 1.0:
        fm, thm = p.state(-T)
        Fm = -T * np.tanh(thm) - fm
        F_minus, e_m = _extrapolate(T, Fm)
        err = max(err, abs(F_minus) + e_m) if abs(F_minus) > tol else err
    if not np.isfinite(err) or abs(lam_d - lam_F) > tol:
        raise TolUnachievable(f"lambda estimators disagree: {lam_d} vs {lam_F}")
    tau = tau_c(c, n, p) if c != 0 else None
    return AsymptoticReport(c=float(c), n=n, lambda_c=lam_F, tau_c=tau, F_limit_plus=lam_F,
                            F_limit_minus=F_minus, extrapolation_error=err, direct_estimate=lam_d)


@dataclass
class ComparisonReport:
    passed: bool
    worst_margin_a: float
    t0: Optional[float] = None
    worst_margin_b: Optional[float] = None
    details: dict = field(default_factory=dict)


def comparison_check(p1: Profile, p2: Profile, grid) -> ComparisonReport:
    """Check |f'| < |g'| wherever f < g (C_f < C_g), and the gap monotonicity
    f - g >= f(t0) - g(t0) > 0 around a crossing f'(t0) = g'(t0)."""
    if not p1.c < p2.c:
        raise InvalidParams("comparison needs C_{p1} < C_{p2}")
    t = np.asarray(grid, dtype=float)
    f, fp, _ = p1.eval(t)
    g, gp, _ = p2.eval(t)
    mask = f < g
    margin_a = np.abs(gp[mask]) - np.abs(fp[mask])
    worst_a = float(margin_a.min()) if margin_a.size else math.inf
    passed = worst_a > 0
    rep = ComparisonReport(passed=passed, worst_margin_a=worst_a)
    d = fp - gp
    idx = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) <= 0)[0]
    if idx.size:
        i = int(idx[0])
        def dd(s):
            return float(p1.eval(s)[1] - p2.eval(s)[1])
        t0 = t[i] if d[i] == 0 else brentq(dd, t[i], t[i + 1], xtol=1e-14)
        gap0 = float(p1.eval(t0)[0] - p2.eval(t0)[0])
        # f - g >= gap0 holds with equality at t0, so it is checked up to roundoff;
        # the strict part of (b) is gap0 > 0, which is the reported margin
        slack = float(np.min((f - g) - gap0))
        monotone = slack >= -1e-10 * max(1.0, abs(gap0))
        rep.t0 = float(t0)
        rep.worst_margin_b = gap0 if monotone else slack
        rep.details["gap_slack"] = slack
        rep.passed = passed and gap0 > 0 and monotone
    return rep


def hyperboloid_bounds_check(p: Profile, grid, tau: Optional[float] = None) -> float:
    """Worst margin of the two-sided bounds between f_c and sqrt(1+t^2) on t > 0.

    c < 0 or c = 1:  sqrt(1+t^2) < f_c(t) < sqrt(1+(t+tau)^2)
    0 < c < 1:       f_c(t) < sqrt(1+t^2) < f_c(t+tau)
    """
    c = p.c
    if tau is None:
        tau = tau_c(c, p.n, p)
    t = np.asarray(grid, dtype=float)
    t = t[t > 0]
    f0 = np.sqrt(1 + t * t)
    f = p.eval(t)[0]
    if c < 0 or c == 1:
        m = np.minimum(f - f0, np.sqrt(1 + (t + tau) ** 2) - f)
    elif 0 < c < 1:
        t_ok = t[t + tau <= p.t_range[1]]
        m = np.minimum((f0 - f)[: t_ok.size], p.eval(t_ok + tau)[0] - f0[: t_ok.size])
    else:
        raise InvalidParams("bounds are stated for c != 0")
    return float(np.min(m))


def metric_lower_bound_check(p: Profile, xi, x) -> tuple[float, float]:
    """(g xi.xi, (1 - f'(x_1)^2) xi_1^2) for the induced metric of u_c."""
    xi = np.asarray(xi, dtype=float)
    jet = embed(p, x)
    g = np.eye(p.n) - np.outer(jet.Du, jet.Du)
    lhs = float(xi @ g @ xi)
    rhs = float(p.one_minus_fp2(np.asarray(x, dtype=float)[0]) * xi[0] ** 2)
    return lhs, rhs


@dataclass
class GeodesicReport:
    path: np.ndarray
    s: np.ndarray
    radii: np.ndarray
    arc_at_radius: np.ndarray


def _metric(p, x):
    _, Du = embed_values(p, x)
    return np.eye(p.n) - np.outer(Du, Du)


def geodesic_ray(p: Profile, start, direction, s_max: float, radii=None,
                 h_g: float = 1e-5) -> GeodesicReport:
    """Integrate the geodesic equation of the induced metric by arc length.

    Christoffel symbols are formed from central differences of g with step
    h_g. Returns the path and the arc length at which |x| first reaches each
    radius in ``radii``.
    """
    start = np.asarray(start, dtype=float)
    v0 = np.asarray(direction, dtype=float)
    if not np.linalg.norm(v0) > 0:
        raise InvalidParams("direction must be nonzero")
    n = p.n
    lo, hi = p.t_range
    if not lo <= start[0] <= hi:
        raise OutOfRange("start outside profile range")
    g0 = _metric(p, start)
    v0 = v0 / math.sqrt(v0 @ g0 @ v0)

    def christoffel(x):
        dg = np.empty((n, n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h_g
            dg[k] = (_metric(p, x + e) - _metric(p, x - e)) / (2 * h_g)
        gi = np.linalg.inv(_metric(p, x))
        # Gamma^i_{jk} = 1/2 g^{il} (d_j g_{lk} + d_k g_{lj} - d_l g_{jk})
        T = dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg
        return 0.5 * np.einsum("il,ljk->ijk", gi, T)

    def rhs(s, y):
        x, v = y[:n], y[n:]
        if not lo < x[0] < hi:
            return np.zeros(2 * n)
        G = christoffel(x)
        return np.concatenate([v, -np.einsum("ijk,j,k->i", G, v, v)])

    def leave(s, y):
        return min(y[0] - lo, hi - y[0])
    leave.terminal = True

    radii = np.asarray([] if radii is None else radii, dtype=float)
    events = [leave]
    for R in radii:
        def ev(s, y, R=R):
            return np.linalg.norm(y[:n]) - R
        ev.direction = 1
        events.append(ev)
    sol = solve_ivp(rhs, (0.0, s_max), np.concatenate([start, v0]), method="DOP853",
                    rtol=1e-10, atol=1e-12, events=events, dense_output=False)
    if sol.t_events[0].size:
        raise LeftDomain(f"geodesic left the sampled range at s = {sol.t_events[0][0]:.6g}")
    arc = np.array([te[0] if te.size else np.nan for te in sol.t_events[1:]])
    return GeodesicReport(path=sol.y[:n].T, s=sol.t, radii=radii, arc_at_radius=arc)


@dataclass
class GradientImage:
    hull_vertices: np.ndarray
    hausdorff: float
    min_y1: float
    target: str


def gradient_image(p: Profile, t_max: float, n_dirs: int = 256, n_rings: int = 40) -> GradientImage:
    """Sample Du_c over the coordinate ball of radius t_max and compare the
    hull of the samples with B_1 (c < 1) or B_1^+ (c = 1)."""
    from .convex_analysis import hausdorff_to_ball, hull_vertices

    if p.n != 2:
        raise InvalidParams("gradient_image samples the plane (n = 2)")
    t_max = min(float(t_max), p.t_range[1])
    th = np.linspace(0, 2 * np.pi, n_dirs, endpoint=False)
    radii = t_max * np.linspace(0, 1, n_rings + 1)[1:] ** 0.5
    X = (radii[:, None, None] * np.stack([np.cos(th), np.sin(th)], -1)[None]).reshape(-1, 2)
    X = np.vstack([[0.0, 0.0], X])
    _, Du = embed_values(p, X)
    V = hull_vertices(Du)
    half = p.c == 1.0
    d = hausdorff_to_ball(V, half=half)
    return GradientImage(hull_vertices=V, hausdorff=d, min_y1=float(Du[:, 0].min()),
                         target="B1+" if half else "B1")


def report_json(rep: AsymptoticReport, path) -> None:
    Path(path).write_text(json.dumps(rep.to_json(), indent=2))
