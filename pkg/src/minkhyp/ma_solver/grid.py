"""Cut-cell finite differences on a (possibly mapped) lattice.

Unknowns live on lattice nodes xi strictly inside the reference domain; the
physical point is y = Phi(xi). Second differences along the directions
(1,0), (0,1), (1,1), (1,-1) use the Shortley-Weller three-point formula with the
boundary crossing located exactly, so Dirichlet data is taken at the true
boundary. The y-Hessian is recovered from

    J^T D^2_y v J = D^2_xi w - sum_k p_k D^2 Phi_k,    p = J^{-T} D_xi w,

and the equation det D^2_y v = R becomes det M = det(J)^2 R.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from ..errors import GridTooCoarse, InvalidParams
from .problem import DomainSpec

DIRECTIONS = ((1, 0), (0, 1), (1, 1), (1, -1))
MIN_NODES_ACROSS = 64


def _locate_crossing(domain: DomainSpec, X, d, L, iters: int = 60):
    """Distance t in (0, L] from X along unit d to the boundary (X inside, X + L d outside)."""
    lo = np.zeros(X.shape[0])
    hi = np.full(X.shape[0], L)
    for _ in range(iters):
        m = 0.5 * (lo + hi)
        ins = domain.xi_inside(X + m[:, None] * d)
        lo = np.where(ins, m, lo)
        hi = np.where(ins, hi, m)
    return 0.5 * (lo + hi)


@dataclass
class Stencils:
    """Sparse operators w -> A w + B phi_b on interior nodes."""

    domain: DomainSpec
    h: float
    shape: tuple
    index: np.ndarray  # lattice -> unknown number (-1 outside)
    xi: np.ndarray
    yb_xi: np.ndarray  # boundary crossing points (reference coordinates)
    ops: dict = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.xi.shape[0]

    @property
    def yb(self) -> np.ndarray:
        return self.domain.to_y(self.yb_xi)

    @property
    def y(self) -> np.ndarray:
        return self.domain.to_y(self.xi)


def build_stencils(domain: DomainSpec, h: float, check_resolution: bool = True) -> Stencils:
    lo, hi = domain.xi_bbox()
    across = float(np.max(hi - lo)) / h
    if check_resolution and across < MIN_NODES_ACROSS - 1e-9:
        raise GridTooCoarse(f"{across:.0f} nodes across the domain, need >= {MIN_NODES_ACROSS}")
    shape = tuple(int(np.floor((b - a) / h + 1e-9)) + 1 for a, b in zip(lo, hi))
    if domain.mapped:
        # lattice containing the origin
        lo = -h * np.ceil(-lo / h - 1e-9)
        shape = tuple(int(np.floor((b - a) / h + 1e-9)) + 1 for a, b in zip(lo, hi))
    ii, jj = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing="ij")
    XI = np.stack([lo[0] + h * ii, lo[1] + h * jj], -1)
    inside = domain.xi_inside(XI)
    index = -np.ones(shape, dtype=int)
    index[inside] = np.arange(inside.sum())
    nodes = np.argwhere(inside)
    xi = XI[inside]
    N = xi.shape[0]

    b_points = []
    nb = 0
    ops = {}
    for d in DIRECTIONS:
        dv = np.asarray(d, float)
        L = h * np.linalg.norm(dv)
        du = dv / np.linalg.norm(dv)
        nbr_idx, dist, bidx = [], [], []
        for sgn in (1, -1):
            q = nodes + sgn * np.asarray(d)
            valid = (q[:, 0] >= 0) & (q[:, 0] < shape[0]) & (q[:, 1] >= 0) & (q[:, 1] < shape[1])
            k = np.full(N, -1)
            k[valid] = index[q[valid, 0], q[valid, 1]]
            t = np.full(N, L)
            cut = k < 0
            bi = np.full(N, -1)
            if cut.any():
                tc = _locate_crossing(domain, xi[cut], sgn * du, L)
                t[cut] = tc
                bi[cut] = nb + np.arange(cut.sum())
                b_points.append(xi[cut] + sgn * tc[:, None] * du)
                nb += int(cut.sum())
            nbr_idx.append(k)
            dist.append(t)
            bidx.append(bi)
        ops[d] = (nbr_idx, dist, bidx)
    yb_xi = np.vstack(b_points) if b_points else np.zeros((0, 2))

    def assemble(coef_self, coef_f, coef_b, nbr, bidx):
        rows = np.arange(N)
        A_r, A_c, A_v = [rows], [rows], [coef_self]
        B_r, B_c, B_v = [], [], []
        for cf, k, bi in zip((coef_f, coef_b), nbr, bidx):
            inn = k >= 0
            A_r.append(rows[inn]); A_c.append(k[inn]); A_v.append(cf[inn])
            B_r.append(rows[~inn]); B_c.append(bi[~inn]); B_v.append(cf[~inn])
        A = sp.csr_matrix((np.concatenate(A_v), (np.concatenate(A_r), np.concatenate(A_c))), shape=(N, N))
        B = sp.csr_matrix((np.concatenate(B_v), (np.concatenate(B_r), np.concatenate(B_c))), shape=(N, nb))
        return A, B

    second, first = {}, {}
    for d, (nbr, dist, bidx) in ops.items():
        a, b = dist
        # u'' ~ 2/(a+b) [(u_f - u0)/a - (u0 - u_b)/b]
        second[d] = assemble(-2.0 / (a * b), 2.0 / (a * (a + b)), 2.0 / (b * (a + b)), nbr, bidx)
        if d in ((1, 0), (0, 1)):
            # u' ~ [b^2 u_f - a^2 u_b - (b^2 - a^2) u0] / (a b (a + b))
            den = a * b * (a + b)
            first[d] = assemble(-(b * b - a * a) / den, b * b / den, -a * a / den, nbr, bidx)
    D11 = second[(1, 0)]
    D22 = second[(0, 1)]
    D12 = tuple(0.5 * (P - Q) for P, Q in zip(second[(1, 1)], second[(1, -1)]))
    out = {"D11": D11, "D22": D22, "D12": D12, "G1": first[(1, 0)], "G2": first[(0, 1)],
           "Dpp": second[(1, 1)], "Dpm": second[(1, -1)]}
    return Stencils(domain=domain, h=h, shape=shape, index=index, xi=xi, yb_xi=yb_xi, ops=out)


@dataclass
class OperatorValue:
    det: np.ndarray  # det D^2_y v at nodes (unclamped)
    det_clamped: np.ndarray  # monotone (clamped) value
    nonconvex: bool
    nonconvex_nodes: np.ndarray


class DiscreteMA:
    """Discrete form of det D^2 v = R(y, Dv) on one domain for one eps.

    ``rhs`` maps (y, p) to (R, dR/dp); the dual problem uses
    R = psi(y) (1 - eps |y|^2)^{-2}.
    """

    def __init__(self, st: Stencils, phi_b: np.ndarray, rhs: Callable):
        self.st = st
        self.phi_b = np.asarray(phi_b, dtype=float)
        self.rhs = rhs
        dom = st.domain
        self.y = st.y
        self.J = dom.jacobian(st.xi)
        self.detJ = np.linalg.det(self.J)
        self.JinvT = np.linalg.inv(np.swapaxes(self.J, -1, -2))
        self.D2F = dom.map_hessians(st.xi)  # (N, k, i, j)
        self.mapped = dom.mapped
        o = st.ops
        self._A = {k: o[k][0] for k in ("D11", "D22", "D12", "G1", "G2")}
        self._c = {k: o[k][1] @ self.phi_b for k in ("D11", "D22", "D12", "G1", "G2")}
        # C[ij, l] = sum_k D2F[k, i, j] JinvT[k, l]: dM_ij = D_ij - sum_l C_ijl G_l
        self._C = np.einsum("nkij,nkl->nijl", self.D2F, self.JinvT)

    @property
    def N(self) -> int:
        return self.st.n_nodes

    def parts(self, w):
        A, c = self._A, self._c
        g = np.stack([A["G1"] @ w + c["G1"], A["G2"] @ w + c["G2"]], -1)
        p = np.einsum("nkl,nl->nk", self.JinvT, g)
        M11 = A["D11"] @ w + c["D11"]
        M22 = A["D22"] @ w + c["D22"]
        M12 = A["D12"] @ w + c["D12"]
        if self.mapped:
            M11 = M11 - np.einsum("nk,nk->n", p, self.D2F[:, :, 0, 0])
            M22 = M22 - np.einsum("nk,nk->n", p, self.D2F[:, :, 1, 1])
            M12 = M12 - np.einsum("nk,nk->n", p, self.D2F[:, :, 0, 1])
        return M11, M22, M12, p

    def residual(self, w):
        """Relative residual det M / (det(J)^2 R) - 1 and intermediates."""
        M11, M22, M12, p = self.parts(w)
        R, dR = self.rhs(self.y, p)
        scale = self.detJ**2 * R
        return (M11 * M22 - M12**2) / scale - 1.0, (M11, M22, M12, p, R, dR, scale)

    def backward_residual(self, w=None, cache=None):
        """(det M - R') / (|M11 M22| + M12^2): the equation error relative to the
        size of the terms that cancel in det M. Near the mapped boundary det M is
        many orders below its terms, so this is the attainable accuracy measure."""
        if cache is None:
            cache = self.residual(w)[1]
        M11, M22, M12, _, _, _, scale = cache
        return (M11 * M22 - M12**2 - scale) / (np.abs(M11 * M22) + M12**2)

    def relative_min_eig(self, w) -> np.ndarray:
        """lambda_min(M) / max(1, |lambda_max(M)|) per node.

        M = J^T D^2 v J is congruent to the y-Hessian, so it has the same
        inertia without the 1/det J amplification near the mapped boundary.
        """
        M11, M22, M12, _ = self.parts(w)
        tr, det = M11 + M22, M11 * M22 - M12**2
        disc = np.sqrt(np.maximum(0.25 * tr * tr - det, 0.0))
        lam_max = 0.5 * tr + disc
        lam_min = np.where(lam_max > 0, det / np.where(lam_max > 0, lam_max, 1.0), 0.5 * tr - disc)
        return lam_min / np.maximum(1.0, np.abs(lam_max))

    def jacobian(self, w, cache):
        M11, M22, M12, p, R, dR, scale = cache
        A = self._A
        G = (A["G1"], A["G2"])
        dM = {}
        for key, (i, j) in (("D11", (0, 0)), ("D22", (1, 1)), ("D12", (0, 1))):
            op = A[key]
            if self.mapped:
                op = op - sp.diags(self._C[:, i, j, 0]) @ G[0] - sp.diags(self._C[:, i, j, 1]) @ G[1]
            dM[key] = op
        Jac = (sp.diags(M22 / scale) @ dM["D11"] + sp.diags(M11 / scale) @ dM["D22"]
               - sp.diags(2 * M12 / scale) @ dM["D12"])
        if dR is not None:
            det = M11 * M22 - M12**2
            # dp_k/dw = sum_l JinvT[k, l] G_l
            coef = -det / (scale * R)
            for k in range(2):
                dpk = sp.diags(self.JinvT[:, k, 0]) @ G[0] + sp.diags(self.JinvT[:, k, 1]) @ G[1]
                Jac = Jac + sp.diags(coef * dR[:, k]) @ dpk
        return Jac.tocsc()

    def hessian_y(self, w):
        """D^2_y v at the nodes, shape (N, 2, 2)."""
        M11, M22, M12, _ = self.parts(w)
        M = np.stack([np.stack([M11, M12], -1), np.stack([M12, M22], -1)], -2)
        Jinv = np.swapaxes(self.JinvT, -1, -2)
        return self.JinvT @ M @ Jinv

    def gradient_y(self, w):
        return self.parts(w)[3]

    def apply(self, w) -> OperatorValue:
        """det D^2 v with the monotone clamp max(a,0) max(b,0) - c^2 (>= 0) and a
        non-convexity flag from the directional second differences."""
        M11, M22, M12, _ = self.parts(w)
        det = (M11 * M22 - M12**2) / self.detJ**2
        A, st = self._A, self.st
        dpp = st.ops["Dpp"][0] @ w + st.ops["Dpp"][1] @ self.phi_b
        dpm = st.ops["Dpm"][0] @ w + st.ops["Dpm"][1] @ self.phi_b
        tol = 1e-10 * max(1.0, float(np.max(np.abs(M11))))
        bad = (M11 < -tol) | (M22 < -tol)
        if not self.mapped:
            bad |= (dpp < -tol) | (dpm < -tol)
        clamped = np.maximum(np.maximum(M11, 0) * np.maximum(M22, 0) - M12**2, 0) / self.detJ**2
        clamped = np.where(bad, 0.0, clamped)
        return OperatorValue(det=det, det_clamped=clamped, nonconvex=bool(bad.any()),
                             nonconvex_nodes=np.flatnonzero(bad))


def dual_rhs(psi: Callable, eps: float):
    def rhs(y, p):
        r2 = np.sum(y * y, axis=-1)
        return psi(y) / (1.0 - eps * r2) ** 2, None
    return rhs
