"""Curvature-corrected tHOSVD.

The tangent least-squares error is reweighted along the curvature
eigenframe of each data entry, which gives the leading-order behaviour of
the true geodesic error. Keeping the tHOSVD factors fixed, the optimal core
solves a symmetric positive definite linear system.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import prod
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, cg

from .errors import CurvatureTooLarge, NotPositiveDefinite, ShapeMismatch, ValidationError
from .manifold import ManifoldPoint
from .mvtensor import MvTensor, TangentTensor
from .tucker import (
    TuckerFactors,
    clamp_ranks,
    hosvd_coefficients,
    log_coefficients,
    project_coefficients,
    reconstruct_coefficients,
    tangent_coefficients,
)

DENSE_LIMIT = 4096
CG_TOL = 1e-10
SERIES_CUTOFF = 1e-6
EXACT_FIT_TOL = 1e-12
KAPPA_LIMIT = np.pi**2 - 1e-9


def beta(kappa):
    """Jacobi-field factor: sinh(sqrt(-k))/sqrt(-k), 1, or sin(sqrt(k))/sqrt(k)."""
    k = np.asarray(kappa, dtype=float)
    out = np.empty_like(k)
    small = np.abs(k) < SERIES_CUTOFF
    neg = (k < 0) & ~small
    pos = (k > 0) & ~small
    ks = k[small]
    out[small] = 1.0 - ks / 6.0 + ks**2 / 120.0 - ks**3 / 5040.0
    s = np.sqrt(-k[neg])
    out[neg] = np.sinh(s) / s
    s = np.sqrt(k[pos])
    out[pos] = np.sin(s) / s
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class CurvatureSystem:
    """Per-entry curvature eigenframes of log_p T.

    ``kappas[j]`` are the eigenvalues of entry j and ``frame_coeffs[j]``
    the frame vectors as rows of coordinates in the orthonormal basis of p;
    ``thetas`` gives the same frame in embedded coordinates. The
    coefficients of log_p T in that basis are kept alongside.
    """

    base: ManifoldPoint
    kappas: np.ndarray
    frame_coeffs: np.ndarray
    log_coeffs: np.ndarray

    @cached_property
    def thetas(self):
        p = self.base
        return p.manifold.from_coords(p.coords, self.frame_coeffs)

    @property
    def shape(self):
        return self.kappas.shape[:-1]

    @property
    def kappa_max(self):
        return float(np.max(self.kappas))

    @property
    def kappa_min(self):
        return float(np.min(self.kappas))

    @cached_property
    def beta_sq(self):
        return beta(self.kappas) ** 2

    @property
    def log_theta_coeffs(self):
        """<log_p T_j, theta_jb>, shape dims + (d,)."""
        return np.einsum("...ba,...a->...b", self.frame_coeffs, self.log_coeffs)


def system_from_coefficients(p: ManifoldPoint, logs) -> CurvatureSystem:
    """Curvature system from the orthonormal coordinates of log_p T."""
    kappas, frames = p.manifold.eigenbasis_coeffs(p.coords, logs)
    return CurvatureSystem(p, kappas, frames, logs)


def build_curvature_system(p: ManifoldPoint, T: MvTensor) -> CurvatureSystem:
    if p.descriptor != T.descriptor:
        raise ValidationError(f"base point on {p.descriptor} but tensor on {T.descriptor}")
    logs, kappas, frames = p.manifold.log_frame(p.coords, T.coords)
    return CurvatureSystem(p, kappas, frames, logs)


def _residual_coeffs(Xi: TangentTensor, T: MvTensor, sys: CurvatureSystem):
    if Xi.shape != sys.shape or T.shape != sys.shape:
        raise ShapeMismatch("tangent tensor, data and curvature system shapes differ")
    if not Xi.base.same(sys.base):
        raise ValidationError("tangent tensor is not based at the system's base point")
    return tangent_coefficients(Xi) - log_coefficients(sys.base, T)


def loss_from_residual(resid, sys: CurvatureSystem, kappa_zero=False):
    proj = np.einsum("...ba,...a->...b", sys.frame_coeffs, resid)
    if kappa_zero:
        return float(np.sum(proj**2))
    return float(np.sum(sys.beta_sq * proj**2))


def cc_loss(Xi: TangentTensor, T: MvTensor, sys: CurvatureSystem) -> float:
    """F(Xi; kappa) = sum beta(kappa)^2 <Xi - log_p T, theta>^2."""
    return loss_from_residual(_residual_coeffs(Xi, T, sys), sys)


def _kron_rows(factors):
    """W[j_1..j_n, a_1..a_n] = prod_k U^k[j_k, a_k], flattened to (N, R)."""
    w = np.ones((1, 1))
    for u in factors:
        w = np.einsum("ja,kb->jkab", w, u).reshape(w.shape[0] * u.shape[0], w.shape[1] * u.shape[1])
    return w


def _frame_in(phi, sys: CurvatureSystem):
    if phi is None:
        return sys.frame_coeffs
    p = sys.base
    phi = np.asarray(getattr(phi, "coords", phi) if not isinstance(phi, list) else [v.coords for v in phi])
    return p.manifold.inner(p.coords, sys.thetas[..., :, None, :], phi)


def build_B(U, phi, sys: CurvatureSystem):
    """B[j.., b, a.., alpha] = prod_k U^k[j_k, a_k] * <phi_alpha, theta_jb>.

    ``phi`` is an orthonormal basis at the base point (list of tangent
    vectors or a (d, D) array); None means the default basis.
    """
    dims = sys.shape
    if len(U) != len(dims) or any(u.shape[0] != n for u, n in zip(U, dims)):
        raise ShapeMismatch("factor matrices do not match the data shape")
    ranks = tuple(u.shape[1] for u in U)
    f = _frame_in(phi, sys)
    d = f.shape[-1]
    w = _kron_rows(U)
    b = w[:, None, :, None] * f.reshape(-1, d, 1, d)
    return b.reshape(dims + (d,) + ranks + (d,))


@dataclass(eq=False)
class NormalSystem:
    rhs: np.ndarray
    beta_sq: np.ndarray
    matrix: Optional[np.ndarray] = None
    operator: Optional[Callable] = None

    @property
    def size(self):
        return self.rhs.size

    def apply(self, v):
        v = np.asarray(v, dtype=float).reshape(self.rhs.shape)
        if self.matrix is not None:
            return (self.matrix @ v.ravel()).reshape(self.rhs.shape)
        return self.operator(v)

    def dense(self):
        if self.matrix is not None:
            return self.matrix
        eye = np.eye(self.size)
        return np.stack([self.apply(e).ravel() for e in eye], axis=1)


def build_normal_system(B, sys: CurvatureSystem, logT_coeffs) -> NormalSystem:
    """A = sum beta^2 B (x) B and rhs = sum beta^2 B <log_p T, theta>."""
    nd = prod(sys.shape) * sys.kappas.shape[-1]
    core_shape = B.shape[len(sys.shape) + 1:]
    bm = B.reshape(nd, -1)
    w = sys.beta_sq.reshape(-1)
    y = np.asarray(logT_coeffs, dtype=float).reshape(-1)
    c = np.sqrt(w)[:, None] * bm
    a = c.T @ c
    rhs = bm.T @ (w * y)
    return NormalSystem(rhs.reshape(core_shape), sys.beta_sq, matrix=a)


def build_normal_operator(U, sys: CurvatureSystem) -> NormalSystem:
    """Matrix-free variant of :func:`build_normal_system` for large cores."""
    f = sys.frame_coeffs
    w = sys.beta_sq

    def weighted(resid):
        proj = np.einsum("...ba,...a->...b", f, resid)
        return np.einsum("...ba,...b->...a", f, w * proj)

    def op(v):
        return project_coefficients(weighted(reconstruct_coefficients(v, U)), U)

    rhs = project_coefficients(weighted(sys.log_coeffs), U)
    return NormalSystem(rhs, w, operator=op)


def solve_normal_system(ns: NormalSystem, tol=CG_TOL):
    """Solve A V = rhs; Cholesky when dense, conjugate gradients otherwise."""
    rhs = ns.rhs.ravel()
    rnorm = np.linalg.norm(rhs)
    if rnorm == 0:
        return np.zeros(ns.rhs.shape)
    if ns.matrix is not None:
        a = ns.matrix
        try:
            v = scipy.linalg.cho_solve(scipy.linalg.cho_factor(a), rhs)
        except np.linalg.LinAlgError:
            v = np.linalg.lstsq(a, rhs, rcond=None)[0]
    else:
        n = rhs.size
        op = LinearOperator((n, n), matvec=lambda x: ns.apply(x).ravel(), dtype=float)
        v, _ = cg(op, rhs, rtol=tol, atol=0.0, maxiter=10 * n)
    res = np.linalg.norm(ns.apply(v).ravel() - rhs)
    if not np.isfinite(res) or res > 1e-8 * rnorm:
        raise NotPositiveDefinite(f"normal system residual {res:.3g} exceeds tolerance")
    return v.reshape(ns.rhs.shape)


def check_curvature(sys: CurvatureSystem):
    if sys.kappa_max >= KAPPA_LIMIT:
        idx = np.unravel_index(int(np.argmax(sys.kappas)), sys.kappas.shape)
        raise CurvatureTooLarge(
            f"curvature {sys.kappa_max:.6g} at entry {idx[:-1]} reaches pi^2; choose a base point closer to the data"
        )


def cc_thosvd(p: ManifoldPoint, T: MvTensor, r, dense_limit=DENSE_LIMIT) -> TuckerFactors:
    """Truncated tHOSVD factors with the curvature-corrected optimal core."""
    sys = build_curvature_system(p, T)
    _, factors, sigmas, ranks = hosvd_coefficients(sys.log_coeffs)
    r = clamp_ranks(factors, r)
    U = [u[:, :x] for u, x in zip(factors, r)]
    check_curvature(sys)
    d = p.manifold.dim
    if prod(r) * d <= dense_limit:
        ns = build_normal_system(build_B(U, None, sys), sys, sys.log_theta_coeffs)
    else:
        ns = build_normal_operator(U, sys)
    v = solve_normal_system(ns)
    core = TangentTensor(p, p.manifold.from_coords(p.coords, v))
    return TuckerFactors(core, U, [s[:x].copy() for s, x in zip(sigmas, r)], ranks)


def zero_delta_lower_bound(kappa_max, naive_err):
    """beta(kappa_max)^2 times the naive tangent truncation error."""
    return beta(kappa_max) ** 2 * naive_err


@dataclass(frozen=True)
class BoundsReport:
    f_kappa: float
    f_zero: float
    xi_norm_sq: float
    kappa_min: float
    kappa_max: float
    lower_bound: float
    upper_gap: float
    lower_ok: bool
    upper_ok: bool

    @property
    def ok(self):
        return self.lower_ok and self.upper_ok


def sandwich_bounds_check(Xi: TangentTensor, T: MvTensor, sys: CurvatureSystem, slack=1e-9) -> BoundsReport:
    """Check F(Xi;k) >= beta(k_max)^2 F(Xi;0) and the |F(Xi;k) - F(Xi;0)| bound."""
    resid = _residual_coeffs(Xi, T, sys)
    fk = loss_from_residual(resid, sys)
    f0 = loss_from_residual(resid, sys, kappa_zero=True)
    xi2 = float(np.sum(tangent_coefficients(Xi) ** 2))
    kmin, kmax = sys.kappa_min, sys.kappa_max
    lower = beta(kmax) ** 2 * f0
    gap = max(beta(kmin) ** 2 - 1.0, 1.0 - beta(kmax) ** 2) * xi2
    tol = slack * max(1.0, f0, xi2)
    return BoundsReport(fk, f0, xi2, kmin, kmax, lower, gap, fk >= lower - tol, abs(fk - f0) <= gap + tol)


def discrepancy(T: MvTensor, p: ManifoldPoint, Xi: TangentTensor, sys: CurvatureSystem):
    """(F(Xi;k) - d(T, exp_p Xi)^2, same divided by |Xi - log_p T|^3)."""
    resid = _residual_coeffs(Xi, T, sys)
    f = loss_from_residual(resid, sys)
    m = p.manifold
    true = float(np.sum(m.dist(T.coords, m.exp(p.coords, Xi.coords)) ** 2))
    delta = f - true
    eps = float(np.sqrt(np.sum(resid**2)))
    # an exact fit up to roundoff counts as 0/0
    if eps <= EXACT_FIT_TOL * max(1.0, float(np.sqrt(np.sum(sys.log_coeffs**2)))):
        return delta, 0.0
    return delta, delta / eps**3
