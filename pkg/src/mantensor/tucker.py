"""Tangent-space HOSVD of manifold-valued tensors.

All linear algebra happens on the tangent coefficients of log_p T in the
orthonormal basis of p, which turns the product metric into the plain
Euclidean one. The result does not depend on the choice of that basis.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import RankClampWarning, ValidationError
from .manifold import ManifoldPoint, sym_eig_desc
from .mvtensor import MvTensor, TangentTensor, log_tensor, mode_product, unfold

RANK_TOL = 1e-12
# RMS tangent norm per entry below which the data count as the base point
ZERO_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class TuckerFactors:
    core: TangentTensor
    factors: list
    singular_values: list
    ranks: tuple

    @property
    def base(self) -> ManifoldPoint:
        return self.core.base

    @property
    def multilinear_rank(self):
        return self.core.shape

    def coefficients(self):
        """Core in orthonormal-basis coordinates, shape r + (d,)."""
        return self.base.manifold.coords(self.base.coords, self.core.coords)


def tangent_coefficients(X: TangentTensor):
    """Coordinates of every entry in the orthonormal basis of the base point."""
    return X.manifold.coords(X.base.coords, X.coords)


def log_coefficients(p: ManifoldPoint, T: MvTensor):
    """Orthonormal-basis coordinates of log_p T, shape T.shape + (d,)."""
    if p.descriptor != T.descriptor:
        raise ValidationError(f"base point on {p.descriptor} but tensor on {T.descriptor}")
    return p.manifold.log_coeffs(p.coords, T.coords)


def gram_matrix(p: ManifoldPoint, X: TangentTensor):
    """G[a, b] = <X_a, X_b>_p for the rows of an unfolded tangent tensor."""
    if not X.base.same(p):
        raise ValidationError("tangent tensor is not based at p")
    c = tangent_coefficients(X)
    c = c.reshape(c.shape[0], -1)
    g = c @ c.T
    return 0.5 * (g + g.T)


def _eig_factor(g, rank_tol=RANK_TOL, entries=1):
    w, v = sym_eig_desc(g)
    sigma = np.sqrt(np.maximum(w, 0.0))
    top = sigma[0] ** 2
    if top <= ZERO_TOL**2 * entries:
        # log_p T is roundoff only
        rank = 0
    else:
        rank = int(np.count_nonzero(sigma**2 > rank_tol * top))
    keep = max(rank, 1)
    return v[:, :keep].copy(), sigma[:keep].copy(), rank


def _mode_gram(c, k):
    a = np.moveaxis(c, k, 0).reshape(c.shape[k], -1)
    g = a @ a.T
    return 0.5 * (g + g.T)


def tangent_svd(p: ManifoldPoint, T: MvTensor, k: int, rank_tol=RANK_TOL):
    """Mode-k tangent SVD: (U, sigma, R) from the Gram matrix of unfold(log_p T, k).

    U keeps the R detected columns (one column if R = 0).
    """
    X = unfold(log_tensor(p, T), k)
    return _eig_factor(gram_matrix(p, X), rank_tol, T.size)


def hosvd_coefficients(c, rank_tol=RANK_TOL):
    """HOSVD of a coefficient tensor c of shape dims + (d,).

    Returns (core coefficients, factors, singular values, ranks).
    """
    factors, sigmas, ranks = [], [], []
    for k in range(c.ndim - 1):
        u, s, r = _eig_factor(_mode_gram(c, k), rank_tol, c[..., 0].size)
        factors.append(u)
        sigmas.append(s)
        ranks.append(r)
    core = c
    for k, u in enumerate(factors):
        core = mode_product(core, u.T, k)
    return core, factors, sigmas, tuple(ranks)


def thosvd(p: ManifoldPoint, T: MvTensor, rank_tol=RANK_TOL) -> TuckerFactors:
    """Tangent-space HOSVD without truncation."""
    core, factors, sigmas, ranks = hosvd_coefficients(log_coefficients(p, T), rank_tol)
    core_t = TangentTensor(p, p.manifold.from_coords(p.coords, core))
    return TuckerFactors(core_t, factors, sigmas, ranks)


def clamp_ranks(factors, r):
    """Validate requested ranks and clamp them to the available columns."""
    r = tuple(int(x) for x in np.atleast_1d(r))
    if len(r) != len(factors):
        raise ValidationError(f"need {len(factors)} ranks, got {len(r)}")
    if any(x < 1 for x in r):
        raise ValidationError("ranks must be at least 1")
    out = []
    for k, x in enumerate(r):
        avail = factors[k].shape[1]
        if x > avail:
            warnings.warn(f"rank {x} in mode {k} clamped to {avail}", RankClampWarning, stacklevel=3)
            x = avail
        out.append(x)
    return tuple(out)


def truncate(f: TuckerFactors, r) -> TuckerFactors:
    """Keep the leading r_k columns of each factor and the matching core block."""
    r = clamp_ranks(f.factors, r)
    block = tuple(slice(0, x) for x in r)
    core = TangentTensor(f.base, f.core.coords[block])
    factors = [u[:, :x].copy() for u, x in zip(f.factors, r)]
    sigmas = [s[:x].copy() for s, x in zip(f.singular_values, r)]
    return TuckerFactors(core, factors, sigmas, f.ranks)


def reconstruct(f: TuckerFactors) -> TangentTensor:
    """core x_1 U^1 ... x_n U^n as a tangent tensor at the base point."""
    a = f.core.coords
    for k, u in enumerate(f.factors):
        a = mode_product(a, u, k)
    return TangentTensor(f.base, a)


def reconstruct_coefficients(v, factors):
    a = np.asarray(v, dtype=float)
    for k, u in enumerate(factors):
        a = mode_product(a, u, k)
    return a


def project_coefficients(c, factors):
    a = np.asarray(c, dtype=float)
    for k, u in enumerate(factors):
        a = mode_product(a, u.T, k)
    return a
