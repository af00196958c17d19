"""Symmetric Riemannian manifolds with closed-form curvature frames.

Three manifolds are provided: Euclidean space, the unit sphere and the
cone of symmetric positive definite matrices with the affine-invariant
metric. Each one has a kernel class working on plain numpy arrays of
embedded coordinates (with broadcasting over leading axes) and the module
exposes thin typed wrappers, ``ManifoldPoint`` and ``TangentVector``, on
top of them.

SPD points and tangent vectors are stored as full ``n x n`` matrices
flattened row-major.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CutLocusError, InvariantViolation, ValidationError

EUCLIDEAN = "euclidean"
SPHERE = "sphere"
SPD = "spd"

# reject log when the distance is this close to pi on the sphere
CUT_LOCUS_TOL = 1e-6
# candidates shorter than this after orthogonalization are dropped
FRAME_TOL = 1e-8
INVARIANT_TOL = 1e-10


def complete_frame(first, tol=FRAME_TOL):
    """Complete orthonormal rows to an orthonormal basis of R^m.

    ``first`` has shape (..., k, m) with orthonormal rows. Candidates are
    the canonical unit vectors e_1, ..., e_m taken in order; each one is
    orthogonalized by modified Gram-Schmidt (two sweeps) and kept unless
    its residual norm falls below ``tol``. Returns shape (..., m, m) whose
    first k rows are ``first``.
    """
    first = np.asarray(first, dtype=float)
    *batch, k, m = first.shape
    flat = first.reshape(-1, k, m)
    nb = flat.shape[0]
    q = np.zeros((nb, m, m))
    q[:, :k] = flat
    count = np.full(nb, k)
    rows = np.arange(nb)
    for c in range(m):
        if np.all(count >= m):
            break
        v = np.zeros((nb, m))
        v[:, c] = 1.0
        # rows past count.max() are still zero
        filled = int(count.max())
        for _ in range(2):
            for i in range(filled):
                qi = q[:, i]
                v -= np.einsum("bi,bi->b", qi, v)[:, None] * qi
        nrm = np.linalg.norm(v, axis=1)
        take = (nrm > tol) & (count < m)
        q[rows[take], count[take]] = v[take] / nrm[take, None]
        count = count + take
    return q.reshape(*batch, m, m)


def _sign_fix(vecs):
    """Flip eigenvector columns so the largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vecs), axis=-2)
    pick = np.take_along_axis(vecs, idx[..., None, :], axis=-2)
    return vecs * np.where(pick < 0, -1.0, 1.0)


def sym_eig_desc(a):
    """Symmetric eigendecomposition, eigenvalues descending, signs fixed."""
    w, v = np.linalg.eigh(a)
    w = w[..., ::-1]
    v = _sign_fix(v[..., ::-1])
    return w, v


def _sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _apply_fn(w, v, f):
    return (v * f(w)[..., None, :]) @ np.swapaxes(v, -1, -2)


def _dot(u, v):
    return np.sum(u * v, axis=-1)


class Manifold:
    """Array-level kernel shared interface.

    Points and tangent vectors are arrays whose last axis has length
    ``embedding_dim``; leading axes broadcast.
    """

    kind: str
    dim: int
    embedding_dim: int

    @property
    def descriptor(self) -> "ManifoldDescriptor":
        return ManifoldDescriptor(self.kind, self.dim, self.embedding_dim)

    def norm(self, p, v):
        return np.sqrt(np.maximum(self.inner(p, v, v), 0.0))

    def from_coords(self, p, c):
        return np.einsum("...i,...ij->...j", c, self.basis(p))

    def coords(self, p, v):
        return np.einsum("...ij,...j->...i", self.basis(p), v)

    def log_coeffs(self, p, x):
        """Orthonormal-basis coordinates of log_p x."""
        return self.coords(p, self.log(p, x))

    def eigenbasis_coeffs(self, p, c):
        """Curvature eigenframe of the tangent vector with coordinates c.

        Works entirely in orthonormal-basis coordinates at p and returns
        (kappas, frame) with frame rows the coordinates of the eigenvectors.
        The first row is c/|c|; the completion is the canonical one of R^d.
        """
        c = np.asarray(c, dtype=float)
        nc = np.linalg.norm(c, axis=-1)
        nz = nc > 0
        first = c / np.where(nz, nc, 1.0)[..., None]
        frame = complete_frame(first[..., None, :])
        if not np.all(nz):
            frame[~nz] = np.eye(self.dim)
        return self._coeff_kappas(nc, c), frame

    def log_frame(self, p, x):
        """log_p x coordinates together with its curvature eigenframe coordinates."""
        c = self.log_coeffs(p, x)
        kappa, frame = self.eigenbasis_coeffs(p, c)
        return c, kappa, frame

    def random_tangent(self, p, variance, rng):
        if variance < 0:
            raise ValidationError("variance must be nonnegative")
        p = np.asarray(p, dtype=float)
        z = rng.standard_normal(p.shape[:-1] + (self.dim,))
        return self.from_coords(p, np.sqrt(variance) * z)

    def origin(self):
        raise NotImplementedError


class Euclidean(Manifold):
    kind = EUCLIDEAN

    def __init__(self, d):
        self.dim = int(d)
        self.embedding_dim = int(d)

    def origin(self):
        return np.zeros(self.dim)

    def exp(self, p, v):
        return np.asarray(p) + np.asarray(v)

    def log(self, p, x):
        return np.asarray(x) - np.asarray(p)

    def dist(self, p, x):
        return np.linalg.norm(np.asarray(x) - np.asarray(p), axis=-1)

    def inner(self, p, u, v):
        return _dot(u, v)

    def transport(self, p, q, v):
        shape = np.broadcast_shapes(np.shape(p), np.shape(q), np.shape(v))
        return np.broadcast_to(v, shape).astype(float)

    def basis(self, p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(np.eye(self.dim), p.shape[:-1] + (self.dim, self.dim)).copy()

    def coords(self, p, v):
        return np.asarray(v, dtype=float).copy()

    def from_coords(self, p, c):
        return np.asarray(c, dtype=float).copy()

    def curvature(self, p, u, v, w):
        return np.zeros(np.broadcast_shapes(np.shape(u), np.shape(v), np.shape(w)))

    def eigenbasis(self, p, v):
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v, axis=-1)
        safe = np.where(nv > 0, nv, 1.0)
        first = np.where((nv > 0)[..., None], v / safe[..., None], 0.0)
        frame = complete_frame(first[..., None, :])
        zero = ~(nv > 0)
        if np.any(zero):
            frame[zero] = np.eye(self.dim)
        return np.zeros(v.shape[:-1] + (self.dim,)), frame

    def _coeff_kappas(self, nc, c):
        return np.zeros(c.shape)

    def check_point(self, x):
        return np.all(np.isfinite(x), axis=-1)

    def check_tangent(self, p, v):
        return np.all(np.isfinite(v), axis=-1)

    def project_point(self, x):
        return np.asarray(x, dtype=float)


class Sphere(Manifold):
    kind = SPHERE

    def __init__(self, d):
        self.dim = int(d)
        self.embedding_dim = int(d) + 1

    def origin(self):
        e = np.zeros(self.embedding_dim)
        e[-1] = 1.0
        return e

    def project_tangent(self, p, v):
        return v - _dot(p, v)[..., None] * p

    def exp(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v, axis=-1, keepdims=True)
        x = np.cos(nv) * p + np.sinc(nv / np.pi) * v
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def _angle(self, p, x):
        c = _dot(p, x)
        u = x - c[..., None] * p
        nu = np.linalg.norm(u, axis=-1)
        return np.arctan2(nu, c), u, nu

    def log(self, p, x):
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        th, u, nu = self._angle(p, x)
        bad = th >= np.pi - CUT_LOCUS_TOL
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0]) if np.ndim(bad) else ()
            raise CutLocusError(f"point at distance {np.max(th):.6g} is within the cut locus tolerance", idx)
        fac = np.where(nu > 0, th / np.where(nu > 0, nu, 1.0), 1.0)
        return fac[..., None] * u

    def dist(self, p, x):
        return self._angle(np.asarray(p, dtype=float), np.asarray(x, dtype=float))[0]

    def inner(self, p, u, v):
        return _dot(u, v)

    def transport(self, p, q, v):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        denom = 1.0 + _dot(p, q)
        if np.any(denom <= 1e-12):
            raise CutLocusError("transport between antipodal points is undefined")
        return v - (_dot(q, v) / denom)[..., None] * (p + q)

    def basis(self, p):
        p = np.asarray(p, dtype=float)
        if p.ndim == 1:
            key = p.tobytes()
            cache = self.__dict__.setdefault("_basis_cache", {})
            if key not in cache:
                if len(cache) > 32:
                    cache.clear()
                cache[key] = complete_frame(p[None, :])[1:, :]
            return cache[key].copy()
        return complete_frame(p[..., None, :])[..., 1:, :]

    def curvature(self, p, u, v, w):
        return _dot(v, w)[..., None] * u - _dot(u, w)[..., None] * v

    def eigenbasis(self, p, v):
        p = np.asarray(p, dtype=float)
        v = self.project_tangent(p, np.asarray(v, dtype=float))
        p, v = np.broadcast_arrays(p, v)
        nv = np.linalg.norm(v, axis=-1)
        nz = nv > 0
        t1 = v / np.where(nz, nv, 1.0)[..., None]
        frame = complete_frame(np.stack([p, t1], axis=-2))[..., 1:, :]
        if not np.all(nz):
            frame[~nz] = self.basis(p[~nz])
        kappa = np.repeat((nv**2)[..., None], self.dim, axis=-1)
        kappa[..., 0] = 0.0
        return kappa, frame

    def _coeff_kappas(self, nc, c):
        kappa = np.repeat((nc**2)[..., None], self.dim, axis=-1)
        kappa[..., 0] = 0.0
        return kappa

    def check_point(self, x):
        return np.all(np.isfinite(x), axis=-1) & (np.abs(np.linalg.norm(x, axis=-1) - 1.0) <= INVARIANT_TOL)

    def check_tangent(self, p, v):
        return np.all(np.isfinite(v), axis=-1) & (np.abs(_dot(p, v)) <= INVARIANT_TOL * np.maximum(1.0, np.linalg.norm(v, axis=-1)))

    def project_point(self, x):
        x = np.asarray(x, dtype=float)
        return x / np.linalg.norm(x, axis=-1, keepdims=True)


class SPDMatrices(Manifold):
    """Symmetric positive definite n x n matrices, affine-invariant metric.

    Every kernel is evaluated by congruence to the identity: with
    s = p^(1/2), a tangent vector V at p corresponds to s^-1 V s^-1 at I,
    where the metric is the Frobenius product and the exponential is the
    matrix exponential.
    """

    kind = SPD

    def __init__(self, n):
        self.n = int(n)
        self.dim = self.n * (self.n + 1) // 2
        self.embedding_dim = self.n * self.n
        iu = np.triu_indices(self.n, k=1)
        self._off = list(zip(iu[0].tolist(), iu[1].tolist()))
        e = np.zeros((self.dim, self.n, self.n))
        for c in range(self.n):
            e[c, c, c] = 1.0
        for k, (a, b) in enumerate(self._off):
            e[self.n + k, a, b] = e[self.n + k, b, a] = 1.0 / np.sqrt(2.0)
        self._identity_basis = e
        self._root_cache = {}

    def origin(self):
        return np.eye(self.n).ravel()

    def _mat(self, x):
        x = np.asarray(x, dtype=float)
        return x.reshape(x.shape[:-1] + (self.n, self.n))

    def _flat(self, m):
        return m.reshape(m.shape[:-2] + (self.embedding_dim,))

    def _roots(self, p):
        p = np.asarray(p, dtype=float)
        key = p.tobytes() if p.ndim == 1 else None
        if key is not None and key in self._root_cache:
            return self._root_cache[key]
        w, v = np.linalg.eigh(self._mat(p))
        if np.any(w <= 0):
            raise InvariantViolation("base point is not positive definite")
        roots = _apply_fn(w, v, np.sqrt), _apply_fn(w, v, lambda t: 1.0 / np.sqrt(t))
        if key is not None:
            if len(self._root_cache) > 32:
                self._root_cache.clear()
            self._root_cache[key] = roots
        return roots

    def _to_coeffs(self, w):
        """Identity-level symmetric matrices to orthonormal coordinates."""
        diag = np.diagonal(w, axis1=-2, axis2=-1)
        if not self._off:
            return diag.copy()
        off = np.stack([np.sqrt(2.0) * w[..., a, b] for a, b in self._off], axis=-1)
        return np.concatenate([diag, off], axis=-1)

    def _from_coeffs(self, c):
        return np.einsum("...i,ijk->...jk", np.asarray(c, dtype=float), self._identity_basis)

    def whiten(self, p, v):
        """Map tangent vectors at p to the identity, s^-1 V s^-1."""
        _, si = self._roots(p)
        return _sym(si @ self._mat(v) @ si)

    def exp(self, p, v):
        s, si = self._roots(p)
        m = _sym(si @ self._mat(v) @ si)
        w, u = np.linalg.eigh(m)
        return self._flat(_sym(s @ _apply_fn(w, u, np.exp) @ s))

    def log(self, p, x):
        s, si = self._roots(p)
        m = _sym(si @ self._mat(x) @ si)
        w, u = np.linalg.eigh(m)
        if np.any(w <= 0):
            raise InvariantViolation("argument is not positive definite")
        return self._flat(_sym(s @ _apply_fn(w, u, np.log) @ s))

    def dist(self, p, x):
        _, si = self._roots(p)
        w = np.linalg.eigvalsh(_sym(si @ self._mat(x) @ si))
        if np.any(w <= 0):
            raise InvariantViolation("argument is not positive definite")
        return np.sqrt(np.sum(np.log(w) ** 2, axis=-1))

    def inner(self, p, u, v):
        _, si = self._roots(p)
        a = si @ self._mat(u) @ si
        b = si @ self._mat(v) @ si
        return np.sum(a * b, axis=(-2, -1))

    def transport(self, p, q, v):
        s, si = self._roots(p)
        m = _sym(si @ self._mat(q) @ si)
        w, u = np.linalg.eigh(m)
        e = s @ _apply_fn(w, u, np.sqrt) @ si
        return self._flat(_sym(e @ self._mat(v) @ np.swapaxes(e, -1, -2)))

    def basis(self, p):
        s, _ = self._roots(p)
        s = s[..., None, :, :]
        return self._flat(s @ self._identity_basis @ s)

    def coords(self, p, v):
        return self._to_coeffs(self.whiten(p, v))

    def from_coords(self, p, c):
        s, _ = self._roots(p)
        return self._flat(_sym(s @ self._from_coeffs(c) @ s))

    def log_coeffs(self, p, x):
        _, si = self._roots(p)
        w, u = np.linalg.eigh(_sym(si @ self._mat(x) @ si))
        if np.any(w <= 0):
            raise InvariantViolation("argument is not positive definite")
        return self._to_coeffs(_apply_fn(w, u, np.log))

    def curvature(self, p, u, v, w):
        s, si = self._roots(p)
        a, b, c = (si @ self._mat(t) @ si for t in (u, v, w))
        ab = a @ b - b @ a
        r = -0.25 * (ab @ c - c @ ab)
        return self._flat(s @ r @ s)

    def eigenbasis(self, p, v):
        """Frame diagonalizing X -> R(X, v)v, with eigenvalues.

        At the identity, with v = sum_c lam_c v_c v_c^T, the frame consists
        of v/|v| completed inside span{v_c v_c^T} (eigenvalue 0) and the
        symmetrized products of eigenvector pairs (c < e) with eigenvalue
        -(lam_c - lam_e)^2 / 4.
        """
        s, _ = self._roots(p)
        kappa, theta, nz = self._identity_frame(self.whiten(p, v))
        frame = self._flat(_sym(s[..., None, :, :] @ theta @ s[..., None, :, :]))
        if not np.all(nz):
            frame[~nz] = np.broadcast_to(self.basis(p), frame.shape)[~nz]
        return kappa, frame

    def eigenbasis_coeffs(self, p, c):
        return self._frame_coeffs(*sym_eig_desc(self._from_coeffs(c)))

    def log_frame(self, p, x):
        # log shares its eigenvectors with the whitened argument
        _, si = self._roots(p)
        w, u = np.linalg.eigh(_sym(si @ self._mat(x) @ si))
        if np.any(w <= 0):
            raise InvariantViolation("argument is not positive definite")
        lw = np.log(w)
        c = self._to_coeffs(_apply_fn(lw, u, lambda t: t))
        kappa, frame = self._frame_coeffs(lw[..., ::-1], _sign_fix(u[..., ::-1]))
        return c, kappa, frame

    def _frame_coeffs(self, lam, vec):
        """Eigenframe in orthonormal coordinates straight from an eigendecomposition.

        Same frame as :meth:`_identity_frame`, without forming matrices:
        ``pair[..., a, b, :]`` holds the coordinates of sym(v_a v_b^T).
        """
        n = self.n
        iu = tuple(np.array(t) for t in zip(*self._off)) if self._off else (np.array([], int), np.array([], int))
        diag = vec[..., :, :, None] * vec[..., :, None, :]
        cross = vec[..., iu[0], :, None] * vec[..., iu[1], None, :]
        cross = np.sqrt(0.5) * (cross + np.swapaxes(cross, -1, -2))
        pair = np.concatenate([diag, cross], axis=-3)
        pair = np.moveaxis(pair, -3, -1)
        nv = np.sqrt(np.sum(lam**2, axis=-1))
        nz = nv > 0
        first = lam / np.where(nz, nv, 1.0)[..., None]
        first[~nz] = 0.0
        coef = complete_frame(first[..., None, :])
        frame = np.empty(lam.shape[:-1] + (self.dim, self.dim))
        kappa = np.zeros(lam.shape[:-1] + (self.dim,))
        idx = np.arange(n)
        frame[..., :n, :] = np.einsum("...kc,...cx->...kx", coef, pair[..., idx, idx, :])
        for k, (a, b) in enumerate(self._off):
            frame[..., n + k, :] = np.sqrt(2.0) * pair[..., a, b, :]
            kappa[..., n + k] = -0.25 * (lam[..., a] - lam[..., b]) ** 2
        kappa[~nz] = 0.0
        if not np.all(nz):
            frame[~nz] = np.eye(self.dim)
        return kappa, frame

    def _identity_frame(self, m=None, lam=None, vec=None):
        if lam is None:
            lam, vec = sym_eig_desc(m)
        nv = np.sqrt(np.sum(lam**2, axis=-1))
        nz = nv > 0
        first = lam / np.where(nz, nv, 1.0)[..., None]
        first[~nz] = 0.0
        coef = complete_frame(first[..., None, :])
        n = self.n
        batch = lam.shape[:-1]
        theta = np.empty(batch + (self.dim, n, n))
        kappa = np.zeros(batch + (self.dim,))
        theta[..., :n, :, :] = (vec[..., None, :, :] * coef[..., :, None, :]) @ np.swapaxes(vec, -1, -2)[..., None, :, :]
        for k, (a, b) in enumerate(self._off):
            va = vec[..., :, a]
            vb = vec[..., :, b]
            outer = va[..., :, None] * vb[..., None, :]
            theta[..., n + k, :, :] = (outer + np.swapaxes(outer, -1, -2)) / np.sqrt(2.0)
            kappa[..., n + k] = -0.25 * (lam[..., a] - lam[..., b]) ** 2
        kappa[~nz] = 0.0
        return kappa, theta, nz

    def check_point(self, x):
        m = self._mat(x)
        finite = np.all(np.isfinite(m), axis=(-2, -1))
        m = np.where(finite[..., None, None], m, 0.0)
        asym = np.max(np.abs(m - np.swapaxes(m, -1, -2)), axis=(-2, -1))
        scale = np.maximum(1.0, np.max(np.abs(m), axis=(-2, -1)))
        pd = np.linalg.eigvalsh(_sym(m))[..., 0] > 0
        return finite & (asym <= INVARIANT_TOL * scale) & pd

    def check_tangent(self, p, v):
        m = self._mat(v)
        asym = np.max(np.abs(m - np.swapaxes(m, -1, -2)), axis=(-2, -1))
        scale = np.maximum(1.0, np.max(np.abs(m), axis=(-2, -1)))
        return np.all(np.isfinite(m), axis=(-2, -1)) & (asym <= INVARIANT_TOL * scale)

    def project_point(self, x, clamp_rel=1e-6):
        return self._flat(project_spd(self._mat(x), clamp_rel))


def project_spd(m, clamp_rel=1e-6):
    """Symmetrize and raise eigenvalues below clamp_rel * lambda_max.

    Matrices that already satisfy the floor are returned symmetrized but
    otherwise untouched. If lambda_max <= 0 the floor uses scale 1.
    """
    m = _sym(np.asarray(m, dtype=float))
    if not np.all(np.isfinite(m)):
        raise InvariantViolation("non-finite matrix entries")
    w, v = np.linalg.eigh(m)
    lmax = w[..., -1]
    scale = np.where(lmax > 0, lmax, 1.0)
    floor = clamp_rel * scale
    low = w[..., 0] < floor
    if not np.any(low):
        return m
    fixed = _sym(_apply_fn(np.maximum(w, floor[..., None]), v, lambda t: t))
    return np.where(low[..., None, None], fixed, m)


@dataclass(frozen=True)
class ManifoldDescriptor:
    kind: str
    intrinsic_dim: int
    embedding_dim: int

    def __post_init__(self):
        d, e = self.intrinsic_dim, self.embedding_dim
        if d < 1:
            raise ValidationError("intrinsic dimension must be positive")
        if self.kind == EUCLIDEAN:
            ok = e == d
        elif self.kind == SPHERE:
            ok = e == d + 1
        elif self.kind == SPD:
            n = int(round(np.sqrt(e)))
            ok = n * n == e and d == n * (n + 1) // 2
        else:
            raise ValidationError(f"unknown manifold kind {self.kind!r}")
        if not ok:
            raise ValidationError(f"inconsistent dimensions for {self.kind}: d={d}, embedding={e}")

    @classmethod
    def euclidean(cls, d):
        return cls(EUCLIDEAN, int(d), int(d))

    @classmethod
    def sphere(cls, d):
        return cls(SPHERE, int(d), int(d) + 1)

    @classmethod
    def spd(cls, n):
        return cls(SPD, int(n) * (int(n) + 1) // 2, int(n) ** 2)

    @property
    def manifold(self) -> Manifold:
        return _kernel(self)

    def __str__(self):
        if self.kind == SPD:
            return f"SPD({int(round(np.sqrt(self.embedding_dim)))})"
        if self.kind == SPHERE:
            return f"S^{self.intrinsic_dim}"
        return f"R^{self.intrinsic_dim}"


@lru_cache(maxsize=None)
def _kernel(desc: ManifoldDescriptor) -> Manifold:
    if desc.kind == EUCLIDEAN:
        return Euclidean(desc.intrinsic_dim)
    if desc.kind == SPHERE:
        return Sphere(desc.intrinsic_dim)
    return SPDMatrices(int(round(np.sqrt(desc.embedding_dim))))


def _frozen(coords, length):
    a = np.array(coords, dtype=float).ravel()
    if a.shape != (length,):
        raise ValidationError(f"expected {length} coordinates, got {np.size(coords)}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    descriptor: ManifoldDescriptor
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(self.coords, self.descriptor.embedding_dim))
        if not self.manifold.check_point(self.coords):
            raise InvariantViolation(f"coordinates are not a point of {self.descriptor}")

    @property
    def manifold(self) -> Manifold:
        return self.descriptor.manifold

    def same(self, other) -> bool:
        return self is other or (
            isinstance(other, ManifoldPoint)
            and other.descriptor == self.descriptor
            and np.array_equal(other.coords, self.coords)
        )

    def __eq__(self, other):
        return self.same(other)

    def __hash__(self):
        return hash((self.descriptor, self.coords.tobytes()))


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: ManifoldPoint
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(self.coords, self.base.descriptor.embedding_dim))
        if not self.base.manifold.check_tangent(self.base.coords, self.coords):
            raise InvariantViolation(f"coordinates are not a tangent vector at the base point")

    @property
    def descriptor(self):
        return self.base.descriptor


def _check_base(p: ManifoldPoint, *vs: TangentVector):
    for v in vs:
        if v.descriptor != p.descriptor:
            raise ValidationError("dimension mismatch between point and tangent vector")
        if not v.base.same(p):
            raise ValidationError("tangent vector is not based at the given point")


def _check_same(p: ManifoldPoint, x: ManifoldPoint):
    if p.descriptor != x.descriptor:
        raise ValidationError("points live on different manifolds")


def exp_map(p: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
    _check_base(p, v)
    return ManifoldPoint(p.descriptor, p.manifold.exp(p.coords, v.coords))


def log_map(p: ManifoldPoint, x: ManifoldPoint) -> TangentVector:
    _check_same(p, x)
    return TangentVector(p, p.manifold.log(p.coords, x.coords))


def distance(p: ManifoldPoint, x: ManifoldPoint) -> float:
    _check_same(p, x)
    return float(p.manifold.dist(p.coords, x.coords))


def inner(p: ManifoldPoint, u: TangentVector, v: TangentVector) -> float:
    _check_base(p, u, v)
    return float(p.manifold.inner(p.coords, u.coords, v.coords))


def norm(p: ManifoldPoint, v: TangentVector) -> float:
    _check_base(p, v)
    return float(p.manifold.norm(p.coords, v.coords))


def parallel_transport(p: ManifoldPoint, q: ManifoldPoint, v: TangentVector) -> TangentVector:
    """Transport v from p to q along the minimizing geodesic."""
    _check_same(p, q)
    _check_base(p, v)
    return TangentVector(q, p.manifold.transport(p.coords, q.coords, v.coords))


def orthonormal_basis(p: ManifoldPoint) -> list[TangentVector]:
    return [TangentVector(p, b) for b in p.manifold.basis(p.coords)]


def curvature_operator(p: ManifoldPoint, u: TangentVector, v: TangentVector, w: TangentVector) -> TangentVector:
    """Riemann curvature R(u, v)w at p."""
    _check_base(p, u, v, w)
    return TangentVector(p, p.manifold.curvature(p.coords, u.coords, v.coords, w.coords))


def curvature_eigenbasis(p: ManifoldPoint, v: TangentVector):
    """Eigenvalues and orthonormal eigenvectors of X -> R(X, v)v.

    The first vector is v/|v| with eigenvalue 0. For v = 0 the orthonormal
    basis of p is returned with all eigenvalues 0.
    """
    _check_base(p, v)
    kappa, frame = p.manifold.eigenbasis(p.coords, v.coords)
    return kappa, [TangentVector(p, t) for t in frame]


def random_tangent(p: ManifoldPoint, variance: float, rng) -> TangentVector:
    """Isotropic Gaussian tangent vector in orthonormal-basis coordinates.

    ``rng`` is a ``numpy.random.Generator`` or an integer seed.
    """
    if variance < 0:
        raise ValidationError("variance must be nonnegative")
    from .experiments import make_rng

    return TangentVector(p, p.manifold.random_tangent(p.coords, variance, make_rng(rng)))


def point(descriptor: ManifoldDescriptor, coords) -> ManifoldPoint:
    return ManifoldPoint(descriptor, coords)
