"""Manifold-valued tensors, tangent tensors and multilinear algebra on them.

Both containers keep their entries as a single array of embedded
coordinates of shape ``shape + (embedding_dim,)`` in row-major entry order.
Mode indices are zero-based, like numpy axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import InvariantViolation, ShapeMismatch, ValidationError
from .manifold import ManifoldDescriptor, ManifoldPoint, TangentVector


def _coords_array(coords, dim):
    a = np.array(coords, dtype=float)
    if a.ndim < 2 or a.shape[-1] != dim:
        raise ShapeMismatch(f"coordinate array must have shape (..., {dim}), got {a.shape}")
    if any(s < 1 for s in a.shape[:-1]):
        raise ShapeMismatch("tensor dimensions must be positive")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MvTensor:
    descriptor: ManifoldDescriptor
    coords: np.ndarray

    def __post_init__(self):
        a = _coords_array(self.coords, self.descriptor.embedding_dim)
        object.__setattr__(self, "coords", a)
        ok = self.descriptor.manifold.check_point(a)
        if not np.all(ok):
            bad = tuple(int(i) for i in np.argwhere(~ok)[0])
            raise InvariantViolation(f"entry {bad} is not a point of {self.descriptor}")

    @classmethod
    def from_entries(cls, entries, shape):
        entries = list(entries)
        if not entries or len(entries) != prod(shape):
            raise ShapeMismatch("number of entries does not match shape")
        desc = entries[0].descriptor
        if any(e.descriptor != desc for e in entries):
            raise ValidationError("entries live on different manifolds")
        return cls(desc, np.stack([e.coords for e in entries]).reshape(tuple(shape) + (-1,)))

    @property
    def shape(self):
        return self.coords.shape[:-1]

    @property
    def order(self):
        return len(self.shape)

    @property
    def size(self):
        return prod(self.shape)

    @property
    def manifold(self):
        return self.descriptor.manifold

    @property
    def entries(self):
        flat = self.coords.reshape(-1, self.coords.shape[-1])
        return [ManifoldPoint(self.descriptor, c) for c in flat]

    def __getitem__(self, idx):
        return ManifoldPoint(self.descriptor, self.coords[idx])


@dataclass(frozen=True, eq=False)
class TangentTensor:
    base: ManifoldPoint
    coords: np.ndarray

    def __post_init__(self):
        a = _coords_array(self.coords, self.base.descriptor.embedding_dim)
        object.__setattr__(self, "coords", a)
        if not np.all(self.manifold.check_tangent(self.base.coords, a)):
            raise InvariantViolation("entries are not tangent at the base point")

    @property
    def descriptor(self):
        return self.base.descriptor

    @property
    def manifold(self):
        return self.base.manifold

    @property
    def shape(self):
        return self.coords.shape[:-1]

    @property
    def order(self):
        return len(self.shape)

    @property
    def entries(self):
        flat = self.coords.reshape(-1, self.coords.shape[-1])
        return [TangentVector(self.base, c) for c in flat]

    def __getitem__(self, idx):
        return TangentVector(self.base, self.coords[idx])

    def _other(self, other):
        if not isinstance(other, TangentTensor) or not other.base.same(self.base):
            raise ValidationError("tangent tensors must share the base point")
        if other.shape != self.shape:
            raise ShapeMismatch("tangent tensors must have equal shapes")
        return other.coords

    def __add__(self, other):
        return TangentTensor(self.base, self.coords + self._other(other))

    def __sub__(self, other):
        return TangentTensor(self.base, self.coords - self._other(other))

    def __mul__(self, scalar):
        return TangentTensor(self.base, float(scalar) * self.coords)

    __rmul__ = __mul__

    def __neg__(self):
        return TangentTensor(self.base, -self.coords)


def constant(p: ManifoldPoint, shape) -> MvTensor:
    shape = tuple(int(s) for s in shape)
    return MvTensor(p.descriptor, np.broadcast_to(p.coords, shape + p.coords.shape))


def zeros(p: ManifoldPoint, shape) -> TangentTensor:
    return TangentTensor(p, np.zeros(tuple(shape) + p.coords.shape))


def _same_manifold(p: ManifoldPoint, T: MvTensor):
    if p.descriptor != T.descriptor:
        raise ValidationError(f"base point on {p.descriptor} but tensor on {T.descriptor}")


def log_tensor(p: ManifoldPoint, T: MvTensor) -> TangentTensor:
    """Entrywise logarithm at p; CutLocusError carries the offending multi-index."""
    _same_manifold(p, T)
    return TangentTensor(p, p.manifold.log(p.coords, T.coords))


def exp_tensor(p: ManifoldPoint, X: TangentTensor) -> MvTensor:
    if not X.base.same(p):
        raise ValidationError("tangent tensor is not based at p")
    return MvTensor(p.descriptor, p.manifold.exp(p.coords, X.coords))


def tensor_distance(A: MvTensor, B: MvTensor) -> float:
    """Product-metric distance sqrt(sum_i d(A_i, B_i)^2)."""
    if A.descriptor != B.descriptor:
        raise ValidationError("tensors live on different manifolds")
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes {A.shape} and {B.shape} differ")
    return float(np.sqrt(np.sum(A.manifold.dist(A.coords, B.coords) ** 2)))


def tangent_inner(X: TangentTensor, Y: TangentTensor) -> float:
    return float(np.sum(X.manifold.inner(X.base.coords, X.coords, X._other(Y))))


def tangent_norm(X: TangentTensor) -> float:
    return float(np.sqrt(max(tangent_inner(X, X), 0.0)))


def _check_mode(k, n):
    if not 0 <= k < n:
        raise ValidationError(f"mode {k} out of range for an order-{n} tensor")


def unfold(X: TangentTensor, k: int) -> TangentTensor:
    """Mode-k unfolding, shape (d_k, prod of the other dims).

    Row i lists the entries with k-th index i, the remaining indices in
    row-major order.
    """
    _check_mode(k, X.order)
    a = np.moveaxis(X.coords, k, 0)
    return TangentTensor(X.base, a.reshape(a.shape[0], -1, a.shape[-1]))


def fold(X: TangentTensor, k: int, shape) -> TangentTensor:
    """Inverse of :func:`unfold` for a tensor of the given shape."""
    shape = tuple(shape)
    _check_mode(k, len(shape))
    rest = shape[:k] + shape[k + 1:]
    a = X.coords.reshape((shape[k],) + rest + X.coords.shape[-1:])
    return TangentTensor(X.base, np.moveaxis(a, 0, k))


def mode_product(a, m, k):
    """Array-level mode-k product; the trailing coordinate axis is untouched."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[1] != a.shape[k]:
        raise ShapeMismatch(f"matrix of shape {m.shape} cannot act on mode {k} of size {a.shape[k]}")
    return np.moveaxis(np.tensordot(m, a, axes=(1, k)), 0, k)


def mode_k_product(X: TangentTensor, M, k: int) -> TangentTensor:
    """(X x_k M)[..., j, ...] = sum_s X[..., s, ...] M[j, s]."""
    _check_mode(k, X.order)
    return TangentTensor(X.base, mode_product(X.coords, M, k))


def multi_mode_product(X: TangentTensor, mats, modes=None) -> TangentTensor:
    mats = list(mats)
    modes = list(range(len(mats))) if modes is None else list(modes)
    if len(modes) != len(mats):
        raise ValidationError("need one mode per matrix")
    a = X.coords
    for m, k in zip(mats, modes):
        _check_mode(k, X.order)
        a = mode_product(a, m, k)
    return TangentTensor(X.base, a)


def flat_index(multi, shape) -> int:
    return int(np.ravel_multi_index(tuple(multi), tuple(shape)))


def multi_index(flat, shape) -> tuple:
    return tuple(int(i) for i in np.unravel_index(int(flat), tuple(shape)))
