import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import DESCRIPTORS, random_point
from mantensor.errors import RankClampWarning, ValidationError
from mantensor.manifold import ManifoldDescriptor, ManifoldPoint
from mantensor.mvtensor import MvTensor, TangentTensor, constant, log_tensor, tangent_norm, unfold
from mantensor.tucker import (
    gram_matrix,
    hosvd_coefficients,
    log_coefficients,
    reconstruct,
    tangent_svd,
    thosvd,
    truncate,
)


def random_data(desc, shape, rng, scale=0.6):
    p = random_point(desc, rng)
    m = desc.manifold
    v = m.from_coords(np.broadcast_to(p, shape + p.shape), scale * rng.standard_normal(shape + (desc.intrinsic_dim,)))
    return ManifoldPoint(desc, p), MvTensor(desc, m.exp(p, v))


def random_orthogonal(d, rng):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def test_gram_matrix_examples(desc):
    rng = np.random.default_rng(0)
    p = ManifoldPoint(desc, random_point(desc, rng))
    X = unfold(log_tensor(p, constant(p, (3, 2))), 0)
    assert np.allclose(gram_matrix(p, X), 0.0)
    m = desc.manifold
    basis = m.basis(p.coords)
    rows = TangentTensor(p, basis[:, None, :])
    assert np.allclose(gram_matrix(p, rows), np.eye(desc.intrinsic_dim), atol=1e-10)


def test_gram_matrix_basis_independent(desc):
    rng = np.random.default_rng(1)
    p, T = random_data(desc, (4, 3), rng)
    m = desc.manifold
    X = unfold(log_tensor(p, T), 1)
    g = gram_matrix(p, X)
    # oracle 1: metric evaluated directly on embedded coordinates
    emb = X.coords
    direct = np.einsum("iax,jax->ij", m.coords(p.coords, emb), m.coords(p.coords, emb))
    direct2 = np.array([[sum(m.inner(p.coords, emb[i, a], emb[j, a]) for a in range(emb.shape[1])) for j in range(3)] for i in range(3)])
    assert np.allclose(g, direct2, atol=1e-10)
    # oracle 2: coordinates in a rotated orthonormal basis
    q = random_orthogonal(desc.intrinsic_dim, rng)
    c = m.coords(p.coords, emb) @ q.T
    rotated = np.einsum("iax,jax->ij", c, c)
    assert np.allclose(g, rotated, atol=1e-10)
    assert np.allclose(g, g.T, atol=1e-12)
    assert np.linalg.eigvalsh(g)[0] >= -1e-10


def test_tangent_svd_constant_tensor(desc):
    rng = np.random.default_rng(2)
    p = ManifoldPoint(desc, random_point(desc, rng))
    m = desc.manifold
    v = m.from_coords(p.coords, 0.4 * rng.standard_normal(desc.intrinsic_dim))
    x = m.exp(p.coords, v)
    T = MvTensor(desc, np.broadcast_to(x, (3, 4) + x.shape))
    vn = m.norm(p.coords, v)
    # the Gram matrix is (prod of the other dims) |v|^2 times the all-ones
    # matrix of side d_k, so sigma_1^2 = d_k * prod(others) * |v|^2
    for k in (0, 1):
        U, sigma, R = tangent_svd(p, T, k)
        assert R == 1
        assert np.isclose(sigma[0], np.sqrt(12) * vn, rtol=1e-10)
        assert np.allclose(np.abs(U[:, 0]), 1 / np.sqrt(T.shape[k]))
    U, sigma, R = tangent_svd(p, constant(p, (3, 4)), 0)
    assert R == 0 and U.shape == (3, 1)


def test_tangent_svd_euclidean_matches_dense_svd():
    rng = np.random.default_rng(3)
    desc = ManifoldDescriptor.euclidean(5)
    data = rng.standard_normal((6, 5))
    center = rng.standard_normal(5)
    p = ManifoldPoint(desc, center)
    U, sigma, R = tangent_svd(p, MvTensor(desc, data), 0)
    u_ref, s_ref, _ = np.linalg.svd(data - center)
    assert R == 5
    assert np.allclose(sigma, s_ref[:5], rtol=1e-10)
    # columns agree up to sign
    assert np.allclose(np.abs(np.sum(U * u_ref[:, :5], axis=0)), 1.0, atol=1e-9)


def test_thosvd_full_reconstruction():
    rng = np.random.default_rng(4)
    p, T = random_data(ManifoldDescriptor.sphere(3), (4, 3), rng)
    f = thosvd(p, T)
    X = log_tensor(p, T)
    assert np.allclose(reconstruct(f).coords, X.coords, atol=1e-9)
    for u in f.factors:
        assert np.allclose(u.T @ u, np.eye(u.shape[1]), atol=1e-9)
    for s in f.singular_values:
        assert np.all(np.diff(s) <= 1e-12) and np.all(s >= 0)


def test_thosvd_detects_rank_one_one():
    desc = ManifoldDescriptor.spd(3)
    m = desc.manifold
    eye = np.eye(3).ravel()
    a = np.array([0.3, -0.7, 1.1, 0.2])
    b = np.array([0.5, 1.0, -0.4])
    direction = np.array([[0.2, 0.1, 0.0], [0.1, -0.5, 0.3], [0.0, 0.3, 0.9]]).ravel()
    x = m.exp(eye, a[:, None, None] * b[None, :, None] * direction)
    f = thosvd(ManifoldPoint(desc, eye), MvTensor(desc, x))
    assert f.ranks == (1, 1)


def test_truncate_rules():
    rng = np.random.default_rng(5)
    p, T = random_data(DESCRIPTORS["spd"], (4, 3), rng)
    f = thosvd(p, T)
    same = truncate(f, f.ranks)
    assert np.allclose(reconstruct(same).coords, reconstruct(f).coords)
    with pytest.raises(ValidationError):
        truncate(f, (0, 1))
    with pytest.warns(RankClampWarning):
        g = truncate(f, (9, 1))
    assert g.core.shape == (4, 1)
    one = truncate(thosvd(*random_data(DESCRIPTORS["sphere"], (5,), rng)), (1,))
    assert one.factors[0].shape == (5, 1)


def test_reconstruct_zero_core():
    rng = np.random.default_rng(6)
    p, T = random_data(DESCRIPTORS["euclidean"], (3, 2), rng)
    f = thosvd(p, T)
    zero = type(f)(TangentTensor(p, np.zeros_like(f.core.coords)), f.factors, f.singular_values, f.ranks)
    assert np.allclose(reconstruct(zero).coords, 0)


def test_reconstruct_order_one_rank_one_pattern():
    rng = np.random.default_rng(7)
    desc = ManifoldDescriptor.spd(2)
    p, T = random_data(desc, (5,), rng)
    f = truncate(thosvd(p, T), (1,))
    m = desc.manifold
    core_c = m.coords(p.coords, f.core.coords)[0]
    want = np.outer(f.factors[0][:, 0], core_c)
    assert np.allclose(m.coords(p.coords, reconstruct(f).coords), want)
    assert np.isclose(np.linalg.norm(core_c), f.singular_values[0][0])


def test_order_one_eckart_young_brute_force():
    rng = np.random.default_rng(8)
    for desc in DESCRIPTORS.values():
        p, T = random_data(desc, (6,), rng)
        X = log_tensor(p, T)
        f = thosvd(p, T)
        c = log_coefficients(p, T)
        s_ref = np.linalg.svd(c, compute_uv=False)
        for r in range(1, min(6, desc.intrinsic_dim) + 1):
            err = tangent_norm(reconstruct(truncate(f, (r,))) - X)
            assert np.isclose(err, np.sqrt(np.sum(s_ref[r:] ** 2)), atol=1e-10)
            # no choice of r rows from an orthonormal row basis does better
            q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
            for rows in itertools.combinations(range(6), r):
                u = q[:, rows]
                other = np.linalg.norm(c - u @ (u.T @ c))
                assert err <= other + 1e-10


def test_core_all_orthogonality():
    rng = np.random.default_rng(9)
    p, T = random_data(DESCRIPTORS["spd"], (4, 3, 2), rng)
    core, factors, sigmas, _ = hosvd_coefficients(log_coefficients(p, T))
    for k in range(3):
        a = np.moveaxis(core, k, 0).reshape(core.shape[k], -1)
        g = a @ a.T
        assert np.allclose(g - np.diag(np.diag(g)), 0, atol=1e-9)
        assert np.allclose(np.sqrt(np.diag(g))[: len(sigmas[k])], sigmas[k], atol=1e-9)


@given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(DESCRIPTORS)))
def test_factors_basis_independent(seed, name):
    desc = DESCRIPTORS[name]
    rng = np.random.default_rng(seed)
    p, T = random_data(desc, (4, 3), rng)
    c = log_coefficients(p, T)
    q = random_orthogonal(desc.intrinsic_dim, rng)
    _, f1, s1, r1 = hosvd_coefficients(c)
    _, f2, s2, r2 = hosvd_coefficients(c @ q.T)
    assert r1 == r2
    for a, b, x, y in zip(f1, f2, s1, s2):
        assert np.allclose(x, y, atol=1e-9)
        assert np.allclose(np.abs(np.sum(a * b, axis=0)), 1.0, atol=1e-6) or not np.all(np.diff(x) < -1e-6)
