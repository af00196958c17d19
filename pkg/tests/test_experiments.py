import math

import numpy as np
import pytest

from mantensor.correction import build_curvature_system, cc_loss, cc_thosvd
from mantensor.errors import HemisphereViolation, NotConverged
from mantensor.experiments import (
    barycentre,
    benchmark,
    gen_spd_1d,
    gen_spd_2d,
    gen_sphere_1d,
    make_rng,
    nearest_data_barycentre,
    relative_error,
    run_rank_sweep,
)
from mantensor.manifold import ManifoldDescriptor, ManifoldPoint
from mantensor.mvtensor import MvTensor, log_tensor, zeros
from mantensor.tucker import reconstruct, tangent_svd, thosvd, truncate


def test_make_rng_is_philox_and_deterministic():
    a = make_rng(42).standard_normal(5)
    b = make_rng(42).standard_normal(5)
    assert np.array_equal(a, b)
    assert isinstance(make_rng(0).bit_generator, np.random.Philox)
    g = make_rng(1)
    assert make_rng(g) is g


# base points


def test_barycentre_two_points():
    desc = ManifoldDescriptor.euclidean(2)
    T = MvTensor(desc, np.array([[0.0, 0.0], [2.0, 4.0]]))
    assert np.allclose(barycentre(T).coords, [1.0, 2.0])
    desc = ManifoldDescriptor.spd(3)
    a = np.diag([1.0, 2.0, 3.0])
    b = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 0.7]])
    T = MvTensor(desc, np.stack([a.ravel(), b.ravel()]))
    p = barycentre(T)
    m = desc.manifold
    assert abs(m.dist(p.coords, a.ravel()) - m.dist(p.coords, b.ravel())) <= 1e-9
    assert np.isclose(2 * m.dist(p.coords, a.ravel()), m.dist(a.ravel(), b.ravel()))


def test_barycentre_sphere_cluster_certificate():
    rng = np.random.default_rng(0)
    desc = ManifoldDescriptor.sphere(2)
    m = desc.manifold
    north = np.array([0, 0, 1.0])
    x = m.exp(north, m.from_coords(north, 0.3 * rng.standard_normal((20, 2))))
    T = MvTensor(desc, x)
    p = barycentre(T)
    grad = -2 * m.log(p.coords, x).sum(axis=0)
    scale = np.sqrt(np.sum(m.dist(p.coords, x) ** 2))
    assert np.linalg.norm(grad) <= 1e-7 * scale
    assert p.coords[2] > np.min(x[:, 2])


def test_barycentre_hemisphere_warning_and_failure():
    desc = ManifoldDescriptor.sphere(2)
    far = [0.0, np.sin(0.1), -np.cos(0.1)]
    T = MvTensor(desc, np.array([[0, 0, 1.0]] * 5 + [far]))
    with pytest.warns(HemisphereViolation):
        barycentre(T)
    with pytest.raises(NotConverged):
        barycentre(gen_spd_1d(n=20), max_iter=1)


def test_nearest_data_barycentre():
    desc = ManifoldDescriptor.spd(2)
    a = np.eye(2).ravel()
    T = MvTensor(desc, a[None])
    assert np.array_equal(nearest_data_barycentre(T).coords, a)
    desc = ManifoldDescriptor.euclidean(1)
    T = MvTensor(desc, np.array([[1.0], [-1.0]]))
    assert nearest_data_barycentre(T).coords[0] == 1.0
    T = gen_spd_1d(n=15, seed=3)
    m = T.manifold
    cost = [sum(m.dist(x, y) ** 2 for y in T.coords) for x in T.coords]
    assert np.array_equal(nearest_data_barycentre(T).coords, T.coords[int(np.argmin(cost))])


# generators


def test_gen_sphere_1d_clean_signal():
    T = gen_sphere_1d(noise_var=0.0)
    assert T.shape == (100,) and str(T.descriptor) == "S^6"
    assert np.array_equal(T.coords[0], [1, 0, 0, 0, 0, 0, 0])
    assert np.allclose(T.coords[25], [0, 1, 0, 0, 0, 0, 0], atol=1e-15)


def test_gen_sphere_1d_noise_level():
    clean = gen_sphere_1d(n=4000, noise_var=0.0)
    noisy = gen_sphere_1d(n=4000, noise_var=0.05, seed=5)
    d = clean.manifold.dist(clean.coords, noisy.coords)
    # distance is sigma * chi_6; E[chi_6] = sqrt(2) Gamma(3.5) / Gamma(3)
    want = math.sqrt(0.05) * math.sqrt(2) * math.gamma(3.5) / math.gamma(3)
    assert abs(d.mean() - want) <= 0.02 * want
    assert np.array_equal(gen_sphere_1d(seed=7).coords, gen_sphere_1d(seed=7).coords)
    assert not np.array_equal(gen_sphere_1d(seed=7).coords, gen_sphere_1d(seed=8).coords)


def test_gen_spd_1d_structure():
    T = gen_spd_1d(n=40, noise_var=0.0, seed=2)
    m = T.coords.reshape(40, 3, 3)
    assert np.allclose(m[:, 0, 0], 1) and np.allclose(m[:, 2, 2], 1)
    assert np.allclose(m - np.einsum("nii->ni", m)[:, :, None] * np.eye(3), 0)
    taus = np.log(m[:, 1, 1])
    assert 0.5 < taus.var() < 5.0
    eye = ManifoldPoint(T.descriptor, np.eye(3).ravel())
    _, sigma, R = tangent_svd(eye, T, 0)
    assert R == 1
    assert np.array_equal(gen_spd_1d(seed=4).coords, gen_spd_1d(seed=4).coords)


def test_gen_spd_2d_shape():
    T = gen_spd_2d((6, 5), seed=1)
    assert T.shape == (6, 5)


# metrics


def test_relative_error_examples():
    T = gen_spd_1d(n=20, seed=0)
    p = barycentre(T)
    assert relative_error(T, p, log_tensor(p, T)) <= 1e-20
    assert np.isclose(relative_error(T, p, zeros(p, T.shape)), 1.0)
    q = ManifoldPoint(ManifoldDescriptor.euclidean(2), [1.0, -2.0])
    const = MvTensor(q.descriptor, np.broadcast_to(q.coords, (3, 2)))
    assert relative_error(const, q, zeros(q, (3,))) == 0.0


def test_relative_error_euclidean_matches_svd():
    rng = np.random.default_rng(1)
    desc = ManifoldDescriptor.euclidean(4)
    data = rng.standard_normal((7, 4))
    p = ManifoldPoint(desc, np.zeros(4))
    f = truncate(thosvd(p, MvTensor(desc, data)), (1,))
    s = np.linalg.svd(data, compute_uv=False)
    assert np.isclose(relative_error(MvTensor(desc, data), p, reconstruct(f)), np.sum(s[1:] ** 2) / np.sum(s**2))


# sweeps


@pytest.fixture(scope="module")
def spd_case():
    T = gen_spd_1d(n=50, seed=0)
    return T, barycentre(T)


def test_sweep_cc_beats_thosvd_on_spd(spd_case):
    T, p = spd_case
    ranks = [1, 2, 3, 4, 5]
    th = run_rank_sweep("thosvd", T, p, ranks)
    cc = run_rank_sweep("cc", T, p, ranks)
    sys = build_curvature_system(p, T)
    for a, b, r in zip(th.rows, cc.rows, ranks):
        assert b.eps_rel <= a.eps_rel
        assert b.delta_rel is not None and abs(b.delta_rel) <= 0.5
        assert a.delta_rel is None
        assert b.lower_bound <= b.eps_rel + 1e-6
        f_cc = cc_loss(reconstruct(cc_thosvd(p, T, (r,))), T, sys)
        f_th = cc_loss(reconstruct(truncate(thosvd(p, T), (r,))), T, sys)
        assert f_cc <= f_th + 1e-10
    eps = [row.eps_rel for row in th.rows]
    assert np.all(np.diff(eps) <= 1e-10)


def test_sweep_full_rank_and_euclidean():
    T = gen_spd_1d(n=20, seed=1)
    p = barycentre(T)
    row = run_rank_sweep("thosvd", T, p, [6]).rows[0]
    assert row.eps_rel <= 1e-12
    rng = np.random.default_rng(2)
    desc = ManifoldDescriptor.euclidean(3)
    E = MvTensor(desc, rng.standard_normal((6, 5, 3)))
    q = barycentre(E)
    a = run_rank_sweep("thosvd", E, q, [1, 2])
    b = run_rank_sweep("cc", E, q, [1, 2])
    for x, y in zip(a.rows, b.rows):
        assert np.isclose(x.eps_rel, y.eps_rel, rtol=1e-10)


def test_sweep_records_failures_and_is_deterministic(spd_case):
    T, p = spd_case
    rep = run_rank_sweep("cc", T, p, [0, 1])
    assert rep.rows[0].error and math.isnan(rep.rows[0].eps_rel)
    assert rep.rows[1].error is None
    again = run_rank_sweep("cc", T, p, [0, 1])
    strip = lambda r: (r.method, r.rank, r.eps_rel, r.delta_rel, r.lower_bound, r.iterations)
    assert [strip(r) for r in rep.rows[1:]] == [strip(r) for r in again.rows[1:]]
    mc1 = run_rank_sweep("mc", T, p, [1], {"tau": 0.25})
    mc2 = run_rank_sweep("mc", T, p, [1], {"tau": 0.25})
    assert strip(mc1.rows[0]) == strip(mc2.rows[0])
    assert mc1.rows[0].iterations >= 1


def test_benchmark_single_sample(spd_case):
    T, p = spd_case
    s = benchmark("cc", T, p, 2, repeats=1)
    assert len(s.samples) == 1 and np.isfinite(s.median) and s.min == s.median
    with pytest.raises(ValueError):
        benchmark("cc", T, p, 2, repeats=0)
