"""Synthetic data, base points, error metrics, rank sweeps and timings."""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from .correction import cc_thosvd, discrepancy, system_from_coefficients, zero_delta_lower_bound
from .errors import HemisphereViolation, MantensorError, NotConverged, ValidationError
from .manifold import SPHERE, ManifoldDescriptor, ManifoldPoint
from .metriccorr import autotune_step, mc_thosvd
from .mvtensor import MvTensor, TangentTensor
from .tucker import log_coefficients, reconstruct, tangent_coefficients, thosvd, truncate

METHODS = ("thosvd", "cc", "mc")


def make_rng(seed=None):
    """Philox counter-based generator; a Generator passes through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def _initial_guess(T: MvTensor):
    m = T.manifold
    x = T.coords.reshape(-1, T.coords.shape[-1])
    if m.kind == SPHERE:
        mean = x.mean(axis=0)
        nrm = np.linalg.norm(mean)
        return mean / nrm if nrm > 1e-6 else x[0].copy()
    if m.kind == "spd":
        # log-Euclidean mean
        origin = m.origin()
        return m.exp(origin, m.log(origin, x).mean(axis=0))
    return x.mean(axis=0)


def barycentre(T: MvTensor, tol=1e-9, max_iter=200, init=None) -> ManifoldPoint:
    """Frechet mean by the fixed-point iteration p <- exp_p(mean_i log_p T_i)."""
    m = T.manifold
    x = T.coords.reshape(-1, T.coords.shape[-1])
    p = _initial_guess(T) if init is None else np.asarray(getattr(init, "coords", init), dtype=float)
    warned = False
    for _ in range(max_iter):
        if m.kind == SPHERE and not warned and np.any(m.dist(p, x) > 0.75 * np.pi):
            warnings.warn("data leave the hemisphere around the current mean estimate", HemisphereViolation, stacklevel=2)
            warned = True
        step = m.log(p, x).mean(axis=0)
        size = float(m.norm(p, step))
        p = m.exp(p, step)
        if size < tol:
            return ManifoldPoint(T.descriptor, p)
    raise NotConverged(f"barycentre step still {size:.3g} after {max_iter} iterations")


def nearest_data_barycentre(T: MvTensor) -> ManifoldPoint:
    """Data entry minimizing the sum of squared distances; lowest flat index wins ties."""
    m = T.manifold
    x = T.coords.reshape(-1, T.coords.shape[-1])
    cost = np.array([np.sum(m.dist(xi, x) ** 2) for xi in x])
    return ManifoldPoint(T.descriptor, x[int(np.argmin(cost))])


def gen_sphere_1d(n=100, noise_var=0.05, seed=0) -> MvTensor:
    """Noisy great circle on S^6: exp at (cos t_i, sin t_i, 0, ..., 0) of Gaussian noise."""
    desc = ManifoldDescriptor.sphere(6)
    t = 2.0 * np.pi * np.arange(n) / n
    clean = np.zeros((n, 7))
    clean[:, 0] = np.cos(t)
    clean[:, 1] = np.sin(t)
    if noise_var == 0:
        return MvTensor(desc, clean)
    m = desc.manifold
    eta = m.random_tangent(clean, noise_var, make_rng(seed))
    return MvTensor(desc, m.exp(clean, eta))


def gen_spd_1d(n=100, tau_var=2.0, noise_var=0.05, seed=0) -> MvTensor:
    """diag(1, e^tau_i, 1) with tau_i ~ N(0, tau_var), perturbed by Gaussian tangent noise."""
    desc = ManifoldDescriptor.spd(3)
    rng = make_rng(seed)
    taus = rng.normal(0.0, np.sqrt(tau_var), size=n)
    clean = np.zeros((n, 3, 3))
    clean[:, 0, 0] = 1.0
    clean[:, 1, 1] = np.exp(taus)
    clean[:, 2, 2] = 1.0
    clean = clean.reshape(n, 9)
    if noise_var == 0:
        return MvTensor(desc, clean)
    m = desc.manifold
    eta = m.random_tangent(clean, noise_var, rng)
    return MvTensor(desc, m.exp(clean, eta))


def gen_spd_2d(shape=(20, 20), tau_var=2.0, noise_var=0.05, seed=0) -> MvTensor:
    """Order-2 SPD(3) field diag(e^a_i, e^b_j, 1) with Gaussian a, b, plus tangent noise."""
    desc = ManifoldDescriptor.spd(3)
    rng = make_rng(seed)
    a = rng.normal(0.0, np.sqrt(tau_var), size=shape[0])
    b = rng.normal(0.0, np.sqrt(tau_var), size=shape[1])
    clean = np.zeros(tuple(shape) + (3, 3))
    clean[..., 0, 0] = np.exp(a)[:, None]
    clean[..., 1, 1] = np.exp(b)[None, :]
    clean[..., 2, 2] = 1.0
    clean = clean.reshape(tuple(shape) + (9,))
    m = desc.manifold
    eta = m.random_tangent(clean, noise_var, rng)
    return MvTensor(desc, m.exp(clean, eta))


def relative_error(T: MvTensor, p: ManifoldPoint, Xi: TangentTensor) -> float:
    """d(T, exp_p Xi)^2 / d(T, p)^2, with 0/0 taken as 0."""
    m = T.manifold
    num = float(np.sum(m.dist(T.coords, m.exp(p.coords, Xi.coords)) ** 2))
    den = float(np.sum(m.dist(T.coords, p.coords) ** 2))
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


def approximate(method, p: ManifoldPoint, T: MvTensor, r, tau=None, grad_tol_rel=1e-2, max_iter=1000):
    """Run one method; returns (TuckerFactors, iterations or None)."""
    if method == "thosvd":
        return truncate(thosvd(p, T), r), None
    if method == "cc":
        return cc_thosvd(p, T, r), None
    if method == "mc":
        if tau is None or tau == "auto":
            tau = autotune_step(p, T, r)
        f, trace = mc_thosvd(p, T, r, tau, grad_tol_rel=grad_tol_rel, max_iter=max_iter)
        return f, trace.iterations
    raise ValidationError(f"unknown method {method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class SweepRow:
    method: str
    rank: tuple
    eps_rel: float
    delta_rel: Optional[float]
    lower_bound: float
    wall_time: Optional[float]
    iterations: Optional[int]
    error: Optional[str] = None


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def _as_rank(r, order):
    r = tuple(int(x) for x in np.atleast_1d(r))
    if len(r) == 1 and order > 1:
        r = r * order
    return r


class _SweepContext:
    """Rank-independent quantities shared by every row of a sweep."""

    def __init__(self, T: MvTensor, p: ManifoldPoint):
        m = T.manifold
        self.logs = log_coefficients(p, T)
        self.den = float(np.sum(m.dist(T.coords, p.coords) ** 2))
        self.sys = system_from_coefficients(p, self.logs)
        self.full = thosvd(p, T)


def evaluate_factors(method, T: MvTensor, p: ManifoldPoint, f, wall=None, iterations=None, ctx=None) -> SweepRow:
    """Report row for a computed approximation.

    The lower bound is beta(kappa_max)^2 times the naive truncation error of
    the same rank, divided by d(T, p)^2 so that it is comparable to eps_rel.
    """
    ctx = ctx or _SweepContext(T, p)
    r = f.core.shape
    Xi = reconstruct(f)
    eps = relative_error(T, p, Xi)
    naive = float(np.sum((tangent_coefficients(reconstruct(truncate(ctx.full, r))) - ctx.logs) ** 2))
    lb = zero_delta_lower_bound(ctx.sys.kappa_max, naive) / ctx.den if ctx.den > 0 else 0.0
    delta = discrepancy(T, p, Xi, ctx.sys)[1] if method == "cc" else None
    if delta is not None and abs(delta) < 1e-3 and lb > eps + 1e-6:
        warnings.warn(f"rank {r}: lower bound {lb:.6g} exceeds eps_rel {eps:.6g}", RuntimeWarning, stacklevel=2)
    return SweepRow(method, r, eps, delta, lb, wall, iterations)


def run_rank_sweep(method, T: MvTensor, p: ManifoldPoint, ranks, mc_options=None, metadata=None) -> SweepReport:
    """One row per rank with eps_rel, delta_rel (cc only), relative lower bound and timing.

    Failing ranks are recorded with NaN values and the error message.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; expected one of {METHODS}")
    mc_options = dict(mc_options or {})
    ctx = _SweepContext(T, p)
    meta = {"manifold": str(T.descriptor), "shape": T.shape, "method": method}
    meta.update(metadata or {})
    report = SweepReport(metadata=meta)
    for r in ranks:
        r = _as_rank(r, T.order)
        try:
            t0 = time.perf_counter()
            f, iters = approximate(method, p, T, r, **mc_options)
            wall = time.perf_counter() - t0
            report.rows.append(evaluate_factors(method, T, p, f, wall, iters, ctx))
        except MantensorError as exc:
            report.rows.append(SweepRow(method, r, float("nan"), None, float("nan"), None, None, str(exc)))
    return report


@dataclass(frozen=True)
class BenchStats:
    median: float
    min: float
    samples: tuple


def benchmark(method, T: MvTensor, p: ManifoldPoint, rank, repeats=10, mc_options=None, warmup=True) -> BenchStats:
    """Wall-clock statistics of the full algorithm, pinned to one BLAS thread."""
    if repeats < 1:
        raise ValidationError("repeats must be at least 1")
    r = _as_rank(rank, T.order)
    mc_options = dict(mc_options or {})
    if method == "mc" and mc_options.get("tau") in (None, "auto"):
        mc_options["tau"] = autotune_step(p, T, r)
    samples = []
    with threadpool_limits(limits=1):
        if warmup:
            approximate(method, p, T, r, **mc_options)
        for _ in range(repeats):
            t0 = time.perf_counter()
            approximate(method, p, T, r, **mc_options)
            samples.append(time.perf_counter() - t0)
    return BenchStats(float(np.median(samples)), float(np.min(samples)), tuple(samples))
