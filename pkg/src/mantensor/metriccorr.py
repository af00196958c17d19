"""Metric-corrected tHOSVD: gradient descent on the exact geodesic error.

The core coefficients V (shape r + (d,)) parameterize the approximation
exp_p(V x U x phi). The loss is the squared product-manifold distance to
the data and its gradient uses the closed-form adjoint of the differential
of exp_p on a symmetric space.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .correction import beta
from .errors import CutLocusError, Diverged, InvariantViolation, NoStableStep, ValidationError
from .manifold import ManifoldPoint
from .mvtensor import MvTensor, TangentTensor
from .tucker import (
    TuckerFactors,
    clamp_ranks,
    hosvd_coefficients,
    log_coefficients,
    project_coefficients,
    reconstruct_coefficients,
)

DIVERGENCE_FACTOR = 10.0
STEP_CANDIDATES = tuple(2.0**-k for k in range(21))
TRIAL_ITERS = 20
# gradients below this (relative to the core norm) are roundoff at an optimum
GRAD_FLOOR = 1e-12


def _phi_array(p: ManifoldPoint, phi):
    if phi is None:
        return p.manifold.basis(p.coords)
    if isinstance(phi, (list, tuple)):
        return np.stack([np.asarray(getattr(v, "coords", v)) for v in phi])
    return np.asarray(phi, dtype=float)


class _Problem:
    def __init__(self, p: ManifoldPoint, T: MvTensor, U, phi=None):
        if p.descriptor != T.descriptor:
            raise ValidationError("base point and data live on different manifolds")
        if len(U) != T.order or any(u.shape[0] != n for u, n in zip(U, T.shape)):
            raise ValidationError("factor matrices do not match the data shape")
        self.p = p
        self.m = p.manifold
        self.T = T.coords
        self.U = [np.asarray(u, dtype=float) for u in U]
        self.phi = _phi_array(p, phi)
        self.core_shape = tuple(u.shape[1] for u in self.U) + (self.m.dim,)

    def embed(self, V):
        V = np.asarray(V, dtype=float)
        if V.shape != self.core_shape:
            raise ValidationError(f"core must have shape {self.core_shape}, got {V.shape}")
        return reconstruct_coefficients(V, self.U) @ self.phi

    def loss(self, V):
        Y = self.m.exp(self.p.coords, self.embed(V))
        return float(np.sum(self.m.dist(Y, self.T) ** 2))

    def loss_and_grad(self, V):
        m, p = self.m, self.p.coords
        xi = self.embed(V)
        Y = m.exp(p, xi)
        L = m.log(Y, self.T)
        loss = float(np.sum(m.inner(Y, L, L)))
        lam, psi = m.eigenbasis(p, xi)
        psi_y = m.transport(p, Y[..., None, :], psi)
        c = beta(lam) * m.inner(Y[..., None, :], L[..., None, :], psi_y)
        psi_phi = m.inner(p, psi[..., :, None, :], self.phi)
        g = np.einsum("...b,...ba->...a", c, psi_phi)
        return loss, -2.0 * project_coefficients(g, self.U)


def _as_factors(U):
    return [np.asarray(u, dtype=float) for u in U]


def mc_loss(V, p: ManifoldPoint, T: MvTensor, U, phi=None) -> float:
    """d(T, exp_p(V x U x phi))^2."""
    return _Problem(p, T, _as_factors(U), phi).loss(V)


def mc_gradient(V, p: ManifoldPoint, T: MvTensor, U, phi=None):
    """Gradient of :func:`mc_loss` with respect to the core coefficients."""
    return _Problem(p, T, _as_factors(U), phi).loss_and_grad(V)[1]


@dataclass(frozen=True)
class McRecord:
    iteration: int
    loss: float
    grad_norm: float
    step: float


@dataclass
class McTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    final: np.ndarray = None

    @property
    def iterations(self):
        """Number of descent steps taken."""
        return max(len(self.records) - 1, 0)


def _initial(p, T, r):
    c = log_coefficients(p, T)
    core, factors, sigmas, ranks = hosvd_coefficients(c)
    r = clamp_ranks(factors, r)
    U = [u[:, :x] for u, x in zip(factors, r)]
    V0 = core[tuple(slice(0, x) for x in r)].copy()
    return U, V0, [s[:x].copy() for s, x in zip(sigmas, r)], ranks


def _step_eval(prob: _Problem, V, it):
    try:
        return prob.loss_and_grad(V)
    except (InvariantViolation, np.linalg.LinAlgError) as exc:
        # the iterate left the region where exp/log are representable
        raise Diverged(f"iterate became invalid at iteration {it}: {exc}") from exc


def _descend(prob: _Problem, V, tau, grad_tol_rel, max_iter, trace: McTrace):
    loss, grad = prob.loss_and_grad(V)
    l0 = loss
    g0 = np.linalg.norm(grad)
    floor = GRAD_FLOOR * max(1.0, float(np.linalg.norm(V)))
    best, best_loss = V.copy(), loss
    trace.records.append(McRecord(0, loss, float(g0), tau))
    if g0 <= floor:
        trace.converged = True
        return best
    for it in range(1, max_iter + 1):
        V = V - tau * grad
        loss, grad = _step_eval(prob, V, it)
        gn = float(np.linalg.norm(grad))
        trace.records.append(McRecord(it, loss, gn, tau))
        if not np.isfinite(loss) or not np.isfinite(gn) or loss > DIVERGENCE_FACTOR * l0:
            raise Diverged(f"loss {loss:.6g} exceeds {DIVERGENCE_FACTOR:g}x the initial {l0:.6g} at iteration {it}")
        if loss < best_loss:
            best, best_loss = V.copy(), loss
        if gn / g0 < grad_tol_rel or gn <= floor:
            trace.converged = True
            break
    return best


def mc_thosvd(p: ManifoldPoint, T: MvTensor, r, tau, grad_tol_rel=1e-2, max_iter=1000):
    """Fixed-step gradient descent on the core, started at the tHOSVD core.

    Returns (TuckerFactors, McTrace); the best iterate seen is kept.
    """
    if not tau > 0:
        raise ValidationError("step size must be positive")
    U, V0, sigmas, ranks = _initial(p, T, r)
    prob = _Problem(p, T, U)
    trace = McTrace()
    best = _descend(prob, V0, float(tau), grad_tol_rel, int(max_iter), trace)
    trace.final = best
    core = TangentTensor(p, best @ prob.phi)
    return TuckerFactors(core, U, sigmas, ranks), trace


def autotune_step(p: ManifoldPoint, T: MvTensor, r, candidates=STEP_CANDIDATES, trial_iters=TRIAL_ITERS):
    """Largest candidate step whose first iterations stay finite and bounded."""
    U, V0, _, _ = _initial(p, T, r)
    prob = _Problem(p, T, U)
    for tau in sorted(candidates, reverse=True):
        try:
            with np.errstate(all="ignore"):
                _descend(prob, V0, tau, 0.0, trial_iters, McTrace())
        except (Diverged, CutLocusError, InvariantViolation, np.linalg.LinAlgError):
            continue
        return tau
    raise NoStableStep("every candidate step size diverged")
