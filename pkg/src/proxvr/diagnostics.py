"""Verification oracles independent of the algorithms.

These routines read exact population gradients (``problem.mean_gradient``)
even for streaming problems: they are checks, not algorithm steps.  Any
gradient they use is billed to ``counters.diag_sfo`` when counters are
passed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractViolation, check_vector
from .estimators import make_rng


def default_fd_step(x):
    return 1e-5 * (1.0 + float(np.linalg.norm(x)))


def _grad(problem, x, counters):
    if counters is not None:
        counters.diag_sfo += problem.n
    return problem.mean_gradient(x)


def check_gradient(problem, x, h_fd=None):
    """Max relative error between ``grad f(x)`` and central differences of ``f``.

    The error of coordinate ``j`` is ``|g_j - fd_j| / max(1, |g|_inf)``.
    """
    x = check_vector(x, problem.dim)
    if h_fd is None:
        h_fd = default_fd_step(x)
    if not h_fd > 0:
        raise ContractViolation("finite-difference step must be positive")
    g = problem.mean_gradient(x)
    fd = np.empty_like(g)
    for j in range(problem.dim):
        e = np.zeros_like(x)
        e[j] = h_fd
        fd[j] = (problem.f(x + e) - problem.f(x - e)) / (2.0 * h_fd)
    scale = max(1.0, float(np.max(np.abs(g))))
    return float(np.max(np.abs(g - fd))) / scale


def hessian_vector(problem, x, v, h_fd=None, counters=None):
    """Central-difference Hessian-vector product along ``v/|v|``, rescaled by ``|v|``."""
    v = np.asarray(v, dtype=np.float64)
    nv = float(np.linalg.norm(v))
    if not nv > 0:
        raise ContractViolation("direction must be nonzero")
    if h_fd is None:
        h_fd = default_fd_step(x)
    u = v / nv
    gp = _grad(problem, x + h_fd * u, counters)
    gm = _grad(problem, x - h_fd * u, counters)
    return (gp - gm) / (2.0 * h_fd) * nv


@dataclass
class EigEstimate:
    lambda_min_est: float
    residual: float
    iterations: int
    converged: bool
    vector: np.ndarray | None = None


def min_eigenvalue_estimate(problem, x, tol=1e-6, max_iters=10_000, margin=0.1,
                            seed=0, h_fd=None, counters=None):
    """Smallest Hessian eigenvalue at `x` by power iteration on ``cI - H``.

    ``c = L (1 + margin)`` upper-bounds the spectrum, so the dominant
    eigenvector of ``cI - H`` is the one for ``lambda_min(H)``.  Stops when
    the Rayleigh pair has residual ``|Hv - lambda v| <= tol``.
    """
    if not tol > 0:
        raise ContractViolation("tol must be positive")
    x = check_vector(x, problem.dim)
    c = problem.L * (1.0 + margin)
    rng = make_rng(seed)
    v = rng.standard_normal(problem.dim)
    v /= np.linalg.norm(v)
    lam, res = np.nan, np.inf
    for it in range(1, max_iters + 1):
        Hv = hessian_vector(problem, x, v, h_fd, counters)
        lam = float(v @ Hv)
        res = float(np.linalg.norm(Hv - lam * v))
        if res <= tol:
            return EigEstimate(lam, res, it, True, v)
        u = c * v - Hv
        v = u / np.linalg.norm(u)
    return EigEstimate(lam, res, max_iters, False, v)


def component_variance(problem, x):
    """Exact ``E_i |grad f_i(x) - grad f(x)|^2`` over the finite population."""
    G = problem.component_gradients(x)
    dev = G - G.mean(axis=0)
    return float(np.mean(np.sum(dev * dev, axis=1)))


def anchor_variance(problem, x, B):
    """Exact ``E |g_B - grad f(x)|^2`` for a with-replacement batch of size B."""
    return component_variance(problem, x) / B


def estimate_sigma_sq(problem, sample_points, draws=1000, rng=None):
    """Max over `sample_points` of the component-gradient variance.

    Exact enumeration for finite-sum problems; for streaming problems a
    Monte Carlo average over `draws` sampled components.
    """
    best = 0.0
    for x in sample_points:
        x = check_vector(x, problem.dim)
        if not problem.streaming:
            val = component_variance(problem, x)
        else:
            if rng is None:
                rng = make_rng(0)
            idx = rng.integers(0, problem.n, size=draws)
            G = np.stack([problem.component_gradient(x, int(i)) for i in idx])
            dev = G - G.mean(axis=0)
            val = float(np.sum(dev * dev) / (draws - 1))
        best = max(best, val)
    return best


def verify_local_minimum(problem, x, epsilon, delta, tol=None, counters=None):
    """Check ``|grad f(x)| <= epsilon`` and ``lambda_min(Hess f(x)) >= -delta``.

    Returns ``(verdict, EigEstimate)`` with verdict ``"yes"``, ``"no"`` or
    ``"undetermined"``.  The eigenvalue test uses a band of half-width
    ``delta/4`` around ``-delta``: ``lambda >= -3delta/4`` passes,
    ``lambda < -5delta/4`` fails, anything in between (or an unconverged
    eigen-solve) is undetermined.
    """
    x = check_vector(x, problem.dim)
    g = _grad(problem, x, counters)
    if float(np.linalg.norm(g)) > epsilon:
        return "no", None
    band = delta / 4.0
    est = min_eigenvalue_estimate(problem, x, tol=tol or max(band / 4.0, 1e-8),
                                  counters=counters)
    if not est.converged:
        return "undetermined", est
    if est.lambda_min_est >= -delta + band:
        return "yes", est
    if est.lambda_min_est < -delta - band:
        return "no", est
    return "undetermined", est
