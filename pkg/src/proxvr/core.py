"""Problem abstraction, oracle counters and run traces shared by the drivers.

A problem is ``Phi(x) = f(x) + h(x)`` where ``f = (1/n) sum_i f_i`` is smooth
and ``h`` is a convex term with a closed-form proximal map (see
:mod:`proxvr.prox`).  Vectors are plain 1-D ``float64`` numpy arrays.

Oracle accounting follows two conventions at once.  ``sfo`` counts every
component gradient that is actually evaluated, so a variance-reduced inner
step with minibatch ``b`` costs ``2b``.  ``sfo_paper_convention`` charges that
same step ``b``, so that a complete run of ``S`` epochs costs exactly
``S*B + S*m*b``.  Function values are free; they are tallied in ``f_evals``
for information only.  Gradients spent on diagnostics (gradient-mapping
norms in traces, certification) go to ``diag_sfo`` and never touch the
first two counters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class ContractViolation(ValueError):
    """An argument broke a documented precondition."""


class UnsupportedOperation(RuntimeError):
    """The operation is not defined for this problem or mode."""


class NumericOverflowError(ArithmeticError):
    """A computation produced a non-finite value."""


class ConfigurationError(ValueError):
    """A problem or parameter set is missing something it needs."""


def check_vector(x, dim=None, name="x"):
    """Return `x` as a finite 1-D float64 array, checking its length."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ContractViolation(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ContractViolation(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} has non-finite entries")
    return arr


@dataclass
class OracleCounters:
    sfo: int = 0
    sfo_paper_convention: int = 0
    po: int = 0
    diag_sfo: int = 0
    f_evals: int = 0

    def charge(self, raw, convention=None):
        self.sfo += raw
        self.sfo_paper_convention += raw if convention is None else convention

    def snapshot(self):
        return (self.sfo, self.sfo_paper_convention, self.po)


class TraceRecord(NamedTuple):
    iter: int
    epoch: int
    super_epoch: bool
    phi: float
    grad_map_norm: float
    sfo: int
    sfo_paper: int
    po: int
    wall_ms: float


@dataclass
class RunTrace:
    """Everything a driver run leaves behind.

    ``best_x``/``best_grad_map_norm`` are the iterate with the smallest
    evaluated gradient-mapping norm; ``sampled_x`` is an iterate drawn
    uniformly from the whole run (reservoir sampling on its own RNG stream).
    ``events`` logs super-epoch transitions for the saddle-escaping driver.
    """

    algorithm: str
    records: list = field(default_factory=list)
    final_x: np.ndarray | None = None
    best_x: np.ndarray | None = None
    best_grad_map_norm: float = float("inf")
    sampled_x: np.ndarray | None = None
    counters: OracleCounters = field(default_factory=OracleCounters)
    iterations: int = 0
    epochs: int = 0
    events: list = field(default_factory=list)
    verdict: str | None = None
    lambda_min_est: float | None = None

    def hitting_iter(self, eps):
        """First recorded iteration whose gradient-mapping norm is <= eps."""
        for rec in self.records:
            if rec.grad_map_norm <= eps:
                return rec.iter
        return None


class CompositeProblem:
    """Smooth finite sum ``f`` plus proximable ``h``.

    Subclasses provide ``component_values`` and ``component_gradient``; the
    batched hooks below have generic (slow) defaults that concrete problem
    families override with vectorised or compiled versions.

    Parameters
    ----------
    n : int
        Number of components.  In streaming mode this is the size of the
        population the sampler draws from; exact averages over it are not
        available to the algorithms.
    dim : int
    h : ProxSpec
    L : float
        Average-smoothness constant, ``E_i |grad f_i(x) - grad f_i(y)|^2 <=
        L^2 |x - y|^2``.
    mu, sigma, phi_star, rho : float, optional
        PL constant, gradient-variance bound, optimal value of ``Phi`` and
        Hessian-Lipschitz constant, when known.
    streaming : bool
        Online mode: only sampled batches are available.
    """

    kind = "generic"

    def __init__(self, n, dim, h, L, mu=None, sigma=None, phi_star=None,
                 rho=None, streaming=False):
        if int(n) < 1:
            raise ContractViolation("n must be a positive integer")
        if int(dim) < 1:
            raise ContractViolation("dim must be a positive integer")
        if not L > 0:
            raise ContractViolation("L must be positive")
        if mu is not None and not (0 < mu <= L):
            raise ContractViolation("mu must satisfy 0 < mu <= L")
        if sigma is not None and not sigma >= 0:
            raise ContractViolation("sigma must be nonnegative")
        if rho is not None and not rho > 0:
            raise ContractViolation("rho must be positive")
        self.n = int(n)
        self.dim = int(dim)
        self.h = h
        self.L = float(L)
        self.mu = None if mu is None else float(mu)
        self.sigma = None if sigma is None else float(sigma)
        self.phi_star = None if phi_star is None else float(phi_star)
        self.x_star = None
        self.rho = None if rho is None else float(rho)
        self.streaming = bool(streaming)

    # -- hooks -----------------------------------------------------------
    def component_values(self, x):
        """Array of ``f_i(x)`` for every component."""
        raise NotImplementedError

    def component_gradient(self, x, i):
        raise NotImplementedError

    def component_gradients(self, x):
        """``(n, dim)`` array of all component gradients (reference path)."""
        return np.stack([self.component_gradient(x, i) for i in range(self.n)])

    def mean_gradient(self, x):
        return self.component_gradients(x).mean(axis=0)

    def batch_gradient(self, x, idx):
        g = np.zeros(self.dim)
        for i in idx:
            g += self.component_gradient(x, int(i))
        return g / len(idx)

    def batch_gradient_diff(self, x, z, idx):
        g = np.zeros(self.dim)
        for i in idx:
            i = int(i)
            g += self.component_gradient(x, i) - self.component_gradient(z, i)
        return g / len(idx)

    def f(self, x):
        return float(np.mean(self.component_values(x)))

    # -- conveniences ----------------------------------------------------
    @property
    def smooth(self):
        from .prox import Zero

        return isinstance(self.h, Zero)

    def describe(self):
        return {
            "kind": self.kind, "n": self.n, "dim": self.dim, "L": self.L,
            "mu": self.mu, "sigma": self.sigma, "phi_star": self.phi_star,
            "rho": self.rho, "streaming": self.streaming,
        }


class FunctionalProblem(CompositeProblem):
    """Problem built from per-component Python callables.

    Handy for tiny hand-made instances; every oracle call goes through
    Python, so it is slow.
    """

    def __init__(self, values, grads, dim, h=None, L=1.0, **kw):
        from .prox import Zero

        if len(values) != len(grads):
            raise ContractViolation("need one gradient per component value")
        super().__init__(len(values), dim, Zero() if h is None else h, L, **kw)
        self._values = list(values)
        self._grads = list(grads)

    def component_values(self, x):
        return np.array([float(v(x)) for v in self._values])

    def component_gradient(self, x, i):
        return np.asarray(self._grads[i](x), dtype=np.float64).reshape(self.dim)


# -- counted oracle operations -------------------------------------------

def evaluate_phi(problem, x):
    """Objective value ``f(x) + h(x)``; free of oracle charges.

    Indicator terms contribute ``+inf`` outside their set.  A non-finite
    smooth part raises :class:`NumericOverflowError`.
    """
    x = check_vector(x, problem.dim)
    fx = problem.f(x)
    if not np.isfinite(fx):
        raise NumericOverflowError(f"f(x) evaluated to {fx}")
    return fx + problem.h.value(x)


def full_gradient(problem, x, counters=None):
    """Exact ``(1/n) sum_i grad f_i(x)``; charges ``n`` to both SFO counters."""
    if problem.streaming:
        raise UnsupportedOperation("full gradient is unavailable in streaming mode")
    g = problem.mean_gradient(x)
    if counters is not None:
        counters.charge(problem.n)
    return g


def component_gradient_batch(problem, x, indices, counters=None):
    """Average of ``grad f_i(x)`` over `indices` (repeats allowed).

    ``indices=None`` means the whole index set and takes the same code path
    as :func:`full_gradient`.
    """
    if indices is None:
        if problem.streaming:
            raise UnsupportedOperation("full batch is unavailable in streaming mode")
        g = problem.mean_gradient(x)
        size = problem.n
    else:
        size = len(indices)
        if size == 0:
            raise ContractViolation("empty index list")
        g = problem.batch_gradient(x, indices)
    if counters is not None:
        counters.charge(size)
    return g
