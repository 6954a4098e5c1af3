"""Built-in test problems with known constants.

All recipes are pure functions of their arguments: data are generated from
``make_rng(seed)``.

* quadratic_l1 -- least squares with a prescribed spectrum of the averaged
  Gram matrix, plus an optional l1 term.
* pl_quadratic -- noiseless least squares with known minimiser (PL when
  the spectrum is bounded away from zero).
* robust_regression -- bounded nonconvex loss ``t^2 / (1 + t^2)`` + l1.
* quartic_saddle -- ``1/2 x'Ax + beta/4 sum x_j^4`` with a strict saddle at
  the origin; smooth (``h = 0``).
* online -- wraps any finite-sum problem as a stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (CompositeProblem, ConfigurationError, UnsupportedOperation,
                   check_vector)
from .estimators import make_rng
from .prox import L1, Zero

LOSSES = {"square": kernels.LOSS_SQUARE, "robust": kernels.LOSS_ROBUST}


class GLMProblem(CompositeProblem):
    """``f_i(x) = loss(a_i.x - y_i)`` with ``loss`` square (``t^2/2``) or
    robust (``t^2/(1+t^2)``)."""

    def __init__(self, A, y, loss="square", h=None, L=None, kind="glm", **kw):
        A = np.ascontiguousarray(A, dtype=np.float64)
        if A.ndim != 2:
            raise ConfigurationError("design matrix must be 2-D")
        y = np.ascontiguousarray(y, dtype=np.float64).reshape(A.shape[0])
        self.loss = loss
        self._code = LOSSES[loss]
        if L is None:
            L = (1.0 if loss == "square" else 2.0) * float(np.max(np.sum(A * A, axis=1)))
        super().__init__(A.shape[0], A.shape[1], Zero() if h is None else h, L, **kw)
        self.A = A
        self.y = y
        self.kind = kind

    def _dloss(self, r):
        if self._code == kernels.LOSS_SQUARE:
            return r
        u = 1.0 + r * r
        return 2.0 * r / (u * u)

    def component_values(self, x):
        r = self.A @ x - self.y
        if self._code == kernels.LOSS_SQUARE:
            return 0.5 * r * r
        return r * r / (1.0 + r * r)

    def component_gradient(self, x, i):
        r = float(self.A[i] @ x - self.y[i])
        return self.A[i] * float(self._dloss(np.float64(r)))

    def component_gradients(self, x):
        return self.A * self._dloss(self.A @ x - self.y)[:, None]

    def mean_gradient(self, x):
        return (self._dloss(self.A @ x - self.y) @ self.A) / self.n

    def batch_gradient(self, x, idx):
        return kernels.glm_grad(self.A, self.y, x, idx, self._code)

    def batch_gradient_diff(self, x, z, idx):
        return kernels.glm_grad_diff(self.A, self.y, x, z, idx, self._code)


class QuarticSaddleProblem(CompositeProblem):
    """``f_i(x) = 1/2 x'(A + c(w_i w_i' - W))x + beta/4 sum_j x_j^4``.

    ``A = diag(-gamma, lam_2, ..., lam_d)`` and ``W`` is the average of the
    rank-one terms, so the components average back to ``A``.
    """

    kind = "quartic_saddle"

    def __init__(self, diag, w, c, beta, L, rho, radius, **kw):
        super().__init__(w.shape[0], w.shape[1], Zero(), L, rho=rho, **kw)
        self.diag = np.ascontiguousarray(diag, dtype=np.float64)
        self.w = np.ascontiguousarray(w, dtype=np.float64)
        self.c = float(c)
        self.beta = float(beta)
        self.radius = float(radius)
        self.W = (self.w.T @ self.w) / self.n
        self._zeros = np.zeros(self.n)

    @property
    def neg_eig(self):
        return -float(self.diag[0])

    def _shared_grad(self, x):
        return self.diag * x - self.c * (self.W @ x) + self.beta * x ** 3

    def component_values(self, x):
        quad = 0.5 * (x @ (self.diag * x)) - 0.5 * self.c * (x @ self.W @ x)
        return (quad + 0.25 * self.beta * np.sum(x ** 4)
                + 0.5 * self.c * (self.w @ x) ** 2)

    def component_gradient(self, x, i):
        return self._shared_grad(x) + self.c * self.w[i] * float(self.w[i] @ x)

    def component_gradients(self, x):
        return self._shared_grad(x)[None, :] + self.c * self.w * (self.w @ x)[:, None]

    def mean_gradient(self, x):
        return self._shared_grad(x) + self.c * (((self.w @ x) @ self.w) / self.n)

    def batch_gradient(self, x, idx):
        return self._shared_grad(x) + self.c * kernels.glm_grad(
            self.w, self._zeros, x, idx, kernels.LOSS_SQUARE)

    def batch_gradient_diff(self, x, z, idx):
        u = x - z
        shared = (self.diag * u - self.c * (self.W @ u)
                  + self.beta * (x ** 3 - z ** 3))
        return shared + self.c * kernels.glm_grad_diff(
            self.w, self._zeros, x, z, idx, kernels.LOSS_SQUARE)

    def hessian(self, x):
        """Exact Hessian of the mean ``f``."""
        H = np.diag(self.diag) - self.c * self.W + self.c * (self.w.T @ self.w) / self.n
        return H + np.diag(3.0 * self.beta * x ** 2)

    def local_minima(self):
        e = np.zeros(self.dim)
        e[0] = math.sqrt(self.neg_eig / self.beta)
        return e, -e


class StreamingProblem(CompositeProblem):
    """Online view of a finite-sum problem: algorithms only see sampled
    components; the population is the wrapped problem's index set."""

    def __init__(self, base, sigma=None):
        super().__init__(base.n, base.dim, base.h, base.L, mu=base.mu,
                         sigma=sigma if sigma is not None else base.sigma,
                         phi_star=base.phi_star, rho=base.rho, streaming=True)
        self.base = base
        self.kind = "online"

    def component_values(self, x):
        return self.base.component_values(x)

    def component_gradient(self, x, i):
        return self.base.component_gradient(x, i)

    def component_gradients(self, x):
        return self.base.component_gradients(x)

    def mean_gradient(self, x):
        return self.base.mean_gradient(x)

    def batch_gradient(self, x, idx):
        return self.base.batch_gradient(x, idx)

    def batch_gradient_diff(self, x, z, idx):
        return self.base.batch_gradient_diff(x, z, idx)

    def f(self, x):
        return self.base.f(x)


# -- recipes ----------------------------------------------------------------

def _spectral_design(rng, n, d, spectrum):
    lo, hi = (float(s) for s in spectrum)
    if not 0 <= lo <= hi:
        raise ConfigurationError("spectrum must satisfy 0 <= lo <= hi")
    if d == 1 and lo != hi:
        raise ConfigurationError("d = 1 admits a single eigenvalue; set lo == hi")
    if n < d:
        raise ConfigurationError(f"need n >= d to realise a prescribed spectrum (n={n}, d={d})")
    s = np.linspace(lo, hi, d)
    U, _ = np.linalg.qr(rng.standard_normal((n, d)))
    V, _ = np.linalg.qr(rng.standard_normal((d, d)))
    A = math.sqrt(n) * (U * np.sqrt(s)) @ V.T
    return A, s


def make_quadratic_l1(n, d, spectrum=(0.1, 1.0), l1_weight=0.0, seed=0, noise=0.1):
    """Least squares ``f_i = 1/2 (a_i.x - y_i)^2`` plus ``l1_weight * |x|_1``.

    The averaged Gram matrix ``A'A/n`` has eigenvalues evenly spaced over
    `spectrum`.  ``L = max_i |a_i|^2``.  With no l1 term and a positive
    spectrum the problem declares ``mu`` and its closed-form optimum.
    """
    rng = make_rng(seed)
    A, s = _spectral_design(rng, int(n), int(d), spectrum)
    x_true = rng.standard_normal(d)
    x_true[rng.random(d) < 0.5] = 0.0
    y = A @ x_true + noise * rng.standard_normal(n)
    h = L1(l1_weight) if l1_weight > 0 else Zero()
    prob = GLMProblem(A, y, "square", h, kind="quadratic_l1")
    if l1_weight == 0 and s[0] > 0:
        prob.mu = float(s[0])
        x_star = np.linalg.solve(A.T @ A, A.T @ y)
        prob.x_star = x_star
        prob.phi_star = prob.f(x_star)
    return prob


def make_pl_quadratic(n, d, spectrum=(0.5, 1.0), l1_weight=0.0, seed=0):
    """Noiseless least squares ``y = A c`` with minimiser ``c`` by construction.

    Without l1 the optimum is ``Phi* = f(c) = 0`` and ``mu`` is the smallest
    eigenvalue of ``A'A/n``.  With l1 the optimum is left to
    :func:`reference_optimum`.
    """
    rng = make_rng(seed)
    A, s = _spectral_design(rng, int(n), int(d), spectrum)
    if s[0] <= 0:
        raise ConfigurationError("pl_quadratic needs a positive spectrum")
    center = rng.standard_normal(d)
    prob = GLMProblem(A, A @ center, "square", L1(l1_weight) if l1_weight > 0 else Zero(),
                      kind="pl_quadratic")
    prob.center = center
    if l1_weight == 0:
        prob.mu = float(s[0])
        prob.x_star = center.copy()
        prob.phi_star = prob.f(center)
    return prob


def make_robust_regression(n, d, noise=0.1, outlier_frac=0.1, seed=0, l1_weight=0.01):
    """Regression with the bounded nonconvex loss ``t^2/(1+t^2)``.

    ``sup |loss''| = 2`` (attained at 0), so ``L = 2 max_i |a_i|^2``.
    A fraction `outlier_frac` of responses is replaced by gross outliers.
    """
    rng = make_rng(seed)
    A = rng.standard_normal((n, d)) / math.sqrt(d)
    x_true = rng.standard_normal(d)
    y = A @ x_true + noise * rng.standard_normal(n)
    bad = rng.random(n) < outlier_frac
    y[bad] = 10.0 * rng.standard_normal(int(bad.sum()))
    h = L1(l1_weight) if l1_weight > 0 else Zero()
    return GLMProblem(A, y, "robust", h, kind="robust_regression")


def make_quartic_saddle(n, d, neg_eig=1.0, quartic=1.0, seed=0, spectrum=(0.5, 1.0),
                        noise=0.5, radius=None):
    """Strict-saddle quartic, split into `n` stochastic components.

    ``f(x) = 1/2 x'Ax + beta/4 sum x_j^4`` with ``A = diag(-gamma, lam_2..lam_d)``
    (``lam_j`` evenly spaced over `spectrum`).  The origin is a strict saddle
    with ``lambda_min = -gamma``; the minimisers are ``+-sqrt(gamma/beta) e_1``
    with value ``-gamma^2/(4 beta)``.

    Quartics have no global Lipschitz constants, so ``L`` and ``rho`` are
    declared on the box ``|x_j| <= radius``.  The default radius is 1.1 times
    the coordinate bound of the sublevel set ``{f <= 0}`` (i.e. for runs
    started at the origin):
    ``x_1^2 <= 2 gamma / beta`` and ``x_j^2 <= gamma^2 / (2 beta lam_j)``.
    Then ``rho = 6 beta radius`` and
    ``L = max_i |A + c(w_i w_i' - W)| + 3 beta radius^2``.
    """
    if d < 2:
        raise ConfigurationError("quartic_saddle needs d >= 2")
    if not (neg_eig > 0 and quartic > 0):
        raise ConfigurationError("neg_eig and quartic must be positive")
    rng = make_rng(seed)
    lam = np.linspace(spectrum[0], spectrum[1], d - 1)
    if np.any(lam <= 0):
        raise ConfigurationError("positive eigenvalues must be > 0")
    diag = np.concatenate([[-neg_eig], lam])
    w = rng.standard_normal((n, d)) / math.sqrt(d)
    if radius is None:
        bound_sq = max(2.0 * neg_eig / quartic,
                       float(np.max(neg_eig ** 2 / (2.0 * quartic * lam))))
        radius = 1.1 * math.sqrt(bound_sq)
    W = (w.T @ w) / n
    base = np.diag(diag) - noise * W
    op = max(float(np.max(np.abs(np.linalg.eigvalsh(base + noise * np.outer(wi, wi)))))
             for wi in w)
    L = op + 3.0 * quartic * radius ** 2
    rho = 6.0 * quartic * radius
    prob = QuarticSaddleProblem(diag, w, noise, quartic, L, rho, radius)
    prob.phi_star = -neg_eig ** 2 / (4.0 * quartic)
    prob.x_star = prob.local_minima()[0]
    return prob


def make_online(base, sigma=None):
    return StreamingProblem(base, sigma=sigma)


@dataclass
class ProblemRecipe:
    """Serializable description of a built-in problem."""

    kind: str
    params: dict = field(default_factory=dict)

    def build(self):
        return build_problem(self.kind, **self.params)


_BUILDERS = {
    "quadratic_l1": make_quadratic_l1,
    "pl_quadratic": make_pl_quadratic,
    "robust_regression": make_robust_regression,
    "quartic_saddle": make_quartic_saddle,
}


def build_problem(kind, **params):
    if kind == "online":
        base = dict(params.pop("base"))
        return make_online(build_problem(base.pop("kind"), **base), **params)
    if kind not in _BUILDERS:
        raise ConfigurationError(f"unknown problem kind {kind!r}")
    return _BUILDERS[kind](**params)


def reference_optimum(problem, tol=1e-10, max_iters=10**6):
    """High-accuracy ``(phi_star, x_star)``; caches both on `problem`.

    Convex-composite problems run proximal gradient with ``eta = 1/(2L)``
    until the gradient-mapping norm drops to `tol`.  The quartic saddle
    returns its analytic global minimum.
    """
    from .algorithms import AlgoParams, run_proxgd

    kind = getattr(problem, "kind", "generic")
    if kind == "online":
        phi, x = reference_optimum(problem.base, tol, max_iters)
        problem.phi_star, problem.x_star = phi, x
        return phi, x
    if kind == "quartic_saddle":
        x = problem.local_minima()[0]
        phi = -problem.neg_eig ** 2 / (4.0 * problem.beta)
    elif kind in ("quadratic_l1", "pl_quadratic"):
        params = AlgoParams(eta=1.0 / (2.0 * problem.L), max_iters=max_iters,
                            epsilon=tol, stop_at_epsilon=True, eval_stride=1)
        trace = run_proxgd(problem, params, np.zeros(problem.dim))
        x = trace.best_x
        phi = problem.f(x) + problem.h.value(x)
        if trace.best_grad_map_norm > tol:
            raise RuntimeError(
                f"reference run stalled at |G| = {trace.best_grad_map_norm:.3e} > {tol:.1e}")
    else:
        raise UnsupportedOperation(f"no reference optimum for problem kind {kind!r}")
    problem.phi_star = float(phi)
    problem.x_star = check_vector(x, problem.dim)
    return problem.phi_star, problem.x_star
