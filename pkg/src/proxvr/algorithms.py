"""Drivers: ProxGD, ProxSGD, ProxSVRG+, SSRGD and saddle-escaping SSRGD.

Every driver takes ``(problem, params, x0)`` and returns a
:class:`~proxvr.core.RunTrace`.  The variance-reduced drivers always run
whole epochs, so ``max_iters`` is rounded up to ``S = ceil(max_iters/m)``
epochs and ``sfo_paper_convention == S*B + S*m*b`` holds exactly at exit.
``stop_at_epsilon`` ends a run at the first epoch boundary after an
evaluated gradient-mapping norm reached ``epsilon``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace
from time import perf_counter

import numpy as np

from .core import (ConfigurationError, ContractViolation, NumericOverflowError,
                   OracleCounters, RunTrace, TraceRecord, UnsupportedOperation,
                   check_vector, evaluate_phi, full_gradient,
                   component_gradient_batch)
from .diagnostics import verify_local_minimum
from .estimators import (anchor_gradient, draw_batch, make_aux_rng, make_rng,
                         sample_uniform_ball, sarah_estimator, svrg_estimator)
from .prox import Zero, gradient_mapping, prox_apply

THEOREMS = ("T1a", "T1b", "T2a", "T2b", "T3a", "T3b", "T4a", "T4b", "T5")


@dataclass
class AlgoParams:
    """Configuration of one run.

    ``B=None`` means the full population (``B = n``).  ``r``, ``f_thres``,
    ``t_thres`` and ``delta`` are only read by :func:`run_ssrgd_saddle`.
    """

    eta: float
    b: int = 1
    B: int | None = None
    m: int = 1
    max_iters: int = 1000
    epsilon: float = 1e-3
    delta: float | None = None
    r: float = 0.0
    f_thres: float | None = None
    t_thres: int | None = None
    seed: int = 0
    eval_stride: int = 1
    stop_at_epsilon: bool = False
    theorem: str | None = None

    def batch_size(self, problem):
        return problem.n if self.B is None else int(self.B)

    def validate(self, problem):
        if not self.eta > 0:
            raise ContractViolation("eta must be positive")
        if self.b < 1 or self.m < 1:
            raise ContractViolation("b and m must be >= 1")
        B = self.batch_size(problem)
        if B < 1 or (not problem.streaming and B > problem.n):
            raise ContractViolation(f"B must lie in [1, n]; got {B}")
        if self.max_iters < 0:
            raise ContractViolation("max_iters must be >= 0")
        if self.eval_stride < 1:
            raise ContractViolation("eval_stride must be >= 1")
        return self

    def to_dict(self):
        return asdict(self)


class _Recorder:
    """Trace bookkeeping shared by all drivers."""

    def __init__(self, problem, params, algorithm, counters):
        self.problem = problem
        self.eta = params.eta
        self.stride = params.eval_stride
        self.trace = RunTrace(algorithm, counters=counters)
        self.counters = counters
        self.aux = make_aux_rng(params.seed)
        self._u = self.aux.random(4096)
        self._ui = 0
        self._seen = 0
        self.t0 = perf_counter()

    def observe(self, t, epoch, x, grad=None, super_epoch=False, force=False):
        if not np.all(np.isfinite(x)):
            raise NumericOverflowError(f"iterate became non-finite at iteration {t}")
        # reservoir sample over every visited iterate
        self._seen += 1
        if self._ui == len(self._u):
            self._u = self.aux.random(4096)
            self._ui = 0
        if self._u[self._ui] * self._seen < 1.0:
            self.trace.sampled_x = x.copy()
        self._ui += 1
        if t % self.stride and not force:
            return
        tr = self.trace
        if self.problem.streaming and grad is None:
            gn = math.nan
        else:
            _, gn = gradient_mapping(self.problem, x, self.eta, grad=grad,
                                     counters=self.counters)
            if gn < tr.best_grad_map_norm:
                tr.best_grad_map_norm = gn
                tr.best_x = x.copy()
        phi = evaluate_phi(self.problem, x)
        c = self.counters
        tr.records.append(TraceRecord(
            t, epoch, super_epoch, phi, gn, c.sfo, c.sfo_paper_convention, c.po,
            (perf_counter() - self.t0) * 1e3))

    def finish(self, x, iterations, epochs):
        tr = self.trace
        if not tr.records or tr.records[-1].iter != iterations:
            self.observe(iterations, epochs, x, force=True)
        tr.final_x = x.copy()
        tr.iterations = iterations
        tr.epochs = epochs
        if tr.best_x is None:
            tr.best_x = x.copy()
        return tr


def _start(problem, params, x0):
    params.validate(problem)
    return check_vector(x0, problem.dim, "x0").copy()


def _reached(rec, params):
    return params.stop_at_epsilon and rec.trace.best_grad_map_norm <= params.epsilon


def run_proxgd(problem, params, x0):
    """Deterministic proximal gradient: ``x <- prox(x - eta grad f(x))``."""
    if problem.streaming:
        raise UnsupportedOperation("ProxGD needs exact gradients")
    x = _start(problem, params, x0)
    counters = OracleCounters()
    rec = _Recorder(problem, params, "proxgd", counters)
    h, eta, T = problem.h, params.eta, params.max_iters
    t = 0
    while True:
        if t < T:
            grad = full_gradient(problem, x, counters)
        else:
            grad = full_gradient(problem, x)
            counters.diag_sfo += problem.n
        rec.observe(t, t, x, grad=grad, force=(t == T))
        if t == T or _reached(rec, params):
            break
        x = prox_apply(h, x - eta * grad, eta, counters)
        t += 1
    return rec.finish(x, t, t)


def run_proxsgd(problem, params, x0):
    """Proximal SGD with minibatch ``b`` (a full pass when ``b >= n``)."""
    x = _start(problem, params, x0)
    counters = OracleCounters()
    rec = _Recorder(problem, params, "proxsgd", counters)
    rng = make_rng(params.seed)
    h, eta = problem.h, params.eta
    rec.observe(0, 0, x)
    t = 0
    for t in range(1, params.max_iters + 1):
        batch = draw_batch(rng, problem, params.b)
        g = component_gradient_batch(problem, x, batch, counters)
        x = prox_apply(h, x - eta * g, eta, counters)
        rec.observe(t, t, x)
        if _reached(rec, params):
            break
    return rec.finish(x, t, t)


def _check_step(name, eta, bound):
    if eta > bound * (1 + 1e-12):
        warnings.warn(f"{name}: eta={eta:.4g} exceeds the convergence bound {bound:.4g}",
                      RuntimeWarning, stacklevel=3)


def run_proxsvrg_plus(problem, params, x0):
    """ProxSVRG+: batch gradient ``g`` at the anchor each epoch, then ``m``
    proximal steps with the SVRG estimator; the last point becomes the next
    anchor."""
    x = _start(problem, params, x0)
    b, m, eta = params.b, params.m, params.eta
    B = params.batch_size(problem)
    _check_step("ProxSVRG+", eta, 1.0 / ((1.0 + 2.0 * m / math.sqrt(b)) * problem.L))
    counters = OracleCounters()
    rec = _Recorder(problem, params, "proxsvrg_plus", counters)
    rng = make_rng(params.seed)
    h = problem.h
    S = -(-params.max_iters // m)
    rec.observe(0, 0, x)
    t = s = 0
    for s in range(S):
        anchor = anchor_gradient(problem, x, B, rng, counters)
        for _ in range(m):
            batch = draw_batch(rng, problem, b)
            v = svrg_estimator(problem, x, anchor, batch, counters)
            x = prox_apply(h, x - eta * v, eta, counters)
            t += 1
            rec.observe(t, s, x)
        if _reached(rec, params):
            break
    return rec.finish(x, t, s + 1 if S else 0)


def run_ssrgd(problem, params, x0):
    """SSRGD without the super-epoch machinery: proximal steps driven by
    the SARAH recursive estimator, restarted from a batch gradient at the
    start of each epoch."""
    x = _start(problem, params, x0)
    b, m, eta = params.b, params.m, params.eta
    B = params.batch_size(problem)
    _check_step("SSRGD", eta, 1.0 / ((1.0 + math.sqrt((m - 1) / b)) * problem.L))
    counters = OracleCounters()
    rec = _Recorder(problem, params, "ssrgd", counters)
    rng = make_rng(params.seed)
    h = problem.h
    S = -(-params.max_iters // m)
    rec.observe(0, 0, x)
    t = s = 0
    for s in range(S):
        v = anchor_gradient(problem, x, B, rng, counters).g
        for _ in range(m):
            x_prev = x
            x = prox_apply(h, x - eta * v, eta, counters)
            batch = draw_batch(rng, problem, b)
            v = sarah_estimator(problem, x, x_prev, v, batch, counters)
            t += 1
            rec.observe(t, s, x)
        if _reached(rec, params):
            break
    return rec.finish(x, t, s + 1 if S else 0)


def random_stop(rng, m, k):
    """Coin flip for leaving a normal epoch after inner step ``k`` (1-based):
    true with probability ``1/(m-k+1)``, which makes the stopping step
    uniform on ``1..m``."""
    return rng.random() * (m - k + 1) < 1.0


def random_stop_index(rng, m):
    for k in range(1, m + 1):
        if random_stop(rng, m, k):
            return k
    return m


def run_ssrgd_saddle(problem, params, x0):
    """SSRGD with perturbations and super epochs, for smooth ``f``.

    Outside a super epoch each epoch starts from a batch gradient ``v``; if
    ``|v| <= epsilon`` the current point becomes the candidate ``x_tilde``,
    it is perturbed uniformly in a ball of radius ``r`` and a super epoch
    begins.  A super epoch ends once ``f(x_tilde) - f(x_t) >= f_thres``
    (the perturbation found descent) or after ``t_thres`` iterations.  In
    the latter case ``x_tilde`` is handed to
    :func:`~proxvr.diagnostics.verify_local_minimum`; a ``"yes"`` verdict
    ends the run with ``final_x = x_tilde``.  Normal epochs stop at a
    uniformly random inner step.  ``r = 0`` disables the perturbation.
    """
    if not isinstance(problem.h, Zero):
        raise UnsupportedOperation("saddle escaping is defined for h = 0 only")
    if problem.rho is None:
        raise ConfigurationError("rho (Hessian-Lipschitz constant) is required")
    if params.delta is None or params.f_thres is None or params.t_thres is None:
        raise ConfigurationError("delta, f_thres and t_thres are required")
    if params.r < 0:
        raise ContractViolation("perturbation radius must be >= 0")
    x = _start(problem, params, x0)
    b, m, eta, eps = params.b, params.m, params.eta, params.epsilon
    B = params.batch_size(problem)
    counters = OracleCounters()
    rec = _Recorder(problem, params, "ssrgd_saddle", counters)
    rng = make_rng(params.seed)
    T = params.max_iters
    active = False
    x_tilde = None
    f_tilde = 0.0
    t_init = 0
    t = s = 0
    trace = rec.trace
    rec.observe(0, 0, x)
    while t < T:
        v = anchor_gradient(problem, x, B, rng, counters).g
        if not active and float(np.linalg.norm(v)) <= eps:
            active = True
            x_tilde, t_init = x.copy(), t
            f_tilde = problem.f(x_tilde)
            counters.f_evals += 1
            trace.events.append({"iter": t, "epoch": s, "event": "enter",
                                 "v_norm": float(np.linalg.norm(v))})
            if params.r > 0:
                x = x_tilde + sample_uniform_ball(rng, problem.dim, params.r)
                v = anchor_gradient(problem, x, B, rng, counters).g
        done = False
        for k in range(1, m + 1):
            x_prev = x
            x = x - eta * v
            batch = draw_batch(rng, problem, b)
            v = sarah_estimator(problem, x, x_prev, v, batch, counters)
            t += 1
            rec.observe(t, s, x, super_epoch=active)
            if active:
                counters.f_evals += 1
                drop = f_tilde - problem.f(x)
                if drop >= params.f_thres:
                    active = False
                    trace.events.append({"iter": t, "epoch": s, "event": "exit",
                                         "reason": "descent", "drop": drop})
                    break
                if t - t_init >= params.t_thres:
                    active = False
                    verdict, est = verify_local_minimum(
                        problem, x_tilde, eps, params.delta, counters=counters)
                    trace.events.append({"iter": t, "epoch": s, "event": "exit",
                                         "reason": "timeout", "verdict": verdict})
                    trace.verdict = verdict
                    trace.lambda_min_est = None if est is None else est.lambda_min_est
                    if verdict == "yes":
                        done = True
                    break
            elif random_stop(rng, m, k):
                break
            if t >= T:
                break
        s += 1
        if done:
            out = rec.finish(x, t, s)
            out.final_x = x_tilde.copy()
            return out
    return rec.finish(x, t, s)


DRIVERS = {
    "proxgd": run_proxgd,
    "proxsgd": run_proxsgd,
    "proxsvrg_plus": run_proxsvrg_plus,
    "ssrgd": run_ssrgd,
    "ssrgd_saddle": run_ssrgd_saddle,
}


# -- theorem schedules -----------------------------------------------------

def _require(problem, name):
    val = getattr(problem, name)
    if val is None:
        raise ConfigurationError(f"schedule needs the problem constant {name!r}")
    return val


def initial_gap(problem, x0):
    """``Phi(x0) - Phi*``."""
    return evaluate_phi(problem, x0) - _require(problem, "phi_star")


def _online_batch(problem, numer):
    B = max(1, math.ceil(numer))
    return B if problem.streaming else min(problem.n, B)


def default_params(theorem, problem, epsilon, delta=None, zeta=0.1, b=None,
                   x0=None, seed=0, eval_stride=1):
    """Parameters prescribed by one of the convergence theorems.

    ``T1*``/``T3*`` configure ProxSVRG+ (``m = floor(sqrt(b))``,
    ``eta = 1/(3L)``), ``T2*``/``T4*`` configure SSRGD (``m = b``,
    ``eta = 1/(2L)``); suffix ``a`` is the finite-sum case ``B = n``,
    suffix ``b`` the bounded-variance case.  ``T5`` configures
    :func:`run_ssrgd_saddle` with the log factor ``Lambda = ln(4d/zeta)``
    standing in for every hidden polylog.
    """
    if theorem not in THEOREMS:
        raise ConfigurationError(f"unknown theorem schedule {theorem!r}")
    if not epsilon > 0:
        raise ConfigurationError("epsilon must be positive")
    x0 = np.zeros(problem.dim) if x0 is None else check_vector(x0, problem.dim, "x0")
    L, n = problem.L, problem.n
    if theorem[:2] in ("T1", "T2", "T3", "T4") and problem.streaming and theorem[2] == "a":
        raise ConfigurationError(f"{theorem} is the finite-sum case; use {theorem[:2]}b")

    if theorem == "T5":
        rho = _require(problem, "rho")
        if delta is None or not delta > 0:
            raise ConfigurationError("T5 needs a positive delta")
        lam = math.log(4.0 * problem.dim / zeta)
        if problem.streaming:
            B = max(1, math.ceil(lam * _require(problem, "sigma") ** 2 / epsilon ** 2))
        else:
            B = n
        bm = math.ceil(math.sqrt(B))
        eta = 1.0 / (4.0 * lam * L)
        r = min(delta ** 3 / (rho ** 2 * epsilon), delta ** 1.5 / (rho * math.sqrt(L))) / lam ** 2
        gap = max(initial_gap(problem, x0), 0.0)
        budget = lam * (L * gap / epsilon ** 2 + L * rho ** 2 * gap / delta ** 4
                        + rho ** 2 * gap * math.sqrt(B) / delta ** 3)
        return AlgoParams(
            eta=eta, b=bm, B=B, m=bm, max_iters=max(1, math.ceil(budget)),
            epsilon=epsilon, delta=delta, r=r,
            f_thres=delta ** 3 / (2.0 * lam ** 3 * rho ** 2),
            t_thres=math.ceil(lam / (eta * delta)), seed=seed,
            eval_stride=eval_stride, theorem=theorem)

    family, case = theorem[:2], theorem[2]
    svrg = family in ("T1", "T3")
    pl = family in ("T3", "T4")
    if case == "a":
        B = n
    else:
        sigma = _require(problem, "sigma")
        if pl:
            B = _online_batch(problem, sigma ** 2 / (_require(problem, "mu") * epsilon))
        else:
            B = _online_batch(problem, 2.0 * sigma ** 2 / epsilon ** 2)
    if b is None:
        b = math.ceil(B ** (2.0 / 3.0)) if svrg else math.ceil(math.sqrt(B))
    b = int(b)
    if svrg:
        m = max(1, math.isqrt(b))
        eta = 1.0 / (3.0 * L)
    else:
        m = b
        eta = 1.0 / (2.0 * L)
    mu = _require(problem, "mu") if pl else None
    gap = initial_gap(problem, x0)
    if pl:
        factor = 3.0 if svrg else 2.0
        T = math.ceil(factor * L / mu * math.log(2.0 * gap / epsilon)) if gap > epsilon / 2 else 1
    else:
        factor = 12.0 if svrg else 8.0
        T = max(1, math.ceil(factor * L * gap / epsilon ** 2))
    return AlgoParams(eta=eta, b=b, B=B, m=m, max_iters=T, epsilon=epsilon,
                      delta=delta, seed=seed, eval_stride=eval_stride, theorem=theorem)


def with_seed(params, seed):
    return replace(params, seed=seed)
