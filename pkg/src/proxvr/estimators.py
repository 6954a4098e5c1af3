"""Minibatch sampling, SVRG/SARAH gradient estimators and ball perturbations.

Random numbers come from numpy's ``PCG64`` bit generator seeded directly
with the integer run seed (``np.random.Generator(np.random.PCG64(seed))``).
That choice is part of the output format: traces are reproducible across
platforms only as long as it does not change, so ``RNG_VERSION`` must be
bumped if it ever does.

Minibatches are drawn uniformly with replacement.  In finite-sum mode a
batch of size ``>= n`` is taken to mean the whole index set, which is then
evaluated exactly (``None`` is passed around as the full-batch marker).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractViolation, component_gradient_batch

RNG_NAME = "PCG64"
RNG_VERSION = 1


def make_rng(seed):
    """Main per-run generator."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def make_aux_rng(seed):
    """Independent stream for bookkeeping draws (e.g. the reported random
    iterate), so they do not shift the algorithm's own sample sequence."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(1,))))


def sample_minibatch(rng, n, b):
    """``b`` indices drawn i.i.d. uniformly from ``range(n)``."""
    if b < 1:
        raise ContractViolation("minibatch size must be >= 1")
    return rng.integers(0, n, size=int(b))


def draw_batch(rng, problem, b):
    """Minibatch for a driver step, or ``None`` for an exact full pass."""
    if not problem.streaming and b >= problem.n:
        return None
    return sample_minibatch(rng, problem.n, b)


def _batch_size(problem, batch):
    return problem.n if batch is None else len(batch)


@dataclass
class Anchor:
    """Epoch reference point and its (possibly sampled) gradient."""

    x_tilde: np.ndarray
    g: np.ndarray


def anchor_gradient(problem, x, B, rng, counters=None):
    """Batch gradient at the epoch anchor.

    ``B >= n`` in finite-sum mode gives the exact gradient; otherwise ``B``
    component gradients are averaged over a with-replacement sample.
    Charges ``B`` (or ``n``) to both SFO counters.
    """
    if B < 1:
        raise ContractViolation("batch size B must be >= 1")
    batch = draw_batch(rng, problem, B)
    g = component_gradient_batch(problem, x, batch, counters)
    return Anchor(np.array(x, copy=True), g)


def svrg_estimator(problem, x, anchor, batch, counters=None):
    """``mean_{i in batch}(grad f_i(x) - grad f_i(x_tilde)) + g``.

    Raw cost ``2b``; ``sfo_paper_convention`` charges ``b``.
    """
    if batch is not None and len(batch) == 0:
        raise ContractViolation("empty minibatch")
    if batch is None:
        diff = problem.mean_gradient(x) - problem.mean_gradient(anchor.x_tilde)
    else:
        diff = problem.batch_gradient_diff(x, anchor.x_tilde, batch)
    if counters is not None:
        b = _batch_size(problem, batch)
        counters.charge(2 * b, b)
    return diff + anchor.g


def sarah_estimator(problem, x_t, x_prev, v_prev, batch, counters=None):
    """Recursive estimator ``mean_{i in batch}(grad f_i(x_t) - grad f_i(x_prev)) + v_prev``."""
    if batch is not None and len(batch) == 0:
        raise ContractViolation("empty minibatch")
    if batch is None:
        diff = problem.mean_gradient(x_t) - problem.mean_gradient(x_prev)
    else:
        diff = problem.batch_gradient_diff(x_t, x_prev, batch)
    if counters is not None:
        b = _batch_size(problem, batch)
        counters.charge(2 * b, b)
    return diff + v_prev


def sample_uniform_ball(rng, d, r):
    """Uniform sample from the centred Euclidean ball of radius ``r`` in R^d."""
    if not r > 0:
        raise ContractViolation("ball radius must be positive")
    u = rng.standard_normal(d)
    u /= np.sqrt(u @ u)
    return u * (r * rng.random() ** (1.0 / d))
