"""Closed-form proximal maps and the gradient mapping.

``prox_{eta h}(x) = argmin_y  h(y) + |y - x|^2 / (2 eta)``.

Supported ``h``: zero, weighted l1 norm, box indicator, centred Euclidean
ball indicator.  Indicators are 0 on their set and ``+inf`` outside it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ContractViolation, UnsupportedOperation, full_gradient


class ProxSpec:
    """Base class for the structured nonsmooth term ``h``."""

    name = "abstract"

    def value(self, x):
        raise NotImplementedError

    def prox(self, x, eta):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(ProxSpec):
    name = "zero"

    def value(self, x):
        return 0.0

    def prox(self, x, eta):
        return np.array(x, dtype=np.float64, copy=True)

    def to_dict(self):
        return {"kind": "zero"}


@dataclass(frozen=True)
class L1(ProxSpec):
    lam: float

    name = "l1"

    def __post_init__(self):
        if not self.lam >= 0:
            raise ContractViolation("l1 weight must be nonnegative")

    def value(self, x):
        return self.lam * float(np.abs(x).sum())

    def prox(self, x, eta):
        return kernels.soft_threshold(np.ascontiguousarray(x, dtype=np.float64),
                                      eta * self.lam)

    def to_dict(self):
        return {"kind": "l1", "lam": self.lam}


class BoxIndicator(ProxSpec):
    """Indicator of ``{x : lo <= x <= hi}`` (bounds broadcast to the dimension)."""

    name = "box"

    def __init__(self, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
        lo, hi = np.broadcast_arrays(lo, hi)
        if np.any(lo > hi):
            raise ContractViolation("box bounds must satisfy lo <= hi")
        self.lo = np.ascontiguousarray(lo)
        self.hi = np.ascontiguousarray(hi)

    def _bounds(self, d):
        if self.lo.shape[0] == d:
            return self.lo, self.hi
        if self.lo.shape[0] == 1:
            return np.full(d, self.lo[0]), np.full(d, self.hi[0])
        raise ContractViolation(f"box bounds have length {self.lo.shape[0]}, need {d}")

    def value(self, x):
        lo, hi = self._bounds(len(x))
        return 0.0 if np.all((x >= lo) & (x <= hi)) else np.inf

    def prox(self, x, eta):
        x = np.ascontiguousarray(x, dtype=np.float64)
        lo, hi = self._bounds(x.shape[0])
        return kernels.clip(x, lo, hi)

    def to_dict(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    def __repr__(self):
        return f"BoxIndicator(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


@dataclass(frozen=True)
class BallIndicator(ProxSpec):
    radius: float

    name = "ball"

    def __post_init__(self):
        if not self.radius > 0:
            raise ContractViolation("ball radius must be positive")

    def value(self, x):
        # projections land on the sphere only up to rounding
        return 0.0 if float(np.sqrt(x @ x)) <= self.radius * (1 + 1e-12) else np.inf

    def prox(self, x, eta):
        return kernels.project_ball(np.ascontiguousarray(x, dtype=np.float64),
                                    self.radius)

    def to_dict(self):
        return {"kind": "ball", "radius": self.radius}


def prox_from_dict(d):
    kind = d.get("kind", "zero")
    if kind == "zero":
        return Zero()
    if kind == "l1":
        return L1(float(d["lam"]))
    if kind == "box":
        return BoxIndicator(d["lo"], d["hi"])
    if kind == "ball":
        return BallIndicator(float(d["radius"]))
    raise ContractViolation(f"unknown prox kind {kind!r}")


def prox_apply(spec, x, eta, counters=None):
    """Evaluate ``prox_{eta h}(x)``; one PO charge when `counters` is given."""
    if not eta > 0:
        raise ContractViolation("step size eta must be positive")
    out = spec.prox(x, eta)
    if counters is not None:
        counters.po += 1
    return out


def gradient_mapping(problem, x, eta, grad=None, counters=None):
    """Return ``(G, |G|)`` with ``G = (x - prox_{eta h}(x - eta grad f(x))) / eta``.

    If `grad` is omitted the exact gradient is computed; that cost is billed
    to ``counters.diag_sfo`` since it is a diagnostic, not an algorithm step.
    """
    if not eta > 0:
        raise ContractViolation("step size eta must be positive")
    if grad is None:
        if problem.streaming:
            raise UnsupportedOperation(
                "gradient mapping needs an exact gradient in streaming mode")
        grad = full_gradient(problem, x)
        if counters is not None:
            counters.diag_sfo += problem.n
    x_plus = problem.h.prox(x - eta * grad, eta)
    g = (x - x_plus) / eta
    return g, float(np.sqrt(g @ g))
