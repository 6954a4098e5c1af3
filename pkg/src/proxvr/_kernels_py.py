"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

LOSS_SQUARE = 0
LOSS_ROBUST = 1


def _dloss(t, loss):
    if loss == LOSS_SQUARE:
        return t
    u = 1.0 + t * t
    return 2.0 * t / (u * u)


def glm_grad(A, y, x, idx, loss):
    rows = A[idx]
    w = _dloss(rows @ x - y[idx], loss)
    return (w @ rows) / len(idx)


def glm_grad_diff(A, y, x, z, idx, loss):
    rows = A[idx]
    yi = y[idx]
    w = _dloss(rows @ x - yi, loss) - _dloss(rows @ z - yi, loss)
    return (w @ rows) / len(idx)


def soft_threshold(x, thresh):
    a = np.abs(x) - thresh
    return np.where(a > 0.0, np.copysign(a, x), 0.0)


def clip(x, lo, hi):
    return np.minimum(np.maximum(x, lo), hi)


def project_ball(x, radius):
    nrm = np.sqrt(x @ x)
    if nrm <= radius:
        return x.copy()
    return x * (radius / nrm)
