# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner-loop kernels.

Every function here has a numpy twin in ``_kernels_py`` with the same
signature; ``proxvr.kernels`` picks one of the two at import time.
"""

import numpy as np

from libc.math cimport fabs, sqrt

LOSS_SQUARE = 0
LOSS_ROBUST = 1


cdef inline double _dloss(double t, int loss) nogil:
    cdef double u
    if loss == 0:
        return t
    u = 1.0 + t * t
    return 2.0 * t / (u * u)


def glm_grad(const double[:, ::1] A, const double[::1] y, const double[::1] x,
             const long[::1] idx, int loss):
    """Mean of ``a_i * loss'(a_i.x - y_i)`` over the rows listed in `idx`."""
    cdef Py_ssize_t d = A.shape[1], nb = idx.shape[0]
    cdef Py_ssize_t j, k, i
    cdef double r, w
    out = np.zeros(d, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(nb):
            i = idx[k]
            r = 0.0
            for j in range(d):
                r += A[i, j] * x[j]
            w = _dloss(r - y[i], loss)
            for j in range(d):
                o[j] += w * A[i, j]
        for j in range(d):
            o[j] /= nb
    return out


def glm_grad_diff(const double[:, ::1] A, const double[::1] y, const double[::1] x,
                  const double[::1] z, const long[::1] idx, int loss):
    """Mean of ``grad f_i(x) - grad f_i(z)`` for the GLM family over `idx`."""
    cdef Py_ssize_t d = A.shape[1], nb = idx.shape[0]
    cdef Py_ssize_t j, k, i
    cdef double rx, rz, w
    out = np.zeros(d, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(nb):
            i = idx[k]
            rx = 0.0
            rz = 0.0
            for j in range(d):
                rx += A[i, j] * x[j]
                rz += A[i, j] * z[j]
            w = _dloss(rx - y[i], loss) - _dloss(rz - y[i], loss)
            for j in range(d):
                o[j] += w * A[i, j]
        for j in range(d):
            o[j] /= nb
    return out


def soft_threshold(const double[::1] x, double thresh):
    cdef Py_ssize_t j, d = x.shape[0]
    cdef double a
    out = np.empty(d, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in range(d):
            a = fabs(x[j]) - thresh
            if a <= 0.0:
                o[j] = 0.0
            elif x[j] > 0.0:
                o[j] = a
            else:
                o[j] = -a
    return out


def clip(const double[::1] x, const double[::1] lo, const double[::1] hi):
    cdef Py_ssize_t j, d = x.shape[0]
    out = np.empty(d, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in range(d):
            if x[j] < lo[j]:
                o[j] = lo[j]
            elif x[j] > hi[j]:
                o[j] = hi[j]
            else:
                o[j] = x[j]
    return out


def project_ball(const double[::1] x, double radius):
    cdef Py_ssize_t j, d = x.shape[0]
    cdef double nrm = 0.0, scale
    out = np.empty(d, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in range(d):
            nrm += x[j] * x[j]
        nrm = sqrt(nrm)
        if nrm <= radius:
            for j in range(d):
                o[j] = x[j]
        else:
            scale = radius / nrm
            for j in range(d):
                o[j] = x[j] * scale
    return out
