# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the robust phase retrieval oracle."""
from libc.math cimport sqrt, isfinite


def pssm_phase(double[::1] y, const double[::1] y0, double[::1] acc,
               const double[:, ::1] A, const double[::1] b,
               const double[::1] alphas, double inv_gamma, double radius,
               double weight0, double[:, ::1] trace=None):
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, k
    cdef double ip, r, coef, nrm, scale, w
    cdef bint keep = trace is not None
    for i in range(m):
        ip = 0.0
        for k in range(d):
            ip += A[i, k] * y[k]
        r = ip * ip - b[i]
        coef = 2.0 * ip if r >= 0.0 else -2.0 * ip
        nrm = 0.0
        for k in range(d):
            y[k] = y[k] - alphas[i] * (coef * A[i, k] + inv_gamma * (y[k] - y0[k]))
            nrm += y[k] * y[k]
        if not isfinite(nrm):
            return i
        nrm = sqrt(nrm)
        if nrm > radius:
            scale = radius / nrm
            for k in range(d):
                y[k] *= scale
        w = weight0 + i
        for k in range(d):
            acc[k] += w * y[k]
        if keep:
            for k in range(d):
                trace[i, k] = y[k]
    return -1


def sgd_phase(double[::1] x, const double[:, ::1] A, const double[::1] b,
              const double[::1] steps, double radius, const double[::1] xbar,
              double tol):
    """Projected subgradient steps; returns (first step reaching tol or -1, fault step or -1)."""
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, k
    cdef Py_ssize_t hit = -1
    cdef double ip, r, coef, nrm, scale, dm, dp, ref2 = 0.0, t
    for k in range(d):
        ref2 += xbar[k] * xbar[k]
    ref2 *= tol * tol
    for i in range(m):
        ip = 0.0
        for k in range(d):
            ip += A[i, k] * x[k]
        r = ip * ip - b[i]
        coef = 2.0 * ip if r >= 0.0 else -2.0 * ip
        nrm = 0.0
        for k in range(d):
            x[k] = x[k] - steps[i] * coef * A[i, k]
            nrm += x[k] * x[k]
        if not isfinite(nrm):
            return hit, i
        nrm = sqrt(nrm)
        if nrm > radius:
            scale = radius / nrm
            for k in range(d):
                x[k] *= scale
        if hit < 0:
            dm = 0.0
            dp = 0.0
            for k in range(d):
                t = x[k] - xbar[k]
                dm += t * t
                t = x[k] + xbar[k]
                dp += t * t
            if dm <= ref2 or dp <= ref2:
                hit = i
    return hit, -1
