"""Pure-numpy versions of the compiled loops; same signatures and semantics."""
import numpy as np


def pssm_phase(y, y0, acc, A, b, alphas, inv_gamma, radius, weight0, trace=None):
    for i in range(A.shape[0]):
        a = A[i]
        ip = a @ y
        coef = 2.0 * ip if ip * ip - b[i] >= 0.0 else -2.0 * ip
        y -= alphas[i] * (coef * a + inv_gamma * (y - y0))
        nrm = np.sqrt(y @ y)
        if not np.isfinite(nrm):
            return i
        if nrm > radius:
            y *= radius / nrm
        acc += (weight0 + i) * y
        if trace is not None:
            trace[i] = y
    return -1


def sgd_phase(x, A, b, steps, radius, xbar, tol):
    hit = -1
    ref2 = (xbar @ xbar) * tol * tol
    for i in range(A.shape[0]):
        a = A[i]
        ip = a @ x
        coef = 2.0 * ip if ip * ip - b[i] >= 0.0 else -2.0 * ip
        x -= steps[i] * coef * a
        nrm = np.sqrt(x @ x)
        if not np.isfinite(nrm):
            return hit, i
        if nrm > radius:
            x *= radius / nrm
        if hit < 0:
            dm = x - xbar
            dp = x + xbar
            if dm @ dm <= ref2 or dp @ dp <= ref2:
                hit = i
    return hit, -1
