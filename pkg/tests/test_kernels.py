import numpy as np
import pytest

from proxguide import _kernels
from proxguide.core import RngStream, unit_sphere
from proxguide.inner import alpha_schedule
from proxguide.problems import phase_retrieval_oracle

needs_compiled = pytest.mark.skipif(_kernels.compiled is None, reason="extension not built")


def _setup(d=7, n=500, seed=0):
    r = RngStream(seed)
    oracle = phase_retrieval_oracle(d, unit_sphere(d, r.split(0)), radius=3.0)
    batch = oracle.sample(r.split(1), n)
    return oracle, batch, 2.0 * unit_sphere(d, r.split(2))


@needs_compiled
def test_pssm_kernels_agree():
    oracle, batch, y0 = _setup()
    gamma = 0.05
    alphas = alpha_schedule(1 / (2 * gamma), gamma, np.arange(len(batch))) * 20  # hit the ball often
    out = []
    for mod in (_kernels.python, _kernels.compiled):
        y, acc = y0.copy(), y0.copy()
        tr = np.empty((len(batch), y0.size))
        assert mod.pssm_phase(y, y0, acc, batch.A, batch.target, alphas, 1 / gamma, 3.0, 2.0, tr) == -1
        out.append((y, acc, tr))
    for a, b in zip(*out):
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


@needs_compiled
def test_sgd_kernels_agree():
    oracle, batch, x0 = _setup()
    steps = 0.05 / (np.arange(len(batch)) + 10.0)
    res = []
    for mod in (_kernels.python, _kernels.compiled):
        x = x0.copy()
        hit = mod.sgd_phase(x, batch.A, batch.target, steps, 3.0, oracle.minimizer, 0.5)
        res.append((hit, x))
    assert res[0][0] == res[1][0]
    assert np.allclose(res[0][1], res[1][1], rtol=1e-10, atol=1e-12)


def test_fault_index_reported():
    oracle, batch, y0 = _setup(n=5)
    alphas = np.array([0.1, np.inf, 0.1, 0.1, 0.1])
    for mod in filter(None, (_kernels.python, _kernels.compiled)):
        y, acc = y0.copy(), y0.copy()
        assert mod.pssm_phase(y, y0, acc, batch.A, batch.target, alphas, 1.0, 3.0, 2.0) == 1


def test_backend_name():
    assert _kernels.BACKEND in ("cython", "python")
