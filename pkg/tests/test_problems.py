import json

import numpy as np
import pytest

from proxguide.core import Ball, RngStream, unit_sphere
from proxguide.errors import DegenerateInstance, InvalidConfig, InvalidInstance
from proxguide.problems import (
    CensoredBlockInstance,
    CensoredBlockOracle,
    IndexBatch,
    PhaseBatch,
    TrimmedInstance,
    abs_residual,
    build_problem,
    load_problem,
    phase_retrieval_oracle,
    random_censored_instance,
    regression_trimmed_instance,
    synthetic_prox_test_oracle,
    trimmed_oracle,
)
from proxguide.verify import oracle_three_point_check


def _batch(a, delta, xi, xbar):
    A = np.atleast_2d(np.asarray(a, dtype=float))
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return PhaseBatch(A, delta, xi, (A @ xbar) ** 2 + delta * xi)


def test_phase_retrieval_examples():
    xbar = np.array([1.0, 0.0])
    o = phase_retrieval_oracle(2, xbar)
    b = _batch([1.0, 0.0], 0, 0, xbar)
    assert o.loss(np.array([2.0, 0.0]), b)[0] == 3.0
    assert np.array_equal(o.subgradient(np.array([2.0, 0.0]), b, 0), [4.0, 0.0])

    xbar = np.array([0.0, 1.0])
    o = phase_retrieval_oracle(2, xbar)
    b = _batch([1.0, 1.0], 1, 0.5, xbar)
    assert o.loss(np.array([1.0, 0.0]), b)[0] == pytest.approx(0.5)
    assert np.array_equal(o.subgradient(np.array([1.0, 0.0]), b, 0), [-2.0, -2.0])


def test_phase_retrieval_interpolates_and_rejects_zero():
    xbar = unit_sphere(5, RngStream(0))
    o = phase_retrieval_oracle(5, xbar)
    b = o.sample(RngStream(1), 1000)
    b = PhaseBatch(b.A, np.zeros(len(b)), b.xi, (b.A @ xbar) ** 2)
    assert np.all(o.loss(xbar, b) == 0)
    with pytest.raises(DegenerateInstance):
        phase_retrieval_oracle(3, np.zeros(3))


def test_phase_sampler_laws():
    o = phase_retrieval_oracle(3, np.ones(3))
    b = o.sample(RngStream(2), 100_000)
    assert abs(b.delta.mean() - 0.25) < 0.006
    assert abs(b.xi.var() - 2.0) < 0.1
    assert abs(b.A.var() - 1.0) < 0.03


def test_phase_second_moment_closed_form():
    # E|G|^2 = 4 E[<a,x>^2 |a|^2] = 4 (d + 2) |x|^2 for standard Gaussian a
    d = 5
    o = phase_retrieval_oracle(d, unit_sphere(d, RngStream(0)))
    x = np.array([1.0, -2.0, 0.5, 0.0, 1.0])
    g = o.subgradients(x, o.sample(RngStream(3), 200_000))
    m = np.einsum("ij,ij->i", g, g)
    se = m.std() / np.sqrt(m.size)
    assert abs(m.mean() - 4 * (d + 2) * x @ x) < 4 * se


def test_phase_subgradient_matches_finite_differences():
    # at a point of differentiability the sample-average gradient is the mean selection
    d = 4
    o = phase_retrieval_oracle(d, unit_sphere(d, RngStream(0)))
    b = o.sample(RngStream(4), 2000)
    x = np.array([0.3, -0.7, 1.1, 0.2])
    g = o.subgradients(x, b).mean(axis=0)
    h = 1e-7
    fd = np.array([(o.loss(x + h * e, b).mean() - o.loss(x - h * e, b).mean()) / (2 * h) for e in np.eye(d)])
    assert np.allclose(g, fd, rtol=1e-4, atol=1e-4)


def test_trimmed_example():
    losses = [abs_residual([1.0], 1.0), abs_residual([1.0], -1.0)]
    o = trimmed_oracle(TrimmedInstance(losses, 1.0, 1, 1))
    z = np.array([1.0, 0.0, 0.0])
    assert o.full_objective(z) == 0.5
    # per-sample losses average to the objective
    assert o.loss(z, IndexBatch(np.array([0, 1]))).mean() == 0.5
    with pytest.raises(InvalidInstance):
        trimmed_oracle(TrimmedInstance(losses, 1.0, 3, 1))


def test_trimmed_weak_convexity(rng):
    o = trimmed_oracle(regression_trimmed_instance(8, 6, 3, rng.split(0)))
    rep = oracle_three_point_check(o, 2000, o.feasible_set, rng.split(1))
    assert rep.passed, rep.to_json()


def test_censored_examples():
    M = np.zeros((3, 3))
    M[0, 1] = M[1, 0] = 1.0
    o = CensoredBlockOracle(CensoredBlockInstance(np.array([1.0, 1.0, 1.0]), 1.0, 0.0, M))
    b = IndexBatch(np.array([0]))
    assert o.loss(np.array([1.0, 1.0, 0.0]), b)[0] == 0.0
    assert o.loss(np.array([2.0, 1.0, 0.0]), b)[0] == 1.0
    assert np.array_equal(o.subgradient(np.array([2.0, 1.0, 0.0]), b, 0), [1.0, 2.0, 0.0])
    with pytest.raises(InvalidInstance):
        CensoredBlockOracle(CensoredBlockInstance(np.ones(3), 1.0, 0.0, np.zeros((3, 3))))


def test_censored_exact_fit_and_scaling(rng):
    inst = random_censored_instance(6, 0.7, 0.0, rng)
    o = CensoredBlockOracle(inst)
    assert o.full_objective(inst.xbar) == 0.0
    x = rng.standard_normal(6)
    u = CensoredBlockOracle(inst, normalized=False)
    assert u.full_objective(x) == pytest.approx(o.full_objective(x) * o.n_obs)
    every = IndexBatch(np.arange(o.n_obs))
    assert u.loss(x, every).mean() == pytest.approx(u.full_objective(x))
    rep = oracle_three_point_check(o, 2000, Ball.origin(6, 3.0), rng.split(1))
    assert rep.passed


def test_fixture_prox_examples():
    a = synthetic_prox_test_oracle("abs-value", 1)
    assert a.prox(np.array([3.0]), 1.0)[0] == 2.0
    q = synthetic_prox_test_oracle("convex-quadratic", 2)
    assert np.allclose(q.prox(np.array([1.0, 0.0]), 1.0), [0.5, 0.0])


def test_fixture_prox_matches_brute_force():
    # independent oracle: dense 1-d grid minimisation
    grid = np.linspace(-20, 20, 400_001)
    for kind, gamma in (("abs-value", 0.7), ("convex-quadratic", 0.7), ("concave-quadratic", 0.4)):
        o = synthetic_prox_test_oracle(kind, 1)
        f = {"abs-value": np.abs(grid), "convex-quadratic": 0.5 * grid**2,
             "concave-quadratic": -0.5 * grid**2}[kind]
        for x in (-3.0, -0.2, 0.0, 0.5, 4.0):
            ref = grid[np.argmin(f + (grid - x) ** 2 / (2 * gamma))]
            assert abs(o.prox(np.array([x]), gamma)[0] - ref) <= 2e-4


def test_build_problem(tmp_path):
    o = build_problem({"kind": "phase_retrieval", "d": 4, "seed": 3})
    assert o.dim == 4 and np.linalg.norm(o.minimizer) == pytest.approx(1.0)
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"kind": "phase_retrieval", "d": 4, "seed": 3}))
    assert np.array_equal(load_problem(p).minimizer, o.minimizer)
    assert build_problem({"kind": "trimmed", "d": 2, "n": 6, "h": 4}).dim == 8
    assert build_problem({"kind": "censored_block", "d": 5}).rho >= 0
    with pytest.raises(InvalidConfig):
        build_problem({"kind": "nope", "d": 2})
    with pytest.raises(InvalidConfig):
        build_problem({"kind": "phase_retrieval"})
