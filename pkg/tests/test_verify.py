import json

import numpy as np
import pytest

from proxguide.core import Ball, RngStream, unit_sphere
from proxguide.problems import FixtureOracle, NullBatch, phase_retrieval_oracle, synthetic_prox_test_oracle
from proxguide.verify import (
    estimate_lipschitz,
    estimate_modulus,
    lipschitz_check,
    oracle_three_point_check,
    second_moment_check,
    three_point_check,
)


class ZeroOracle(FixtureOracle):
    def subgradient(self, x, batch, i):
        return np.zeros(self.dim)

    def loss(self, x, batch):
        return np.zeros(len(batch))


def test_three_point_calibration(rng):
    c = synthetic_prox_test_oracle("concave-quadratic", 3)
    dom = Ball.origin(3, 5.0)
    assert oracle_three_point_check(c, 1000, dom, rng.split(0), rho=1.0).passed
    bad = oracle_three_point_check(c, 1000, dom, rng.split(0), rho=0.5)
    assert not bad.passed
    # the stored witness reproduces the reported violation
    assert bad.replay() == bad.worst
    assert oracle_three_point_check(synthetic_prox_test_oracle("convex-quadratic", 3), 500, dom, rng.split(1), rho=0.0).passed


def test_report_json(rng):
    rep = three_point_check(lambda x, z: float(x @ x), lambda z: 0.0, 10, Ball.origin(2, 1.0), rng)
    d = json.loads(rep.to_json())
    assert d["passed"] and d["trials"] == 10 and len(d["witness"]["x"]) == 2


def test_estimate_modulus(rng):
    est = estimate_modulus(lambda x: -0.5 * float(x @ x), Ball.origin(2, 3.0), 200, rng)
    assert est == pytest.approx(1.0, rel=1e-9)


def test_lipschitz_checks(rng):
    a = synthetic_prox_test_oracle("abs-value", 1)
    x = np.array([0.4])
    assert lipschitz_check(a, 1.0, 200, 1, rng).passed
    r = lipschitz_check(a, 1.0, 1, 1, rng)
    assert r._evaluate(x, x) <= 0.0
    o = phase_retrieval_oracle(3, unit_sphere(3, RngStream(0)), radius=10)
    L = estimate_lipschitz(o, 50, rng.split(1), 2000, Ball.origin(3, 10.0))
    assert lipschitz_check(o, L, 200, 2000, rng.split(2), Ball.origin(3, 10.0)).passed


def test_second_moment_checks(rng):
    z = ZeroOracle("convex-quadratic", 2)
    assert second_moment_check(z, 0.0, 10, rng, samples=10).passed
    q = synthetic_prox_test_oracle("convex-quadratic", 2, radius=3.0)
    assert second_moment_check(q, 3.0, 50, rng, samples=2, domain=q.feasible_set).passed
    assert not second_moment_check(q, 0.1, 50, rng, samples=2, domain=q.feasible_set).passed
    # estimate on one stream, re-verify on fresh samples
    o = phase_retrieval_oracle(5, unit_sphere(5, RngStream(0)))
    dom = Ball.origin(5, 10.0)
    L = estimate_lipschitz(o, 30, RngStream(1), 4000, dom)
    rep = second_moment_check(o, 1.1 * L, 30, RngStream(2), 4000, dom)
    assert rep.passed
    assert len(NullBatch(3)) == 3
