"""Randomized property suites for the structural assumptions.

Weak convexity is checked per sample: if every ``f(., z)`` is
``rho_z``-weakly convex then the expectation is ``E[rho_z]``-weakly convex,
so per-sample moduli certify the population modulus by linearity.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .core import Ball, FeasibleSet, RngStream


@dataclass
class PropertyReport:
    name: str
    trials: int
    worst: float  # signed; <= tolerance means pass
    tolerance: float
    witness: dict = field(default_factory=dict)
    _evaluate: Callable[..., float] | None = field(default=None, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tolerance)

    def replay(self) -> float:
        """Recompute the violation of the stored witness."""
        if self._evaluate is None:
            raise ValueError("report carries no evaluator")
        return self._evaluate(**self.witness)

    def to_dict(self) -> dict:
        def plain(v: Any):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if hasattr(v, "__dataclass_fields__"):
                return {k: plain(getattr(v, k)) for k in v.__dataclass_fields__}
            return v

        return {"property": self.name, "trials": self.trials, "worst_violation": self.worst,
                "tolerance": self.tolerance, "passed": self.passed,
                "witness": {k: plain(v) for k, v in self.witness.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def three_point_check(loss: Callable, modulus_rule: Callable, trials: int, domain: FeasibleSet,
                      rng: RngStream, sampler: Callable | None = None, tol: float = 1e-9,
                      name: str = "three_point") -> PropertyReport:
    """Worst normalized violation of
    ``f(lx + (1-l)y) <= l f(x) + (1-l) f(y) + rho_z l (1-l) |x - y|^2 / 2``.

    ``loss(x, z)`` is a per-sample loss, ``modulus_rule(z)`` its modulus and
    ``sampler(rng)`` draws ``z`` (``None`` for deterministic functions). The
    violation is ``(lhs - rhs) / (1 + |rhs|)`` and passes when ``<= tol``.
    """

    def evaluate(x, y, lam, z):
        mid = lam * x + (1.0 - lam) * y
        rhs = (lam * loss(x, z) + (1.0 - lam) * loss(y, z)
               + 0.5 * modulus_rule(z) * lam * (1.0 - lam) * float(np.sum((x - y) ** 2)))
        return float((loss(mid, z) - rhs) / (1.0 + abs(rhs)))

    worst, witness = -np.inf, {}
    for _ in range(max(1, trials)):
        x, y = domain.sample(rng), domain.sample(rng)
        lam = float(rng.random())
        z = sampler(rng) if sampler is not None else None
        v = evaluate(x, y, lam, z)
        if v > worst:
            worst, witness = v, {"x": x, "y": y, "lam": lam, "z": z}
    return PropertyReport(name, trials, worst, tol, witness, evaluate)


def oracle_three_point_check(oracle, trials: int, domain: FeasibleSet, rng: RngStream,
                             rho: float | None = None, tol: float = 1e-9) -> PropertyReport:
    """Per-sample check for an oracle; ``rho`` overrides its per-sample modulus."""

    def loss(x, z):
        return float(oracle.loss(x, z)[0])

    def modulus(z):
        return float(rho) if rho is not None else float(oracle.sample_modulus(z)[0])

    return three_point_check(loss, modulus, trials, domain, rng,
                             sampler=lambda r: oracle.sample(r, 1), tol=tol,
                             name=f"three_point[{oracle.name}]")


def estimate_modulus(objective: Callable, domain: FeasibleSet, trials: int, rng: RngStream) -> float:
    """Smallest ``rho >= 0`` satisfying the three-point inequality on sampled triples."""
    best = 0.0
    for _ in range(max(1, trials)):
        x, y = domain.sample(rng), domain.sample(rng)
        lam = float(rng.random())
        gap = objective(lam * x + (1 - lam) * y) - lam * objective(x) - (1 - lam) * objective(y)
        denom = lam * (1 - lam) * float(np.sum((x - y) ** 2))
        if denom > 0:
            best = max(best, 2.0 * gap / denom)
    return best


def _domain(oracle, domain, radius):
    if domain is not None:
        return domain
    return Ball.origin(oracle.dim, radius)


def lipschitz_check(oracle, L: float, trials: int, sample_count: int, rng: RngStream,
                    domain: FeasibleSet | None = None, radius: float = 10.0) -> PropertyReport:
    """Check ``|F(x) - F(y)| <= L |x - y|`` with common-random-number means.

    The reported value is the worst ``|F^(x) - F^(y)| - L|x - y| - slack`` where
    slack is three standard errors of the paired difference (plus a rounding
    allowance); the check passes when it is ``<= 0``.
    """
    dom = _domain(oracle, domain, radius)
    batch = oracle.sample(rng.split(0), sample_count)

    def evaluate(x, y):
        diff = oracle.loss(x, batch) - oracle.loss(y, batch)
        n = diff.shape[0]
        se = float(np.std(diff, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        fx = float(np.mean(np.abs(oracle.loss(x, batch))))
        slack = 3.0 * se + 1e-12 * (1.0 + fx)
        return float(abs(np.mean(diff)) - L * np.linalg.norm(x - y) - slack)

    worst, witness = -np.inf, {}
    pts = rng.split(1)
    for _ in range(max(1, trials)):
        x, y = dom.sample(pts), dom.sample(pts)
        v = evaluate(x, y)
        if v > worst:
            worst, witness = v, {"x": x, "y": y}
    return PropertyReport(f"lipschitz[{oracle.name}]", trials, worst, 0.0, witness, evaluate)


def second_moment(oracle, x, batch):
    g = oracle.subgradients(x, batch)
    sq = np.einsum("ij,ij->i", g, g)
    n = sq.shape[0]
    return float(np.mean(sq)), float(np.std(sq, ddof=1) / np.sqrt(n)) if n > 1 else 0.0


def second_moment_check(oracle, L: float, trials: int, rng: RngStream, samples: int = 2000,
                        domain: FeasibleSet | None = None, radius: float = 10.0) -> PropertyReport:
    """Worst ``mean |G(x, z)|^2 - L^2 - 3 se`` over random feasible ``x``; passes at ``<= 0``."""
    dom = _domain(oracle, domain, radius)
    pts = rng.split(0)

    def evaluate(x, stream):
        m, se = second_moment(oracle, x, oracle.sample(RngStream(*stream), samples))
        return float(m - L**2 - 3.0 * se)

    worst, witness = -np.inf, {}
    for k in range(max(1, trials)):
        x = dom.sample(pts)
        s = rng.split(k + 1)
        v = evaluate(x, (s.seed, s.stream_id))
        if v > worst:
            worst, witness = v, {"x": x, "stream": (s.seed, s.stream_id)}
    return PropertyReport(f"second_moment[{oracle.name}]", trials, worst, 0.0, witness, evaluate)


def estimate_lipschitz(oracle, trials: int, rng: RngStream, samples: int = 2000,
                       domain: FeasibleSet | None = None, radius: float = 10.0) -> float:
    """``sqrt(max_x mean |G(x, z)|^2)`` over random feasible points."""
    dom = _domain(oracle, domain, radius)
    pts = rng.split(0)
    worst = 0.0
    for k in range(max(1, trials)):
        m, _ = second_moment(oracle, dom.sample(pts), oracle.sample(rng.split(k + 1), samples))
        worst = max(worst, m)
    return float(np.sqrt(worst))
