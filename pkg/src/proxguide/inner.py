"""Projected stochastic subgradient method for proximal subproblems.

Given a center ``y0`` and ``gamma``, approximately minimizes
``F(y) + |y - y0|^2 / (2 gamma)`` over the feasible set and returns the
weighted average ``2/(J(J+1)) * sum_{j<J} (j+1) y_j``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RngStream, as_vector
from .errors import InvalidParams, InvalidStart, InvalidStrongConvexity
from .problems import ProblemOracle

BLOCK = 2048


def alpha_schedule(mu: float, gamma: float, j):
    """Strongly convex stepsize ``2 / (mu (j + 2 + 36 / (gamma^4 mu^4 (j+1))))``.

    ``j`` may be an int or an integer array.
    """
    if not mu > 0:
        raise InvalidStrongConvexity(f"mu={mu} must be positive")
    if not gamma > 0:
        raise InvalidParams(f"gamma={gamma} must be positive")
    j = np.asarray(j, dtype=np.float64)
    out = 2.0 / (mu * (j + 2.0 + 36.0 / (gamma**4 * mu**4 * (j + 1.0))))
    return float(out) if out.ndim == 0 else out


def diminishing_alpha(gamma: float, j):
    """``4 gamma / (j + 1 + 288 / (j + 1))``; never exceeds ``gamma / sqrt(18)``."""
    j = np.asarray(j, dtype=np.float64)
    out = 4.0 * gamma / (j + 1.0 + 288.0 / (j + 1.0))
    return float(out) if out.ndim == 0 else out


class StepRule:
    def alphas(self, start: int, stop: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class PaperAlpha(StepRule):
    mu: float
    gamma: float

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidStrongConvexity(f"mu={self.mu} must be positive")

    def alphas(self, start, stop):
        return alpha_schedule(self.mu, self.gamma, np.arange(start, stop))


@dataclass(frozen=True)
class Diminishing(StepRule):
    gamma: float

    def alphas(self, start, stop):
        return diminishing_alpha(self.gamma, np.arange(start, stop))


@dataclass(frozen=True, eq=False)
class Custom(StepRule):
    sequence: np.ndarray

    def alphas(self, start, stop):
        seq = np.asarray(self.sequence, dtype=np.float64)
        if stop > seq.shape[0]:
            raise InvalidParams("custom step sequence too short")
        return seq[start:stop]


@dataclass(frozen=True)
class PssmParams:
    gamma: float
    J: int
    rule: StepRule

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidParams("gamma must be positive")
        if int(self.J) < 1:
            raise InvalidParams("J must be >= 1")
        if isinstance(self.rule, Diminishing):
            a = self.rule.alphas(0, min(int(self.J), 1000))
            if np.any(a <= 0) or np.any(a > 2 * self.gamma):
                raise InvalidParams("diminishing rule needs 0 < alpha_j <= 2 gamma")

    @classmethod
    def paper(cls, gamma: float, mu: float, J: int) -> "PssmParams":
        return cls(gamma, int(J), PaperAlpha(mu, gamma))


@dataclass
class InnerRunResult:
    output: np.ndarray
    last: np.ndarray
    oracle_calls: int
    iterations: int  # number of averaged points, i.e. the effective J
    truncated: bool = False
    trace: np.ndarray | None = None


def pssm(y0, oracle: ProblemOracle, params: PssmParams, rng: RngStream,
         max_calls: int | None = None, trace: bool = False) -> InnerRunResult:
    """Run ``J - 1`` projected steps on the proximal subproblem centered at ``y0``.

    One sample is drawn per step. With ``max_calls`` the run stops early once
    that many oracle calls are spent and returns the weighted average of the
    iterates produced so far (``truncated`` is then set).
    """
    y0 = as_vector(y0, oracle.dim, name="y0")
    if not oracle.feasible_set.contains(y0):
        raise InvalidStart("starting point is not feasible")
    steps = int(params.J) - 1
    truncated = False
    if max_calls is not None and steps > max_calls:
        steps, truncated = max(int(max_calls), 0), True

    y = y0.copy()
    acc = y0.copy()  # weight 1 for y_0
    tr = np.empty((steps + 1, oracle.dim)) if trace else None
    if trace:
        tr[0] = y0
    inv_gamma = 1.0 / params.gamma
    for start in range(0, steps, BLOCK):
        stop = min(start + BLOCK, steps)
        batch = oracle.sample(rng, stop - start)
        alphas = params.rule.alphas(start, stop)
        oracle.pssm_block(y, y0, acc, batch, alphas, inv_gamma, start + 2.0,
                          tr[start + 1: stop + 1] if trace else None)
    J_eff = steps + 1
    out = acc * (2.0 / (J_eff * (J_eff + 1.0)))
    return InnerRunResult(out, y, steps, J_eff, truncated, tr)


def expected_inner_gap_bound(mu: float, gamma: float, L: float, J: int, dist0_sq: float):
    """Expected-error bounds for the weighted average after ``J`` iterations.

    Returns ``(gap_bound, dist_bound, step_bound)``: bounds on the expected
    subproblem gap, on ``E|y~ - y^|^2`` and on ``E|y0 - y~|^2``.
    """
    if not mu > 0:
        raise InvalidStrongConvexity(f"mu={mu} must be positive")
    g4m4 = gamma**4 * mu**4
    JJ = J * (J + 1.0)
    gap = 72.0 * L**2 / (mu * (J + 1.0)) + 30.0 * dist0_sq / (gamma**4 * mu**3 * JJ)
    dist = 144.0 * L**2 / (mu**2 * (J + 1.0)) + 60.0 * dist0_sq / (g4m4 * JJ)
    step = 288.0 * L**2 / (mu**2 * (J + 1.0)) + (2.0 + 120.0 / (g4m4 * JJ)) * dist0_sq
    return gap, dist, step
