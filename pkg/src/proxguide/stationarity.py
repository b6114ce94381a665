"""Proximal reference points, near-stationarity measures and certificates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RngStream, as_vector
from .errors import InvalidGamma, InvalidParams, UnsupportedDimension


@dataclass
class StationarityCertificate:
    """``x`` together with an approximate proximal point ``companion``.

    ``bound`` is the computable part ``2 gamma^-2 |x - x~|^2`` of the bound on
    ``dist(0, dF(x^))^2``. The term ``2 gamma^-2 |x~ - x^|^2`` is only reported
    (as ``tolerance_term``) when a reference ``x^`` is attached; nothing is
    claimed about its size otherwise.
    """

    point: np.ndarray
    companion: np.ndarray
    gamma: float
    reference: np.ndarray | None = None

    @property
    def estimate(self) -> float:
        return float(np.linalg.norm(self.point - self.companion) / self.gamma)

    @property
    def bound(self) -> float:
        return 2.0 * self.estimate**2

    @property
    def tolerance_term(self) -> float | None:
        if self.reference is None:
            return None
        return float(2.0 * np.sum((self.companion - self.reference) ** 2) / self.gamma**2)

    @property
    def total_bound(self) -> float | None:
        tol = self.tolerance_term
        return None if tol is None else self.bound + tol

    def as_row(self) -> dict:
        return {"estimate": self.estimate, "certified_bound": self.bound,
                "tolerance_term": "" if self.tolerance_term is None else self.tolerance_term}


@dataclass
class ProxReference:
    center: np.ndarray
    gamma: float
    point: np.ndarray
    method: str
    accuracy: float


def grid_prox(objective, x, gamma, lo, hi, n=20001):
    """Minimize ``objective(y) + |y - x|^2 / (2 gamma)`` over a dense grid.

    ``objective`` maps an ``(m, d)`` array of grid points to ``m`` values;
    supports ``d`` of 1 or 2. Returns ``(argmin, grid step)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    d = x.shape[0]
    if d == 1:
        g = np.linspace(lo, hi, n)[:, None]
    elif d == 2:
        m = int(np.sqrt(n))
        a = np.linspace(lo, hi, m)
        g = np.stack(np.meshgrid(a, a, indexing="ij"), axis=-1).reshape(-1, 2)
    else:
        raise UnsupportedDimension("grid search supports d <= 2")
    vals = objective(g) + np.sum((g - x) ** 2, axis=1) / (2.0 * gamma)
    step = (hi - lo) / ((n if d == 1 else int(np.sqrt(n))) - 1)
    return g[int(np.argmin(vals))].copy(), step


def prox_reference(x, gamma: float, oracle, method: str = "stochastic", budget: int = 100_000,
                   rng: RngStream | None = None, grid=None) -> ProxReference:
    """Proximal point of the oracle's objective at ``x``.

    ``method`` is ``"closed-form"`` (fixtures only), ``"grid"`` (d <= 2; ``grid``
    is ``(objective, lo, hi, n)`` with a vectorized objective) or
    ``"stochastic"`` (the inner solver run with ``J = budget``).
    """
    from .inner import PssmParams, pssm

    x = as_vector(x, oracle.dim)
    if not gamma > 0:
        raise InvalidGamma("gamma must be positive")
    if method == "closed-form":
        if not hasattr(oracle, "prox"):
            raise InvalidParams("closed-form prox only exists for fixture oracles")
        return ProxReference(x, gamma, oracle.prox(x, gamma), method, 0.0)
    if method == "grid":
        if oracle.dim > 2:
            raise UnsupportedDimension("grid search supports d <= 2")
        if grid is None:
            raise InvalidParams("grid method needs (objective, lo, hi, n)")
        objective, lo, hi, n = grid
        point, step = grid_prox(objective, x, gamma, lo, hi, n)
        return ProxReference(x, gamma, point, method, step * np.sqrt(oracle.dim))
    if method == "stochastic":
        if oracle.rho is not None and not gamma * oracle.rho < 1:
            raise InvalidGamma("stochastic prox needs gamma < 1/rho")
        if rng is None:
            raise InvalidParams("stochastic method needs an RngStream")
        rho = oracle.rho if oracle.rho is not None else 0.0
        res = pssm(x, oracle, PssmParams.paper(gamma, 1.0 / gamma - rho, budget), rng)
        return ProxReference(x, gamma, res.output, method, float("nan"))
    raise InvalidParams(f"unknown method {method!r}")


def step_length_check(x, ref: ProxReference, L: float) -> bool:
    """``gamma^-1 |x - x^| <= 2L`` up to the reference's accuracy."""
    x = np.asarray(x, dtype=np.float64)
    slack = ref.accuracy / ref.gamma if np.isfinite(ref.accuracy) else 0.0
    return bool(np.linalg.norm(x - ref.point) / ref.gamma <= 2.0 * L + slack + 1e-12)


def near_stationarity_radius(gap: float, gamma: float):
    """``(gap, gap / gamma)``: ``x`` lies within ``gap`` of the point ``x^`` whose
    subdifferential holds a vector of norm at most ``gap / gamma``."""
    if gap < 0 or not gamma > 0:
        raise InvalidParams("need gap >= 0 and gamma > 0")
    return float(gap), float(gap) / gamma


def grid_subdifferential_distance(objective, y: float, h: float) -> float:
    """``dist(0, [left slope, right slope])`` for a 1-d piecewise-smooth function,
    using one-sided difference quotients with step ``h``."""
    f0 = float(objective(np.array([[y]]))[0])
    left = (f0 - float(objective(np.array([[y - h]]))[0])) / h
    right = (float(objective(np.array([[y + h]]))[0]) - f0) / h
    lo, hi = min(left, right), max(left, right)
    if lo <= 0.0 <= hi:
        return 0.0
    return min(abs(lo), abs(hi))
