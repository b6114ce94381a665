"""Outer drivers: PGSG, the two-phase variant, the parameter-free variant and
the plain stochastic subgradient baseline, plus parameter derivation and
the theoretical bound evaluators."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, as_vector, relative_distance
from .errors import InvalidBeta, InvalidGamma, InvalidParams, InvalidProbability, InvalidStart, UnknownModulus
from .inner import BLOCK, Diminishing, PssmParams, pssm
from .problems import ProblemOracle
from .stationarity import StationarityCertificate

# child-stream index reserved for sampling the returned iterate
_SELECT_STREAM = 1 << 40


def ceil_exact(x: float) -> int:
    """Ceiling that ignores float noise of a few ulps above an integer."""
    r = round(x)
    if abs(x - r) <= 1e-12 * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


@dataclass
class PgsgParams:
    """Settings for PGSG. ``j`` is a constant inner count or one count per outer step.

    ``j_floor`` is the constant ``c`` in the lower bound ``j_t >= c / (gamma mu)^2``
    (11 for the expectation settings, 12 for the Markov-derived settings).
    """

    gamma: float
    rho: float
    T: int
    j: int | tuple
    eps: float | None = None
    Lambda: float | None = None
    Delta: float | None = None
    L: float | None = None
    j_floor: int = 11

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidGamma("gamma must be positive")
        if self.rho is None:
            raise UnknownModulus("PGSG needs a known weak-convexity modulus; use pfpgsg")
        if not self.mu > 0:
            raise InvalidGamma(f"gamma={self.gamma} must be below 1/rho={1 / self.rho if self.rho else math.inf}")
        self.T = max(1, int(self.T))
        if not isinstance(self.j, (int, np.integer)):
            self.j = tuple(int(v) for v in self.j)
        need = self.min_inner()
        js = [self.j] if isinstance(self.j, (int, np.integer)) else list(self.j)
        if min(js) < need:
            raise InvalidParams(f"inner iterations {min(js)} below required {need}")

    @property
    def mu(self) -> float:
        return 1.0 / self.gamma - self.rho

    def min_inner(self) -> int:
        return ceil_exact(self.j_floor / (self.gamma**2 * self.mu**2))

    def j_at(self, t: int) -> int:
        if isinstance(self.j, (int, np.integer)):
            return int(self.j)
        return self.j[min(t, len(self.j) - 1)]

    def pssm_params(self, t: int) -> PssmParams:
        return PssmParams.paper(self.gamma, self.mu, self.j_at(t))

    @classmethod
    def experiment(cls, gamma: float, j: int, T: int) -> "PgsgParams":
        """Experiment convention ``mu = 1/(2 gamma)``, i.e. ``rho`` assumed to be ``1/(2 gamma)``."""
        return cls(gamma=gamma, rho=1.0 / (2.0 * gamma), T=T, j=j)


def _check_gamma(gamma, rho):
    if rho is None:
        raise UnknownModulus("rho unknown; use pfpgsg")
    if not 0 < gamma < (math.inf if rho <= 0 else 1.0 / rho):
        raise InvalidGamma(f"gamma={gamma} must lie in (0, 1/rho)")
    return 1.0 / gamma - rho


def derive_pgsg_params(eps: float, Lambda: float | None, Delta: float, L: float,
                       rho: float, gamma: float) -> PgsgParams:
    """Inner counts and outer iterations guaranteeing an ``eps``-accurate point
    in expectation, or with probability ``1 - Lambda`` via Markov's inequality."""
    if not (eps > 0 and Delta >= 0 and L >= 0):
        raise InvalidParams("need eps > 0, Delta >= 0, L >= 0")
    mu = _check_gamma(gamma, rho)
    if Lambda is None:
        e, floor_const = eps, 11
    else:
        if not 0 < Lambda < 1:
            raise InvalidProbability("Lambda must lie in (0, 1)")
        e, floor_const = eps * Lambda, 12
    m = min(e, e * gamma**2)
    j = ceil_exact(max(576.0 * L**2 / (mu**2 * m), floor_const / (gamma**2 * mu**2)))
    T = max(1, ceil_exact(4.0 * Delta / (mu * m)))
    return PgsgParams(gamma, rho, T, max(1, j), eps, Lambda, Delta, L, floor_const)


@dataclass
class TwoPhaseParams:
    pgsg: PgsgParams
    S: int
    J: int

    def __post_init__(self):
        self.S = max(1, int(self.S))
        self.J = max(1, int(self.J))


def copies_for(Lambda: float) -> int:
    if not 0 < Lambda < 1:
        raise InvalidProbability("Lambda must lie in (0, 1)")
    return max(1, ceil_exact(math.log2(2.0 / Lambda)))


def derive_two_phase_params(eps, Lambda, Delta, L, rho, gamma) -> TwoPhaseParams:
    if not (eps > 0 and Delta >= 0 and L >= 0):
        raise InvalidParams("need eps > 0, Delta >= 0, L >= 0")
    S = copies_for(Lambda)
    mu = _check_gamma(gamma, rho)
    m24 = min(eps / 24.0, eps * gamma**2 / 24.0)
    j = ceil_exact(max(576.0 * L**2 / (mu**2 * m24), 11.0 / (gamma**2 * mu**2)))
    T = max(1, ceil_exact(4.0 * Delta / (mu * m24)))
    m = min(eps, eps * gamma**2)
    J = ceil_exact(max(48.0 * L**2 * math.sqrt(2.0) / (mu * m) * S / Lambda,
                       11.0 / (gamma**2 * mu**2) * math.sqrt(S / Lambda)))
    return TwoPhaseParams(PgsgParams(gamma, rho, T, j, eps, Lambda, Delta, L), S, J)


@dataclass
class PfpgsgParams:
    """Parameter-free schedule: ``gamma_t = prefactor (t+1)^-beta``, ``j_t = t + 44``
    and ``alpha_{t,j} = 4 gamma_t / (j + 1 + 288/(j+1))``.

    ``sampling`` selects the law of the returned index: ``"inverse-gamma"``
    draws ``R`` with probability proportional to ``1/gamma_t`` (the weighting
    under which the convergence bound is proved), ``"gamma"`` proportional to
    ``gamma_t`` as written in the algorithm listing.
    """

    beta: float
    T: int
    prefactor: float = 1.0
    sampling: str = "inverse-gamma"
    rho: float | None = None

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise InvalidBeta(f"beta={self.beta} must lie in (0, 1)")
        if not self.prefactor > 0:
            raise InvalidParams("prefactor must be positive")
        if self.sampling not in ("inverse-gamma", "gamma"):
            raise InvalidParams(f"unknown sampling rule {self.sampling!r}")
        self.T = max(1, int(self.T))
        # alpha_{t,j} <= 4 gamma_t / (2 sqrt(288)) < 2 gamma_t
        j = np.arange(0, 64)
        assert np.all(4.0 / (j + 1.0 + 288.0 / (j + 1.0)) < 2.0)

    def gamma_at(self, t):
        return self.prefactor * (np.asarray(t, dtype=np.float64) + 1.0) ** (-self.beta)

    @staticmethod
    def j_at(t: int) -> int:
        return int(t) + 44

    def alpha(self, t: int, j):
        return 4.0 * float(self.gamma_at(t)) / (np.asarray(j, dtype=np.float64) + 1.0 + 288.0 / (np.asarray(j, dtype=np.float64) + 1.0))

    @property
    def T0(self) -> int | None:
        if self.rho is None:
            return None
        return burn_in(self.rho, self.beta)

    def weights(self, T: int) -> np.ndarray:
        g = self.gamma_at(np.arange(T))
        w = 1.0 / g if self.sampling == "inverse-gamma" else g
        return w / w.sum()


def burn_in(rho: float, beta: float) -> int:
    """``T0 = ceil((2 rho)^(1/beta))``: first index with ``gamma_t <= 1/(2 rho)``."""
    return ceil_exact((2.0 * rho) ** (1.0 / beta))


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass
class OuterRunResult:
    point: np.ndarray
    R: int
    estimate: float  # gamma_R^-1 |x_R - x_{R+1}| (or the certificate companion)
    gamma_R: float
    T: int
    oracle_calls: int
    estimates: np.ndarray  # gamma_t^-1 |x_t - x_{t+1}| for every computed step
    calls_at: np.ndarray  # cumulative oracle calls when x_t became available
    companion: np.ndarray | None = None
    points: np.ndarray | None = None
    wall_time: float = 0.0
    relative_distances: np.ndarray | None = None
    truncated: bool = False
    extra: dict = field(default_factory=dict)


def _start(x0, oracle):
    x0 = as_vector(x0, oracle.dim, name="x0")
    if not oracle.feasible_set.contains(x0):
        raise InvalidStart("x0 is not feasible")
    return x0


def _outer_loop(x0, oracle, T, pssm_params_at, gamma_at, rng, budget):
    """Compute ``x_1 .. x_T`` (stopping early if the budget runs out)."""
    points = [x0]
    calls = [0]
    used = 0
    truncated = False
    for t in range(T):
        remaining = None if budget is None else budget - used
        if remaining is not None and remaining <= 0 and pssm_params_at(t).J > 1:
            truncated = True
            break
        res = pssm(points[-1], oracle, pssm_params_at(t), rng.split(t), max_calls=remaining)
        used += res.oracle_calls
        points.append(res.output)
        calls.append(used)
        if res.truncated:
            truncated = True
            break
    pts = np.array(points)
    gam = np.array([gamma_at(t) for t in range(len(points) - 1)])
    est = np.linalg.norm(pts[1:] - pts[:-1], axis=1) / gam if len(points) > 1 else np.zeros(0)
    return pts, np.array(calls), est, used, truncated


def _relative(oracle, pts):
    if oracle.minimizer is None:
        return None
    return np.array([relative_distance(p, oracle.minimizer) for p in pts])


def pgsg(x0, oracle: ProblemOracle, params: PgsgParams, rng: RngStream,
         budget: int | None = None, estimate_iters: int | None = None,
         keep_points: bool = False) -> OuterRunResult:
    """Proximally guided stochastic subgradient method.

    By default all of ``x_1 .. x_T`` are computed so that the estimate
    ``gamma^-1 |x_R - x_{R+1}|`` is available for every ``R``; the total cost is
    ``sum_{t<T} (j_t - 1)``. With ``estimate_iters`` only ``x_1 .. x_{T-1}``
    are computed and the companion point comes from one extra inner solve of
    that length started at ``x_R``. ``budget`` caps oracle calls; the solve that
    would overrun it is truncated and ``T`` shrinks accordingly.
    """
    t0 = time.perf_counter()
    x0 = _start(x0, oracle)
    n_steps = params.T if estimate_iters is None else params.T - 1
    pts, calls, est, used, truncated = _outer_loop(
        x0, oracle, n_steps, params.pssm_params, lambda t: params.gamma, rng, budget)
    sel = rng.split(_SELECT_STREAM)
    if estimate_iters is None:
        T_eff = max(1, len(pts) - 1)
        R = int(sel.integers(0, T_eff))
        companion = pts[R + 1] if len(pts) > 1 else pts[0]
    else:
        T_eff = len(pts)
        R = int(sel.integers(0, T_eff))
        remaining = None if budget is None else max(budget - used, 0)
        cert = pssm(pts[R], oracle, PssmParams.paper(params.gamma, params.mu, estimate_iters),
                    rng.split(_SELECT_STREAM + 1), max_calls=remaining)
        used += cert.oracle_calls
        truncated = truncated or cert.truncated
        companion = cert.output
    estimate = float(np.linalg.norm(pts[R] - companion) / params.gamma)
    return OuterRunResult(
        point=pts[R].copy(), R=R, estimate=estimate, gamma_R=params.gamma, T=T_eff,
        oracle_calls=used, estimates=est, calls_at=calls, companion=companion,
        points=pts if keep_points else None, wall_time=time.perf_counter() - t0,
        relative_distances=_relative(oracle, pts), truncated=truncated,
    )


def two_phase_pgsg(x0, oracle: ProblemOracle, params: TwoPhaseParams, rng: RngStream,
                   budget: int | None = None):
    """Run ``S`` independent PGSG copies, certify each candidate with an inner
    solve of length ``J`` and keep the one with the smallest certified step.

    Returns ``(x_star, certificate, copies)``. With ``budget`` each copy gets
    an equal share. Ties go to the lowest copy index.
    """
    x0 = _start(x0, oracle)
    share = None if budget is None else budget // params.S
    copies = [pgsg(x0, oracle, params.pgsg, rng.split(s), budget=share, estimate_iters=params.J)
              for s in range(params.S)]
    dists = [np.linalg.norm(c.point - c.companion) for c in copies]
    best = int(np.argmin(dists))
    c = copies[best]
    cert = StationarityCertificate(c.point, c.companion, params.pgsg.gamma)
    return c.point.copy(), cert, copies


def pfpgsg(x0, oracle: ProblemOracle, pf: PfpgsgParams, rng: RngStream,
           budget: int | None = None, keep_points: bool = False) -> OuterRunResult:
    """Parameter-free PGSG with shrinking ``gamma_t`` and growing ``j_t``."""
    t0 = time.perf_counter()
    x0 = _start(x0, oracle)

    def inner(t):
        return PssmParams(float(pf.gamma_at(t)), pf.j_at(t), Diminishing(float(pf.gamma_at(t))))

    pts, calls, est, used, truncated = _outer_loop(
        x0, oracle, pf.T, inner, lambda t: float(pf.gamma_at(t)), rng, budget)
    T_eff = max(1, len(pts) - 1)
    w = pf.weights(T_eff)
    u = rng.split(_SELECT_STREAM).random()
    R = int(min(np.searchsorted(np.cumsum(w), u, side="right"), T_eff - 1))
    companion = pts[R + 1] if len(pts) > 1 else pts[0]
    gR = float(pf.gamma_at(R))
    return OuterRunResult(
        point=pts[R].copy(), R=R, estimate=float(np.linalg.norm(pts[R] - companion) / gR),
        gamma_R=gR, T=T_eff, oracle_calls=used, estimates=est, calls_at=calls,
        companion=companion, points=pts if keep_points else None,
        wall_time=time.perf_counter() - t0, relative_distances=_relative(oracle, pts),
        truncated=truncated,
    )


@dataclass
class SgdResult:
    point: np.ndarray
    oracle_calls: int
    hit: int | None  # evaluations needed to reach the tolerance, None if never
    relative_distance: float | None
    wall_time: float = 0.0


def sgd_baseline(x0, oracle: ProblemOracle, gamma: float, beta: float, budget: int,
                 rng: RngStream, tol: float | None = 0.05) -> SgdResult:
    """Projected stochastic subgradient method with steps ``gamma / (t + 10)^beta``."""
    if budget < 1:
        raise InvalidParams("budget must be >= 1")
    if gamma < 0:
        raise InvalidParams("gamma must be nonnegative")
    t0 = time.perf_counter()
    x = _start(x0, oracle)
    hit = None
    for start in range(0, budget, BLOCK):
        stop = min(start + BLOCK, budget)
        batch = oracle.sample(rng, stop - start)
        steps = gamma / (np.arange(start, stop, dtype=np.float64) + 10.0) ** beta
        h = oracle.sgd_block(x, batch, steps, tol if hit is None else None)
        if hit is None and h >= 0:
            hit = start + h + 1
    rd = relative_distance(x, oracle.minimizer) if oracle.minimizer is not None else None
    return SgdResult(x, budget, hit, rd, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Theoretical bounds
# ---------------------------------------------------------------------------


@dataclass
class TheoreticalBound:
    value: float
    terms: dict


def pgsg_bound(T: int, j, mu: float, L: float, Delta: float) -> TheoreticalBound:
    """Bound on ``E|x_R - x^_R|^2`` after ``T`` outer iterations."""
    if not mu > 0:
        raise InvalidParams("mu must be positive")
    js = np.full(T, float(j)) if np.isscalar(j) else np.asarray(j, dtype=np.float64)[:T]
    if js.shape[0] != T:
        raise InvalidParams("need one inner count per outer iteration")
    noise = float(np.sum(72.0 * L**2 / (mu * (js + 1.0))))
    value = 4.0 / (T * mu) * (Delta + noise)
    return TheoreticalBound(value, {"Delta": Delta, "noise": noise, "prefactor": 4.0 / (T * mu)})


def tail_zeta(s: float, start: int, n_terms: int = 10_000) -> float:
    """``sum_{t >= start} t^-s`` for ``s > 1``: explicit partial sum plus an
    Euler-Maclaurin tail (integral, half term and two derivative corrections)."""
    if not s > 1 or start < 1:
        raise InvalidParams("need s > 1 and start >= 1")
    t = np.arange(start, start + n_terms, dtype=np.float64)
    partial = float(np.sum(t[::-1] ** -s))
    N = float(start + n_terms)
    tail = (N ** (1 - s) / (s - 1) + 0.5 * N**-s + s * N ** (-s - 1) / 12.0
            - s * (s + 1) * (s + 2) * N ** (-s - 3) / 720.0)
    return partial + tail


def pfpgsg_bound(T: int, beta: float, rho: float, L: float, Delta: float) -> TheoreticalBound:
    """Bound on ``E|x_R - x^_R|^2`` for the parameter-free method."""
    if not 0 < beta < 1:
        raise InvalidBeta("beta must lie in (0, 1)")
    if not rho > 0:
        raise InvalidParams("rho must be positive")
    T0 = burn_in(rho, beta)
    C = tail_zeta(1.0 + beta, T0)
    inner = (144.0 * C + T0 * math.log(T0 + 125.0) + T0 / 2.0) * L**2
    value = 8.0 * (1.0 + beta) / (T + 1.0) ** (1.0 + beta) * (Delta + inner)
    return TheoreticalBound(value, {"T0": T0, "C": C, "noise": inner, "Delta": Delta})


# ---------------------------------------------------------------------------
# Budget helpers
# ---------------------------------------------------------------------------


def pgsg_outer_for_budget(budget: int, j: int) -> int:
    """Largest ``T`` with ``T (j - 1) <= budget`` (at least 1)."""
    return max(1, budget // max(j - 1, 1))


def two_phase_outer_for_budget(budget: int, j: int, S: int, J_per_T: int = 5) -> int:
    """Largest ``T`` with ``S ((T-1)(j-1) + J_per_T*T - 1) <= budget``."""
    share = budget // S
    T = max(1, (share + j - 1 + 1) // (j - 1 + J_per_T))
    while T > 1 and (T - 1) * (j - 1) + J_per_T * T - 1 > share:
        T -= 1
    return T


def pfpgsg_outer_for_budget(budget: int) -> int:
    """Largest ``T`` with ``sum_{t<T} (t + 43) <= budget`` (at least 1)."""
    # T^2/2 + 42.5 T <= budget
    T = int((-42.5 + math.sqrt(42.5**2 + 2.0 * budget)))
    while T > 1 and T * (T - 1) // 2 + 43 * T > budget:
        T -= 1
    while (T + 1) * T // 2 + 43 * (T + 1) <= budget:
        T += 1
    return max(1, T)
