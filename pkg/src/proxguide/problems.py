"""Stochastic weakly convex problem oracles.

An oracle bundles a sampler, a per-sample loss ``f(x, z)``, a measurable
subgradient selection ``G(x, z)``, the feasible set and the declared
constants (weak-convexity modulus ``rho``, second-moment bound ``L``).
Samples are drawn in batches; a batch of ``n`` samples costs ``n`` oracle
calls when consumed by a solver.

sign(0) is taken as +1 in every selection.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .core import (
    Ball,
    CappedSimplex,
    FeasibleSet,
    Product,
    RngStream,
    as_vector,
    check_finite,
    sample_bernoulli,
    sample_laplace,
    unit_sphere,
)
from .errors import DegenerateInstance, InvalidConfig, InvalidInstance, NumericFault

DEFAULT_RADIUS = 1e6


def _sign(r):
    return np.where(r >= 0.0, 1.0, -1.0)


class ProblemOracle:
    """Base oracle. Subclasses implement ``sample``, ``loss`` and ``subgradient``.

    ``rho`` or ``lipschitz`` of ``None`` means the constant is unknown.
    """

    name = "oracle"

    def __init__(self, dim: int, feasible_set: FeasibleSet, rho=None, lipschitz=None,
                 minimizer=None):
        self.dim = int(dim)
        self.feasible_set = feasible_set
        self.rho = None if rho is None else float(rho)
        self.lipschitz = None if lipschitz is None else float(lipschitz)
        self.minimizer = None if minimizer is None else as_vector(minimizer, self.dim)

    def sample(self, rng: RngStream, n: int):
        raise NotImplementedError

    def loss(self, x, batch) -> np.ndarray:
        """Per-sample losses ``f(x, z_i)`` for every sample in ``batch``."""
        raise NotImplementedError

    def subgradient(self, x, batch, i: int) -> np.ndarray:
        """Selection ``G(x, z_i)``."""
        raise NotImplementedError

    def subgradients(self, x, batch) -> np.ndarray:
        return np.array([self.subgradient(x, batch, i) for i in range(len(batch))])

    def sample_modulus(self, batch) -> np.ndarray:
        """Per-sample weak-convexity modulus; defaults to the declared ``rho``."""
        if self.rho is None:
            raise InvalidInstance(f"{self.name}: no per-sample modulus available")
        return np.full(len(batch), self.rho)

    def objective(self, x, batch) -> float:
        """Empirical mean of the loss over ``batch``."""
        return float(np.mean(self.loss(x, batch)))

    # -- solver hooks -------------------------------------------------------

    def pssm_block(self, y, y0, acc, batch, alphas, inv_gamma, weight0, trace=None):
        """Run one subgradient step per sample of ``batch`` on the prox subproblem.

        Updates ``y`` and the weighted sum ``acc`` in place; iterate ``i`` of the
        block enters ``acc`` with weight ``weight0 + i``. Rows of ``trace`` (if
        given) receive the iterates.
        """
        proj = self.feasible_set._project
        for i in range(len(batch)):
            v = self.subgradient(y, batch, i) + inv_gamma * (y - y0)
            y[:] = proj(y - alphas[i] * v)
            acc += (weight0 + i) * y
            if trace is not None:
                trace[i] = y
        check_finite(y, "inner iterate")

    def sgd_block(self, x, batch, steps, tol=None):
        """Plain projected subgradient steps; returns the first step index whose
        iterate is within relative distance ``tol`` of ``+-minimizer`` (or -1)."""
        proj = self.feasible_set._project
        hit = -1
        ref = self.minimizer
        for i in range(len(batch)):
            x[:] = proj(x - steps[i] * self.subgradient(x, batch, i))
            if hit < 0 and tol is not None and ref is not None:
                dist = min(np.linalg.norm(x - ref), np.linalg.norm(x + ref))
                if dist <= tol * np.linalg.norm(ref):
                    hit = i
        check_finite(x, "iterate")
        return hit


# ---------------------------------------------------------------------------
# Robust phase retrieval
# ---------------------------------------------------------------------------


@dataclass
class PhaseBatch:
    """Samples ``(a, delta, xi)``; ``target = <a, xbar>^2 + delta * xi``."""

    A: np.ndarray
    delta: np.ndarray
    xi: np.ndarray
    target: np.ndarray

    def __len__(self):
        return self.A.shape[0]


class PhaseRetrievalOracle(ProblemOracle):
    name = "phase_retrieval"

    def __init__(self, xbar, radius=DEFAULT_RADIUS, outlier_prob=0.25, laplace_scale=1.0):
        xbar = as_vector(xbar, name="xbar")
        if xbar.shape[0] < 1:
            raise DegenerateInstance("empty xbar")
        if not np.linalg.norm(xbar) > 0:
            raise DegenerateInstance("xbar must be nonzero")
        if not radius > 0:
            raise InvalidInstance("radius must be positive")
        d = xbar.shape[0]
        super().__init__(d, Ball.origin(d, radius), rho=2.0, minimizer=xbar)
        self.xbar = xbar
        self.radius = float(radius)
        self.outlier_prob = float(outlier_prob)
        self.laplace_scale = float(laplace_scale)

    def sample(self, rng, n):
        A = rng.standard_normal((n, self.dim))
        delta = sample_bernoulli(self.outlier_prob, rng, size=n)
        xi = sample_laplace(self.laplace_scale, rng, size=n)
        target = (A @ self.xbar) ** 2 + delta * xi
        return PhaseBatch(A, delta, xi, target)

    def loss(self, x, batch):
        return np.abs((batch.A @ x) ** 2 - batch.target)

    def subgradient(self, x, batch, i):
        a = batch.A[i]
        ip = a @ x
        return 2.0 * ip * _sign(ip * ip - batch.target[i]) * a

    def subgradients(self, x, batch):
        ip = batch.A @ x
        return (2.0 * ip * _sign(ip * ip - batch.target))[:, None] * batch.A

    def sample_modulus(self, batch):
        return 2.0 * np.einsum("ij,ij->i", batch.A, batch.A)

    def pssm_block(self, y, y0, acc, batch, alphas, inv_gamma, weight0, trace=None):
        bad = _kernels.pssm_phase(y, y0, acc, batch.A, batch.target,
                                  np.ascontiguousarray(alphas, dtype=np.float64),
                                  float(inv_gamma), self.radius, float(weight0), trace)
        if bad >= 0:
            raise NumericFault(f"non-finite inner iterate at block step {bad}")

    def sgd_block(self, x, batch, steps, tol=None):
        hit, bad = _kernels.sgd_phase(x, batch.A, batch.target,
                                      np.ascontiguousarray(steps, dtype=np.float64),
                                      self.radius, self.xbar,
                                      float(tol) if tol is not None else -1.0)
        if bad >= 0:
            raise NumericFault(f"non-finite iterate at block step {bad}")
        return hit


def phase_retrieval_oracle(d: int, xbar, radius: float = DEFAULT_RADIUS) -> PhaseRetrievalOracle:
    """Robust real phase retrieval with Gaussian ``a``, ``P(delta=1)=0.25`` and
    Laplace(1) corruption, constrained to the ball of the given radius."""
    xbar = as_vector(xbar, d, name="xbar")
    return PhaseRetrievalOracle(xbar, radius)


# ---------------------------------------------------------------------------
# Nonsmooth trimmed estimation
# ---------------------------------------------------------------------------


@dataclass
class ConvexLoss:
    """A convex component loss with value and subgradient callables."""

    value: Callable[[np.ndarray], float]
    subgradient: Callable[[np.ndarray], np.ndarray]


def abs_residual(c, y) -> ConvexLoss:
    """``|<c, x> - y|``, Lipschitz with constant ``|c|``."""
    c = as_vector(c, name="c")
    y = float(y)
    return ConvexLoss(lambda x: abs(c @ x - y), lambda x: _sign(c @ x - y) * c)


@dataclass
class TrimmedInstance:
    losses: Sequence[ConvexLoss]
    lipschitz: float
    h: int
    x_dim: int
    x_radius: float = DEFAULT_RADIUS

    @property
    def n(self):
        return len(self.losses)


@dataclass
class IndexBatch:
    idx: np.ndarray

    def __len__(self):
        return self.idx.shape[0]


class TrimmedOracle(ProblemOracle):
    """Joint variable ``(w, x)``; objective ``(1/n) sum_i w_i f_i(x)`` over the
    capped simplex times a ball. A sample is a uniform index ``i`` and the
    per-sample loss is ``w_i f_i(x)`` (the objective scaled by ``n``)."""

    name = "trimmed"

    def __init__(self, instance: TrimmedInstance):
        n = instance.n
        if n < 1 or not 1 <= instance.h <= n:
            raise InvalidInstance(f"h={instance.h} must lie in 1..{n}")
        if not instance.lipschitz > 0:
            raise InvalidInstance("component Lipschitz bound must be positive")
        fs = Product((CappedSimplex(n, float(instance.h)),
                      Ball.origin(instance.x_dim, instance.x_radius)))
        super().__init__(n + instance.x_dim, fs, rho=instance.lipschitz)
        self.instance = instance
        self.n = n

    def split(self, z):
        z = np.asarray(z, dtype=np.float64)
        return z[: self.n], z[self.n:]

    def sample(self, rng, n):
        return IndexBatch(rng.integers(0, self.n, size=n))

    def loss(self, z, batch):
        w, x = self.split(z)
        return np.array([w[i] * self.instance.losses[i].value(x) for i in batch.idx])

    def subgradient(self, z, batch, i):
        w, x = self.split(z)
        k = int(batch.idx[i])
        f = self.instance.losses[k]
        g = np.zeros(self.dim)
        g[k] = f.value(x)
        g[self.n:] = w[k] * f.subgradient(x)
        return g

    def full_objective(self, z) -> float:
        w, x = self.split(z)
        return float(sum(wi * f.value(x) for wi, f in zip(w, self.instance.losses)) / self.n)

    def component_values(self, x) -> np.ndarray:
        return np.array([f.value(x) for f in self.instance.losses])


def trimmed_oracle(instance: TrimmedInstance) -> TrimmedOracle:
    return TrimmedOracle(instance)


def regression_trimmed_instance(n: int, h: int, x_dim: int, rng: RngStream,
                                outlier_scale: float = 10.0,
                                x_radius: float = DEFAULT_RADIUS) -> TrimmedInstance:
    """Absolute-residual regression with ``n - h`` grossly corrupted responses."""
    C = rng.standard_normal((n, x_dim))
    x_true = rng.standard_normal(x_dim)
    y = C @ x_true
    bad = rng.generator.permutation(n)[: n - h]
    y[bad] += outlier_scale * rng.standard_normal(len(bad))
    losses = [abs_residual(C[i], y[i]) for i in range(n)]
    return TrimmedInstance(losses, float(np.max(np.linalg.norm(C, axis=1))), h, x_dim, x_radius)


# ---------------------------------------------------------------------------
# Censored block model
# ---------------------------------------------------------------------------


@dataclass
class CensoredBlockInstance:
    """Community vector ``xbar`` in {-1, 1}^d and the observed matrix ``Mhat``.

    Only unordered off-diagonal pairs ``i < j`` with ``Mhat[i, j] != 0`` enter
    the objective.
    """

    xbar: np.ndarray
    p: float
    eps_corr: float
    Mhat: np.ndarray

    def observed(self):
        iu, ju = np.triu_indices(self.Mhat.shape[0], k=1)
        keep = self.Mhat[iu, ju] != 0
        return iu[keep], ju[keep], self.Mhat[iu, ju][keep].astype(np.float64)


def random_censored_instance(d: int, p: float, eps_corr: float, rng: RngStream) -> CensoredBlockInstance:
    xbar = np.where(rng.random(d) < 0.5, -1.0, 1.0)
    M = np.outer(xbar, xbar)
    u = rng.random((d, d))
    Mhat = np.where(u < p * (1 - eps_corr), M, np.where(u < p, -M, 0.0))
    Mhat = np.triu(Mhat, 1)
    Mhat = Mhat + Mhat.T
    return CensoredBlockInstance(xbar, p, eps_corr, Mhat)


class CensoredBlockOracle(ProblemOracle):
    """Finite sum ``sum_{observed ij} |x_i x_j - Mhat_ij|`` sampled one entry at a time.

    With ``normalized`` the objective is divided by the number of observed
    entries ``K``; otherwise per-sample losses and selections are scaled by
    ``K`` so that their mean is the unnormalized sum. Each term is 1-weakly
    convex, so the per-sample modulus is the same scale factor.
    """

    name = "censored_block"

    def __init__(self, instance: CensoredBlockInstance, radius=DEFAULT_RADIUS,
                 normalized=True, rho=None):
        self.rows, self.cols, self.vals = instance.observed()
        self.n_obs = len(self.vals)
        if self.n_obs == 0:
            raise InvalidInstance("no observed entries")
        d = instance.Mhat.shape[0]
        super().__init__(d, Ball.origin(d, radius), rho=rho, minimizer=instance.xbar)
        self.instance = instance
        self.normalized = normalized
        self.scale = 1.0 if normalized else float(self.n_obs)

    def sample(self, rng, n):
        return IndexBatch(rng.integers(0, self.n_obs, size=n))

    def loss(self, x, batch):
        k = batch.idx
        i, j = self.rows[k], self.cols[k]
        return self.scale * np.abs(x[i] * x[j] - self.vals[k])

    def subgradient(self, x, batch, idx):
        k = int(batch.idx[idx])
        i, j = self.rows[k], self.cols[k]
        s = self.scale * (1.0 if x[i] * x[j] - self.vals[k] >= 0 else -1.0)
        g = np.zeros(self.dim)
        g[i] += s * x[j]
        g[j] += s * x[i]
        return g

    def sample_modulus(self, batch):
        return np.full(len(batch), self.scale)

    def full_objective(self, x) -> float:
        total = np.abs(x[self.rows] * x[self.cols] - self.vals).sum()
        return float(total / self.n_obs if self.normalized else total)


def censored_block_oracle(instance: CensoredBlockInstance, radius: float = DEFAULT_RADIUS,
                          normalized: bool = True, rho="estimate", rng: RngStream | None = None,
                          trials: int = 10_000, sweep_radius: float | None = None) -> CensoredBlockOracle:
    """Build the oracle; ``rho="estimate"`` declares the modulus found by a
    three-point sweep on the feasible ball (capped at ``sweep_radius`` if given)."""
    oracle = CensoredBlockOracle(instance, radius, normalized)
    if rho == "estimate":
        from .verify import estimate_modulus

        rng = rng if rng is not None else RngStream(0)
        domain = oracle.feasible_set if sweep_radius is None else Ball.origin(oracle.dim, sweep_radius)
        oracle.rho = estimate_modulus(lambda x: oracle.full_objective(x), domain, trials, rng)
    elif rho is not None:
        oracle.rho = float(rho)
    return oracle


# ---------------------------------------------------------------------------
# Deterministic fixtures with closed-form proximal points
# ---------------------------------------------------------------------------


@dataclass
class NullBatch:
    n: int

    def __len__(self):
        return self.n


class FixtureOracle(ProblemOracle):
    """Noiseless oracle for ``|x|_1``, ``|x|^2/2`` or ``-|x|^2/2`` on a ball."""

    KINDS = ("abs-value", "convex-quadratic", "concave-quadratic")

    def __init__(self, kind: str, d: int, radius: float = 10.0):
        if kind not in self.KINDS:
            raise InvalidConfig(f"unknown fixture kind {kind!r}")
        rho = {"abs-value": 0.0, "convex-quadratic": 0.0, "concave-quadratic": 1.0}[kind]
        lip = np.sqrt(d) if kind == "abs-value" else radius
        super().__init__(d, Ball.origin(d, radius), rho=rho, lipschitz=lip,
                         minimizer=None)
        self.kind = kind
        self.name = kind

    def sample(self, rng, n):
        return NullBatch(n)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "abs-value":
            return float(np.abs(x).sum())
        q = 0.5 * float(x @ x)
        return q if self.kind == "convex-quadratic" else -q

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "abs-value":
            return _sign(x)
        return x.copy() if self.kind == "convex-quadratic" else -x

    def loss(self, x, batch):
        return np.full(len(batch), self.value(x))

    def subgradient(self, x, batch, i):
        return self.gradient(x)

    def prox(self, x, gamma: float) -> np.ndarray:
        """Closed-form ``argmin_y f(y) + |y - x|^2 / (2 gamma)`` (unconstrained)."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "abs-value":
            return np.sign(x) * np.maximum(np.abs(x) - gamma, 0.0)
        if self.kind == "convex-quadratic":
            return x / (1.0 + gamma)
        if gamma >= 1.0:
            raise InvalidInstance("concave-quadratic prox needs gamma < 1")
        return x / (1.0 - gamma)

    def subdifferential_distance(self, x) -> float:
        """``dist(0, df(x))`` in closed form."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "abs-value":
            return float(np.sqrt(np.sum(np.where(x == 0.0, 0.0, 1.0))))
        return float(np.linalg.norm(x))


def synthetic_prox_test_oracle(kind: str, d: int, radius: float = 10.0) -> FixtureOracle:
    return FixtureOracle(kind, d, radius)


# ---------------------------------------------------------------------------
# Construction from structured config
# ---------------------------------------------------------------------------


def build_problem(config: dict) -> ProblemOracle:
    """Construct an oracle from a config mapping.

    Keys: ``kind`` (phase_retrieval | trimmed | censored_block | abs-value |
    convex-quadratic | concave-quadratic), ``d``, ``radius``, ``seed``
    (instance generation), ``n``/``h`` for trimmed, ``p``/``eps_corr``
    (and ``normalized``) for censored block.
    """
    cfg = dict(config)
    kind = cfg.get("kind", "phase_retrieval")
    try:
        d = int(cfg["d"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig("problem config needs an integer 'd'") from exc
    radius = float(cfg.get("radius", DEFAULT_RADIUS))
    rng = RngStream(int(cfg.get("seed", 0)), 0)
    if kind == "phase_retrieval":
        xbar = unit_sphere(d, rng, float(cfg.get("xbar_norm", 1.0)))
        return phase_retrieval_oracle(d, xbar, radius)
    if kind == "trimmed":
        n, h = int(cfg.get("n", 20)), int(cfg.get("h", 15))
        return trimmed_oracle(regression_trimmed_instance(n, h, d, rng, x_radius=radius))
    if kind == "censored_block":
        inst = random_censored_instance(d, float(cfg.get("p", 0.5)), float(cfg.get("eps_corr", 0.1)), rng)
        return censored_block_oracle(inst, radius, bool(cfg.get("normalized", True)),
                                     rng=rng.split(1), sweep_radius=min(radius, 10.0))
    if kind in FixtureOracle.KINDS:
        return synthetic_prox_test_oracle(kind, d, radius if "radius" in cfg else 10.0)
    raise InvalidConfig(f"unknown problem kind {kind!r}")


def load_problem(path) -> ProblemOracle:
    with open(path) as fh:
        return build_problem(json.load(fh))
