"""Vectors, splittable randomness, samplers and Euclidean projections.

All arithmetic is float64. Every public operation rejects non-finite input
with :class:`~proxguide.errors.NumericFault` instead of propagating it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidDimension,
    InvalidProbability,
    InvalidScale,
    NumericFault,
)

_MASK64 = (1 << 64) - 1


def as_vector(x, d: int | None = None, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite 1-d float64 array (copied)."""
    v = np.array(x, dtype=np.float64).reshape(-1)
    if d is not None and v.shape[0] != d:
        raise InvalidDimension(f"{name} has dimension {v.shape[0]}, expected {d}")
    check_finite(v, name)
    return v


def check_finite(x: np.ndarray, name: str = "x") -> None:
    if not np.all(np.isfinite(x)):
        raise NumericFault(f"non-finite entry in {name}")


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Backed by numpy's Philox generator with the two 64-bit words used as the
    128-bit key, so equal keys give bit-identical sequences and distinct keys
    give independent streams. Use :meth:`split` to derive child streams.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        seed, stream_id = int(seed), int(stream_id)
        if not (0 <= seed <= _MASK64 and 0 <= stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be 64-bit unsigned integers")
        self.seed = seed
        self.stream_id = stream_id
        key = np.array([seed, stream_id], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def split(self, index: int) -> "RngStream":
        """Child stream ``index``; depends only on this stream's key."""
        child = _splitmix64(self.stream_id ^ _splitmix64(int(index) + 1))
        return RngStream(self.seed, child)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    # thin wrappers used by the samplers below
    def random(self, size=None):
        return self.generator.random(size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)


def sample_gaussian(d: int, rng: RngStream) -> np.ndarray:
    if d < 1:
        raise InvalidDimension("d must be >= 1")
    return rng.standard_normal(d)


def sample_bernoulli(p: float, rng: RngStream, size=None):
    """1 with probability ``p``; an int, or an int8 array when ``size`` is given."""
    if not 0.0 <= p <= 1.0:
        raise InvalidProbability(f"p={p} outside [0, 1]")
    u = rng.random(size)
    if size is None:
        return int(u < p)
    return (u < p).astype(np.int8)


def laplace_icdf(u, scale: float = 1.0):
    """Inverse CDF of the zero-mean Laplace law."""
    if scale <= 0:
        raise InvalidScale(f"scale={scale} must be positive")
    u = np.asarray(u, dtype=np.float64)
    c = u - 0.5
    out = -scale * np.sign(c) * np.log1p(-2.0 * np.abs(c))
    return out + 0.0 if out.ndim else float(out) + 0.0


def _open_uniform(rng: RngStream, size):
    # (k + 1/2) / 2^53 lies strictly inside (0, 1) and is exact in float64
    k = rng.integers(0, 1 << 53, size=size)
    return (k + 0.5) / float(1 << 53)


def sample_laplace(scale: float, rng: RngStream, size=None):
    if scale <= 0:
        raise InvalidScale(f"scale={scale} must be positive")
    return laplace_icdf(_open_uniform(rng, size), scale)


# ---------------------------------------------------------------------------
# Feasible sets
# ---------------------------------------------------------------------------


class FeasibleSet:
    """Closed convex set with exact projection."""

    dim: int

    def project(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        out = self._project(x)
        check_finite(out, "projection")
        return out

    def contains(self, x, tol: float = 1e-10) -> bool:
        x = as_vector(x, self.dim)
        return bool(np.linalg.norm(self._project(x) - x) <= tol * (1.0 + np.linalg.norm(x)))

    def _project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: RngStream) -> np.ndarray:
        """A random point of the set (not necessarily uniform for every kind)."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ball(FeasibleSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, name="center"))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @classmethod
    def origin(cls, d: int, radius: float) -> "Ball":
        if d < 1:
            raise InvalidDimension("d must be >= 1")
        return cls(np.zeros(d), float(radius))

    @property
    def dim(self):
        return self.center.shape[0]

    def _project(self, x):
        diff = x - self.center
        nrm = np.linalg.norm(diff)
        if nrm <= self.radius:
            return x.copy()
        return self.center + diff * (self.radius / nrm)

    def sample(self, rng):
        """Uniform on the ball."""
        g = rng.standard_normal(self.dim)
        g /= np.linalg.norm(g)
        r = self.radius * rng.random() ** (1.0 / self.dim)
        return self.center + r * g


@dataclass(frozen=True, eq=False)
class Box(FeasibleSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, name="lower")
        hi = as_vector(self.upper, lo.shape[0], name="upper")
        if np.any(lo > hi):
            raise ValueError("box has lower > upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.shape[0]

    def _project(self, x):
        return np.clip(x, self.lower, self.upper)

    def sample(self, rng):
        return self.lower + (self.upper - self.lower) * rng.random(self.dim)


def project_capped_simplex(x: np.ndarray, h: float, cap: float = 1.0) -> np.ndarray:
    """Project onto ``{w : 0 <= w_i <= cap, sum(w) = h}`` exactly in O(n log n).

    The projection is ``clip(x - tau, 0, cap)``; the sum is piecewise linear
    and nonincreasing in ``tau`` with breakpoints ``x_i`` and ``x_i - cap``.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    xs = np.sort(x)
    prefix = np.concatenate(([0.0], np.cumsum(xs)))

    def total(tau):
        # entries with x_i >= tau + cap contribute cap, x_i in (tau, tau+cap) contribute x_i - tau
        lo = np.searchsorted(xs, tau, side="right")
        hi = np.searchsorted(xs, tau + cap, side="left")
        return cap * (n - hi) + (prefix[hi] - prefix[lo]) - tau * (hi - lo)

    bps = np.unique(np.concatenate((xs - cap, xs)))
    s = total(bps)
    # s is nonincreasing along bps; s[0] = n*cap, s[-1] = 0
    k = np.searchsorted(-s, -h, side="left")
    if k == 0:
        tau = bps[0]
    elif k >= len(bps):
        tau = bps[-1]
    else:
        t0, t1, s0, s1 = bps[k - 1], bps[k], s[k - 1], s[k]
        tau = t0 if s0 == s1 else t0 + (s0 - h) * (t1 - t0) / (s0 - s1)
    return np.clip(x - tau, 0.0, cap)


@dataclass(frozen=True, eq=False)
class CappedSimplex(FeasibleSet):
    """``{w in R^n : 0 <= w_i <= cap, sum(w) = h}``."""

    n: int
    h: float
    cap: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidDimension("n must be >= 1")
        if not 0 < self.h <= self.n * self.cap:
            raise ValueError(f"h={self.h} must lie in (0, n*cap]")

    @property
    def dim(self):
        return self.n

    def _project(self, x):
        return project_capped_simplex(x, self.h, self.cap)

    def sample(self, rng):
        return self._project(self.cap * rng.random(self.n) + (self.h / self.n - 0.5 * self.cap))


@dataclass(frozen=True, eq=False)
class Product(FeasibleSet):
    parts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise InvalidDimension("empty product set")

    @property
    def dim(self):
        return sum(p.dim for p in self.parts)

    def split(self, x) -> list:
        cuts = np.cumsum([p.dim for p in self.parts])[:-1]
        return np.split(np.asarray(x, dtype=np.float64), cuts)

    def _project(self, x):
        return np.concatenate([p._project(b) for p, b in zip(self.parts, self.split(x))])

    def sample(self, rng):
        return np.concatenate([p.sample(rng) for p in self.parts])


def project(x, feasible_set: FeasibleSet) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``feasible_set``."""
    return feasible_set.project(x)


def unit_sphere(d: int, rng: RngStream, radius: float = 1.0) -> np.ndarray:
    if d < 1:
        raise InvalidDimension("d must be >= 1")
    g = rng.standard_normal(d)
    return radius * g / np.linalg.norm(g)


def relative_distance(x, reference) -> float:
    """``min(|x - r|, |x + r|) / |r|``; distance to the pair of minimizers ``+-r``."""
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    return float(min(np.linalg.norm(x - r), np.linalg.norm(x + r)) / np.linalg.norm(r))
