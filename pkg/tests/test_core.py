import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from proxguide.core import (
    Ball,
    Box,
    CappedSimplex,
    Product,
    RngStream,
    as_vector,
    laplace_icdf,
    project,
    project_capped_simplex,
    relative_distance,
    sample_bernoulli,
    sample_gaussian,
    sample_laplace,
    unit_sphere,
)
from proxguide.errors import InvalidDimension, InvalidProbability, InvalidScale, NumericFault

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def bisection_capped_simplex(x, h, cap, iters=200):
    """Independent oracle: bisection on the threshold of clip(x - tau, 0, cap)."""
    lo, hi = np.min(x) - cap - 1.0, np.max(x) + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.clip(x - mid, 0, cap).sum() > h:
            lo = mid
        else:
            hi = mid
    return np.clip(x - 0.5 * (lo + hi), 0, cap)


# --- vectors and randomness -------------------------------------------------

def test_as_vector_rejects_nan():
    with pytest.raises(NumericFault):
        as_vector([1.0, np.nan])
    with pytest.raises(InvalidDimension):
        as_vector([1.0, 2.0], d=3)


def test_streams_are_reproducible_and_distinct():
    a = RngStream(7).split(3).standard_normal(5)
    b = RngStream(7).split(3).standard_normal(5)
    c = RngStream(7).split(4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_gaussian_determinism_and_moments():
    assert np.array_equal(sample_gaussian(3, RngStream(1)), sample_gaussian(3, RngStream(1)))
    draws = RngStream(2).standard_normal((100_000, 2))
    assert np.all(np.abs(draws.mean(axis=0)) < 0.02)
    assert np.all(np.abs(draws.var(axis=0) - 1) < 0.03)
    with pytest.raises(InvalidDimension):
        sample_gaussian(0, RngStream(0))


def test_bernoulli():
    r = RngStream(3)
    assert np.all(sample_bernoulli(0.0, r, 1000) == 0)
    assert np.all(sample_bernoulli(1.0, r, 1000) == 1)
    assert abs(sample_bernoulli(0.25, r, 100_000).mean() - 0.25) < 0.006
    with pytest.raises(InvalidProbability):
        sample_bernoulli(1.5, r)


def test_laplace():
    x = sample_laplace(1.0, RngStream(4), 100_000)
    assert abs(x.mean()) < 0.03
    assert abs(x.var() - 2.0) < 0.1
    assert laplace_icdf(0.5) == 0.0
    # CDF of Laplace(1) at log 2 is 1 - 0.25 = 0.75
    assert laplace_icdf(0.75) == pytest.approx(np.log(2.0), rel=1e-14)
    with pytest.raises(InvalidScale):
        sample_laplace(0.0, RngStream(0))


def test_unit_sphere_and_relative_distance():
    x = unit_sphere(50, RngStream(5))
    assert np.linalg.norm(x) == pytest.approx(1.0)
    assert relative_distance(-x, x) == 0.0
    assert relative_distance(np.zeros(50), x) == pytest.approx(1.0)


# --- projections --------------------------------------------------------------

def test_ball_examples():
    b = Ball.origin(2, 1.0)
    assert np.allclose(project([2.0, 0.0], b), [1.0, 0.0])
    x = np.array([0.3, -0.2])
    assert np.array_equal(b.project(x), x)
    with pytest.raises(InvalidDimension):
        b.project([1.0, 2.0, 3.0])


def test_capped_simplex_example():
    # KKT by hand: symmetric input, so both coordinates equal h/2
    assert np.allclose(project_capped_simplex(np.array([0.9, 0.9]), 1.0), [0.5, 0.5])


def test_capped_simplex_matches_bisection(rng):
    for _ in range(200):
        n = int(rng.integers(1, 30))
        cap = float(rng.random() * 2 + 0.1)
        h = float(rng.random() * n * cap) or cap
        x = rng.standard_normal(n) * 3
        assert np.allclose(project_capped_simplex(x, h, cap), bisection_capped_simplex(x, h, cap), atol=1e-10)


def _sets(d):
    return [
        Ball(np.linspace(-1, 1, d), 2.0),
        Box(-np.ones(d), np.arange(d, dtype=float) + 0.5),
        CappedSimplex(d, max(1.0, d / 3)),
        Product((Ball.origin(d, 1.0), CappedSimplex(d, 1.0))),
    ]


@settings(max_examples=60, deadline=None)
@given(d=st.integers(1, 8), data=st.data())
def test_projection_properties(d, data):
    for s in _sets(d):
        x = data.draw(arrays(np.float64, s.dim, elements=finite))
        y = data.draw(arrays(np.float64, s.dim, elements=finite))
        px, py = s.project(x), s.project(y)
        assert s.contains(px, tol=1e-8)
        assert np.allclose(s.project(px), px, atol=1e-9)  # idempotent
        assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-8  # nonexpansive
        # variational inequality against a feasible point
        q = s.project(data.draw(arrays(np.float64, s.dim, elements=finite)))
        assert (x - px) @ (q - px) <= 1e-7 * (1 + np.linalg.norm(x - px) * np.linalg.norm(q - px))


def test_set_samples_are_feasible(rng):
    for s in _sets(5):
        for _ in range(20):
            assert s.contains(s.sample(rng))
