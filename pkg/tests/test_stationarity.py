import numpy as np
import pytest

from proxguide.core import RngStream
from proxguide.errors import InvalidGamma, InvalidParams, UnsupportedDimension
from proxguide.problems import phase_retrieval_oracle, synthetic_prox_test_oracle
from proxguide.stationarity import (
    StationarityCertificate,
    grid_prox,
    grid_subdifferential_distance,
    near_stationarity_radius,
    prox_reference,
    step_length_check,
)


def test_closed_form_references():
    a = synthetic_prox_test_oracle("abs-value", 1)
    ref = prox_reference([3.0], 1.0, a, method="closed-form")
    assert ref.point[0] == 2.0
    assert np.linalg.norm(ref.center - ref.point) / ref.gamma == 1.0
    assert step_length_check([3.0], ref, 1.0)
    q = synthetic_prox_test_oracle("convex-quadratic", 2)
    assert np.allclose(prox_reference([1.0, 0.0], 1.0, q, method="closed-form").point, [0.5, 0.0])


def test_stochastic_reference_matches_closed_form():
    q = synthetic_prox_test_oracle("convex-quadratic", 2)
    ref = prox_reference([1.0, 0.0], 1.0, q, budget=5000, rng=RngStream(0))
    assert np.linalg.norm(ref.point - [0.5, 0.0]) <= 0.01
    c = synthetic_prox_test_oracle("concave-quadratic", 1)
    with pytest.raises(InvalidGamma):
        prox_reference([1.0], 1.0, c, rng=RngStream(0))
    with pytest.raises(InvalidParams):
        prox_reference([1.0], 0.5, c)


def test_grid_reference():
    a = synthetic_prox_test_oracle("abs-value", 1)
    ref = prox_reference([3.0], 1.0, a, method="grid", grid=(lambda g: np.abs(g[:, 0]), -5, 5, 100_001))
    assert abs(ref.point[0] - 2.0) <= ref.accuracy
    with pytest.raises(UnsupportedDimension):
        prox_reference(np.zeros(3), 1.0, phase_retrieval_oracle(3, np.ones(3)), method="grid", grid=(None, 0, 1, 3))
    pt, _ = grid_prox(lambda g: np.abs(g).sum(axis=1), np.array([3.0, -0.5]), 1.0, -4, 4, 801**2)
    assert np.allclose(pt, [2.0, 0.0], atol=1e-9)


def test_fixed_point_and_radius():
    a = synthetic_prox_test_oracle("abs-value", 1)
    assert step_length_check([0.0], prox_reference([0.0], 1.0, a, method="closed-form"), 1.0)
    assert near_stationarity_radius(0.0, 1.0) == (0.0, 0.0)
    assert near_stationarity_radius(0.1, 0.5) == pytest.approx((0.1, 0.2))
    gap, slope = near_stationarity_radius(1.0, 1.0)
    # subdifferential of |.| at the prox point 2 is {1}
    assert a.subdifferential_distance(np.array([2.0])) <= slope


def test_certificate():
    c = StationarityCertificate(np.array([1.0, 0.0]), np.array([0.0, 0.0]), 0.5)
    assert c.estimate == 2.0 and c.bound == 8.0 and c.tolerance_term is None
    c = StationarityCertificate(np.array([1.0, 0.0]), np.array([0.0, 0.0]), 0.5, np.array([0.0, 0.5]))
    assert c.tolerance_term == pytest.approx(2.0) and c.total_bound == pytest.approx(10.0)


def test_grid_subdifferential_distance():
    f = lambda g: np.abs(g[:, 0])  # noqa: E731
    assert grid_subdifferential_distance(f, 0.0, 1e-6) == 0.0
    assert grid_subdifferential_distance(f, 2.0, 1e-6) == pytest.approx(1.0)
