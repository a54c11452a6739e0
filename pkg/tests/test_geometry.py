import numpy as np
import pytest

from sqopt.geometry import (
    AffineSubspace,
    Ball,
    Box,
    FullSpace,
    HalfspaceIntersection,
    box1d,
    feasible_set_from_spec,
    hyperplane,
    set_to_spec,
)

ALL_SETS = [
    Box(np.array([0.0, 0.0]), np.array([1.0, 1.0])),
    Ball(np.zeros(2), 1.0),
    hyperplane(np.array([1.0, 1.0]), 1.0),
    FullSpace(2),
    HalfspaceIntersection(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]]),
                          np.array([1.0, 1.0, 0.5])),
]


def test_box_projection_clamps():
    K = Box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    assert np.allclose(K.project([2.0, -1.0]), [1.0, 0.0])


def test_ball_projection_radial():
    K = Ball(np.zeros(2), 1.0)
    assert np.allclose(K.project([3.0, 4.0]), [0.6, 0.8])


def test_affine_projection_symmetry():
    K = hyperplane(np.array([1.0, 1.0]), 1.0)  # x1 + x2 = 1
    assert np.allclose(K.project([0.0, 0.0]), [0.5, 0.5], atol=1e-12)


def test_affine_requires_orthonormal_basis():
    with pytest.raises(ValueError, match="orthonormal"):
        AffineSubspace(np.array([[1.0], [1.0]]), np.zeros(2))


@pytest.mark.parametrize("K", ALL_SETS, ids=lambda K: K.kind)
def test_projection_idempotent_and_feasible(K):
    X = 3.0 * (2.0 * np.random.Generator(np.random.Philox(key=5)).random((200, K.dim)) - 1.0)
    P = K.project_many(X)
    P2 = K.project_many(P)
    assert np.max(np.linalg.norm(P - P2, axis=-1)) <= 1e-12
    assert np.all(K.contains_many(P, tol=1e-10))


@pytest.mark.parametrize("K", ALL_SETS, ids=lambda K: K.kind)
def test_projection_nonexpansive(K):
    rng = np.random.Generator(np.random.Philox(key=6))
    X = 4.0 * (2.0 * rng.random((300, K.dim)) - 1.0)
    Y = 4.0 * (2.0 * rng.random((300, K.dim)) - 1.0)
    lhs = np.linalg.norm(K.project_many(X) - K.project_many(Y), axis=-1)
    rhs = np.linalg.norm(X - Y, axis=-1)
    assert np.all(lhs <= rhs + 1e-10)


def test_single_halfspace_projection_analytic():
    K = HalfspaceIntersection(np.array([[3.0, 4.0]]), np.array([0.0]))
    x = np.array([3.0, 4.0])  # violation 25, normal norm 5
    assert np.allclose(K.project(x), x - np.array([3.0, 4.0]), atol=1e-12)


def test_dykstra_matches_box():
    # the positive quadrant cut at x+y <= 1, reachable as halfspaces
    K = HalfspaceIntersection(
        np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]]), np.array([0.0, 0.0, 1.0])
    )
    p = K.project([1.0, 1.0])
    assert np.allclose(p, [0.5, 0.5], atol=1e-9)
    p2 = K.project([-1.0, 0.5])
    assert np.allclose(p2, [0.0, 0.5], atol=1e-9)


def test_contains_tolerances():
    K = box1d(0.0, 1.0)
    assert K.contains([1.0000001], tol=1e-6)
    assert not K.contains([1.0000001], tol=1e-9)
    B = Ball(np.zeros(2), 1.0)
    assert not B.contains([1.1, 0.0], tol=1e-3)
    assert FullSpace(3).contains([1e5, -2.0, 0.0])
    with pytest.raises(ValueError):
        K.contains([0.5], tol=-1.0)


def test_sampling_deterministic_and_member():
    K = Box(np.zeros(2), np.ones(2))
    a = K.sample(seed=7, m=3)
    b = K.sample(seed=7, m=3)
    assert np.array_equal(a, b)
    assert a.shape == (3, 2)
    assert np.all(K.contains_many(a))
    assert not np.array_equal(a, K.sample(seed=8, m=3))


def test_ball_sampling_monte_carlo_mean():
    K = Ball(np.zeros(2), 1.0)
    S = K.sample(seed=11, m=10_000)
    assert np.all(K.contains_many(S, tol=1e-12))
    assert np.linalg.norm(S.mean(axis=0)) < 0.05


def test_unbounded_sampling_requires_radius():
    with pytest.raises(ValueError, match="radius"):
        FullSpace(2).sample(seed=0, m=5)
    S = FullSpace(2).sample(seed=0, m=5, radius=2.0)
    assert np.all(np.abs(S) <= 2.0)
    with pytest.raises(ValueError, match="radius"):
        hyperplane(np.array([1.0, 0.0]), 0.0).sample(seed=0, m=5)


def test_dimension_and_finiteness_errors():
    K = Box(np.zeros(2), np.ones(2))
    with pytest.raises(ValueError, match="dimension"):
        K.project([1.0])
    with pytest.raises(ValueError, match="finite"):
        K.project([np.nan, 0.0])
    with pytest.raises(ValueError):
        Box(np.array([1.0]), np.array([0.0]))
    with pytest.raises(ValueError):
        Ball(np.zeros(2), 0.0)


@pytest.mark.parametrize("K", ALL_SETS, ids=lambda K: K.kind)
def test_spec_round_trip(K):
    K2 = feasible_set_from_spec(set_to_spec(K))
    X = 2.0 * (2.0 * np.random.Generator(np.random.Philox(key=9)).random((50, K.dim)) - 1.0)
    assert np.allclose(K.project_many(X), K2.project_many(X), atol=1e-12)
