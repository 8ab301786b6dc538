from itertools import combinations

import numpy as np
import pytest

from smog.exceptions import ArgumentError
from smog.mobo.pareto import (
    ParetoState,
    dominates,
    hv_gap,
    hypervolume,
    hypervolume_improvement,
    hypervolume_improvement_2d,
    infer_reference_point,
    pareto_front,
)


def _inclusion_exclusion(points: np.ndarray, reference: np.ndarray) -> float:
    """Union volume of the boxes [reference, p] over every subset of points."""
    total = 0.0
    for k in range(1, len(points) + 1):
        for subset in combinations(range(len(points)), k):
            corner = points[list(subset)].min(axis=0)
            total += (-1) ** (k + 1) * np.prod(np.clip(corner - reference, 0.0, None))
    return total


def test_two_point_example() -> None:
    assert hypervolume([[3.0, 1.0], [1.0, 3.0]], [0.0, 0.0]) == 5.0


@pytest.mark.parametrize("objectives", [1, 2, 3, 4])
def test_hypervolume_matches_inclusion_exclusion(rng, objectives) -> None:
    for _ in range(30):
        n = int(rng.integers(1, 7))
        points = rng.uniform(-1.0, 2.0, size=(n, objectives))
        reference = rng.uniform(-1.0, 0.0, size=objectives)
        assert hypervolume(points, reference) == pytest.approx(
            _inclusion_exclusion(points, reference), rel=1e-9, abs=1e-12
        )


def test_hypervolume_is_translation_invariant(rng) -> None:
    points = rng.uniform(size=(5, 3))
    reference = np.zeros(3)
    shift = np.array([10.0, -4.0, 0.5])
    assert hypervolume(points + shift, reference + shift) == pytest.approx(
        hypervolume(points, reference), rel=1e-9
    )


def test_hypervolume_ignores_dominated_and_clipped_points() -> None:
    reference = np.array([0.0, 0.0])
    base = hypervolume([[2.0, 2.0]], reference)
    assert hypervolume([[2.0, 2.0], [1.0, 1.0], [-1.0, 5.0]], reference) == base
    assert hypervolume(np.zeros((0, 2)), reference) == 0.0


@pytest.mark.parametrize("reference", [np.zeros(5), np.zeros(0)])
def test_hypervolume_objective_limits(reference) -> None:
    with pytest.raises(ArgumentError, match="objectives"):
        hypervolume(np.ones((1, reference.size or 1)), reference)


def test_hypervolume_shape_mismatch() -> None:
    with pytest.raises(ArgumentError, match="reference has"):
        hypervolume([[1.0, 1.0, 1.0]], [0.0, 0.0])


def test_hypervolume_improvement_is_a_difference(rng) -> None:
    for objectives in (2, 3):
        front = pareto_front(rng.uniform(size=(4, objectives)))
        reference = np.full(objectives, -0.1)
        y = rng.uniform(size=objectives)
        expected = hypervolume(np.vstack([front, y]), reference) - hypervolume(front, reference)
        assert hypervolume_improvement(y, front, reference) == pytest.approx(expected, abs=1e-12)


def test_vectorized_two_objective_improvement(rng) -> None:
    front = pareto_front(rng.uniform(size=(6, 2)))
    reference = np.array([-0.2, -0.1])
    Y = rng.uniform(-0.5, 1.5, size=(40, 2))
    expected = [hypervolume_improvement(y, front, reference) for y in Y]
    vectorized = hypervolume_improvement_2d(Y, front, reference)
    np.testing.assert_allclose(vectorized, expected, atol=1e-12)
    np.testing.assert_allclose(
        hypervolume_improvement_2d(Y, np.zeros((0, 2)), reference),
        [hypervolume([y], reference) for y in Y],
        atol=1e-12,
    )


def test_dominated_point_has_no_improvement() -> None:
    assert hypervolume_improvement([1.0, 1.0], [[2.0, 2.0]], [0.0, 0.0]) == 0.0


def test_dominates() -> None:
    assert dominates([2, 2], [1, 2])
    assert not dominates([2, 1], [1, 2])
    assert not dominates([1, 1], [1, 1])


def test_pareto_front_removes_dominated_and_duplicates() -> None:
    Y = [[1, 3], [3, 1], [1, 3], [2, 2], [0, 0], [2, 1]]
    assert pareto_front(Y).tolist() == [[1.0, 3.0], [3.0, 1.0], [2.0, 2.0]]
    assert pareto_front(np.zeros((0, 2))).shape == (0, 2)


def test_infer_reference_point() -> None:
    np.testing.assert_allclose(infer_reference_point([[0.0, 1.0], [1.0, 0.0]]), [-0.1, -0.1])
    np.testing.assert_allclose(infer_reference_point([[5.0, 5.0]]), [4.5, 4.5])
    np.testing.assert_allclose(infer_reference_point([[0.0, 0.0]]), [-0.1, -0.1])
    with pytest.raises(ArgumentError, match="empty front"):
        infer_reference_point(np.zeros((0, 2)))


def test_reference_point_is_translation_equivariant(rng) -> None:
    shift = np.array([3.0, -7.0])
    for _ in range(20):
        n = int(rng.integers(2, 7))
        # strictly increasing in one objective and decreasing in the other
        front = np.column_stack([np.sort(rng.uniform(size=n)), -np.sort(rng.uniform(size=n))])
        assert pareto_front(front).shape == (n, 2)
        np.testing.assert_allclose(
            infer_reference_point(front + shift), infer_reference_point(front) + shift, atol=1e-12
        )


def test_reference_point_for_degenerate_front_uses_scale() -> None:
    np.testing.assert_allclose(infer_reference_point([[5.0, -20.0]]), [4.5, -22.0])
    np.testing.assert_allclose(infer_reference_point([[0.5, 0.0]]), [0.4, -0.1])


def test_hv_gap() -> None:
    assert hv_gap(3.0, 5.0) == 2.0
    assert hv_gap(5.0, 5.0) == 0.0
    assert hv_gap(5.0 + 1e-13, 5.0) == 0.0


def test_pareto_state_tracks_hypervolume(rng) -> None:
    reference = np.array([-1.0, -1.0])
    Y = rng.uniform(size=(6, 2))
    state = ParetoState.from_observations(Y[:1], reference)
    for y in Y[1:]:
        previous = state.hypervolume
        state = state.with_point(y)
        assert state.hypervolume >= previous
    assert state.hypervolume == pytest.approx(hypervolume(Y, reference), rel=1e-12)
    np.testing.assert_array_equal(state.points, pareto_front(Y))
    assert state.objective_count == 2
