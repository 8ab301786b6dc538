"""
Pareto bookkeeping and exact hypervolume.

Everything here uses the maximization convention: ``a`` dominates ``b``
when ``a >= b`` componentwise and ``a != b``. Hypervolume is exact for up
to four objectives: a sort-and-sum sweep for two, and an exclusive-volume
recursion over limit sets for three and four.
"""

from typing import Optional

import attrs
import numpy as np

from smog.data import StandardizationTransform, standardize
from smog.exceptions import ArgumentError

#: Highest objective count :func:`hypervolume` supports.
MAX_OBJECTIVES = 4

#: Default back-off of the inferred reference point.
REFERENCE_FRACTION = 0.1


def _as_points(points, objective_count: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, objective_count or (arr.shape[-1] if arr.ndim == 2 else 0))
    arr = np.atleast_2d(arr)
    if not np.all(np.isfinite(arr)):
        raise ArgumentError("Objective vectors must be finite")
    return arr


def dominates(a, b) -> bool:
    """Whether ``a`` dominates ``b`` under maximization.

    >>> dominates([1, 2], [1, 1]), dominates([1, 1], [1, 1])
    (True, False)
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return bool(np.all(a >= b) and np.any(a > b))


def pareto_front(Y) -> np.ndarray:
    """Non-dominated rows of ``Y``, duplicates removed, in first-occurrence
    order.

    >>> pareto_front([[1, 2], [2, 1], [0, 0]]).tolist()
    [[1.0, 2.0], [2.0, 1.0]]
    >>> pareto_front([[1, 1], [1, 1]]).tolist()
    [[1.0, 1.0]]
    """
    Y = _as_points(Y)
    if Y.shape[0] == 0:
        return Y
    geq = np.all(Y[:, None, :] >= Y[None, :, :], axis=2)
    gt = np.any(Y[:, None, :] > Y[None, :, :], axis=2)
    dominated = np.any(geq & gt, axis=0)
    kept = []
    for i in np.flatnonzero(~dominated):
        if not any(np.array_equal(Y[i], Y[j]) for j in kept):
            kept.append(i)
    return Y[kept]


def infer_reference_point(front, fraction: float = REFERENCE_FRACTION) -> np.ndarray:
    """Nadir of ``front`` moved back by ``fraction`` of the front's range.

    A dimension with zero range is moved back by ``fraction * max(|nadir|, 1)``.

    >>> infer_reference_point([[0.0, 1.0], [1.0, 0.0]]).tolist()
    [-0.1, -0.1]
    >>> infer_reference_point([[5.0, 5.0]]).tolist()
    [4.5, 4.5]
    """
    front = _as_points(front)
    if front.shape[0] == 0:
        raise ArgumentError("Cannot infer a reference point from an empty front")
    nadir = front.min(axis=0)
    ideal = front.max(axis=0)
    span = ideal - nadir
    span = np.where(span > 0, span, np.maximum(np.abs(nadir), 1.0))
    return nadir - fraction * span


def _check_objectives(count: int) -> None:
    if not (1 <= count <= MAX_OBJECTIVES):
        raise ArgumentError(
            f"Hypervolume supports 1 to {MAX_OBJECTIVES} objectives, got {count}"
        )


def _hv2(points: np.ndarray, reference: np.ndarray) -> float:
    order = np.argsort(-points[:, 0], kind="stable")
    total, height = 0.0, reference[1]
    for x, y in points[order]:
        if y > height:
            total += (x - reference[0]) * (y - height)
            height = y
    return total


def _nondominated(points: np.ndarray) -> np.ndarray:
    if points.shape[0] <= 1:
        return points
    return pareto_front(points)


def _wfg(points: np.ndarray, reference: np.ndarray) -> float:
    n, O = points.shape
    if n == 0:
        return 0.0
    if O == 1:
        return float(points[:, 0].max() - reference[0])
    if O == 2:
        return _hv2(points, reference)
    if n == 1:
        return float(np.prod(points[0] - reference))
    points = points[np.argsort(-points[:, 0], kind="stable")]
    total = 0.0
    for i in range(n):
        total += _exclusive(points[i], points[i + 1 :], reference)
    return total


def _exclusive(p: np.ndarray, others: np.ndarray, reference: np.ndarray) -> float:
    inclusive = float(np.prod(p - reference))
    if others.shape[0] == 0:
        return inclusive
    limit = _nondominated(np.minimum(others, p))
    return inclusive - _wfg(limit, reference)


def _clip(points: np.ndarray, reference: np.ndarray) -> np.ndarray:
    return np.maximum(points, reference)


def hypervolume(points, reference) -> float:
    """Volume dominated by ``points`` and bounded below by ``reference``.

    Points below the reference are clipped to it first.

    >>> hypervolume([[3.0, 1.0], [1.0, 3.0]], [0.0, 0.0])
    5.0
    """
    reference = np.asarray(reference, dtype=float).ravel()
    _check_objectives(reference.size)
    points = _as_points(points, reference.size)
    if points.shape[0] == 0:
        return 0.0
    if points.shape[1] != reference.size:
        raise ArgumentError(
            f"Points have {points.shape[1]} objectives, reference has {reference.size}"
        )
    points = _nondominated(_clip(points, reference))
    return float(_wfg(points, reference))


def hypervolume_improvement(y, front, reference) -> float:
    """Exact increase in hypervolume when ``y`` is added to ``front``.

    >>> hypervolume_improvement([2.0, 2.0], [[3.0, 1.0], [1.0, 3.0]], [0.0, 0.0])
    1.0
    """
    reference = np.asarray(reference, dtype=float).ravel()
    _check_objectives(reference.size)
    y = _clip(np.asarray(y, dtype=float).ravel(), reference)
    front = _as_points(front, reference.size)
    if front.shape[0]:
        front = _nondominated(_clip(front, reference))
    return float(max(_exclusive(y, front, reference), 0.0))


def hypervolume_improvement_2d(
    Y: np.ndarray, front: np.ndarray, reference: np.ndarray
) -> np.ndarray:
    """Vectorized :func:`hypervolume_improvement` for many two-objective
    vectors at once.

    The dominated region of ``front`` is a staircase; the improvement of
    ``y`` is the area of ``[reference, y]`` above it.
    """
    reference = np.asarray(reference, dtype=float)
    Y = _clip(np.atleast_2d(np.asarray(Y, dtype=float)), reference)
    front = _as_points(front, 2)
    if front.shape[0]:
        front = _nondominated(_clip(front, reference))
        front = front[np.argsort(front[:, 0], kind="stable")]
    lefts = np.concatenate([[reference[0]], front[:, 0]])
    rights = np.concatenate([front[:, 0], [np.inf]])
    heights = np.concatenate([front[:, 1], [reference[1]]])
    width = np.clip(np.minimum(Y[:, :1], rights[None, :]) - lefts[None, :], 0.0, None)
    height = np.clip(Y[:, 1:2] - heights[None, :], 0.0, None)
    return np.sum(width * height, axis=1)


def hv_gap(hv: float, best_hv: float) -> float:
    """Deficit of ``hv`` to ``best_hv``, never negative.

    >>> hv_gap(3.0, 5.0)
    2.0
    """
    return max(float(best_hv) - float(hv), 0.0)


@attrs.define(frozen=True, eq=False)
class ParetoState:
    """A Pareto front with its reference point and cached hypervolume."""

    points: np.ndarray
    reference: np.ndarray
    hypervolume: float

    @property
    def objective_count(self) -> int:
        return self.reference.size

    @classmethod
    def from_observations(cls, Y, reference) -> "ParetoState":
        reference = np.asarray(reference, dtype=float).ravel()
        front = pareto_front(_as_points(Y, reference.size))
        return cls(points=front, reference=reference, hypervolume=hypervolume(front, reference))

    def with_point(self, y) -> "ParetoState":
        """State after observing ``y``."""
        y = np.asarray(y, dtype=float).reshape(1, -1)
        return ParetoState.from_observations(np.vstack([self.points, y]), self.reference)


__all__ = [
    "MAX_OBJECTIVES",
    "REFERENCE_FRACTION",
    "ParetoState",
    "StandardizationTransform",
    "dominates",
    "hv_gap",
    "hypervolume",
    "hypervolume_improvement",
    "hypervolume_improvement_2d",
    "infer_reference_point",
    "pareto_front",
    "standardize",
]
