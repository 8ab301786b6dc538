"""
Hyperparameter search shared by every model.

Parameters are packed into one unconstrained vector by a
:class:`ParameterCodec`; :func:`multi_start_maximize` then runs one bounded
L-BFGS-B ascent per restart with central finite-difference gradients and
keeps the best result.
"""

import logging
import math
from typing import Callable, Dict, List, Sequence, Tuple

import attrs
import numpy as np
from scipy.optimize import minimize

from smog._base import _inv_softplus, _logistic, _logit, _softplus
from smog.exceptions import ArgumentError, NumericalError
from smog.priors import NOISE_LOWER_BOUND

logger = logging.getLogger(__name__)

#: Finite-difference step on the unconstrained scale.
FD_STEP = 1e-5
#: Gradient infinity-norm at which a restart stops.
GRADIENT_TOL = 1e-5
MAX_ITERATIONS = 200
#: Box on every unconstrained coordinate.
UNCONSTRAINED_BOUND = 12.0

# Objective value handed to the optimizer instead of -inf.
_PENALTY = 1e25

TRANSFORMS = ("positive", "noise", "unit", "identity")


@attrs.define(frozen=True)
class ParameterBlock:
    """A named slice of the unconstrained vector."""

    name: str
    size: int
    transform: str = attrs.field(validator=attrs.validators.in_(TRANSFORMS))

    def to_natural(self, u: np.ndarray) -> np.ndarray:
        if self.transform == "positive":
            return _softplus(u)
        if self.transform == "noise":
            return NOISE_LOWER_BOUND + _softplus(u)
        if self.transform == "unit":
            return _logistic(u)
        return np.array(u, dtype=float)

    def to_unconstrained(self, value: np.ndarray) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        if self.transform == "positive":
            return _inv_softplus(value)
        if self.transform == "noise":
            return _inv_softplus(np.maximum(value - NOISE_LOWER_BOUND, 1e-12))
        if self.transform == "unit":
            return _logit(np.clip(value, 1e-9, 1.0 - 1e-9))
        return value.copy()


@attrs.define(frozen=True)
class ParameterCodec:
    """Maps between a dict of natural-scale arrays and a flat vector.

    >>> codec = ParameterCodec([ParameterBlock("rho", 1, "unit")])
    >>> float(codec.unpack(codec.pack({"rho": [0.25]}))["rho"][0])
    0.25
    """

    blocks: Tuple[ParameterBlock, ...] = attrs.field(converter=tuple)

    @property
    def size(self) -> int:
        return sum(b.size for b in self.blocks)

    def names(self) -> List[str]:
        return [b.name for b in self.blocks]

    def unpack(self, u: np.ndarray) -> Dict[str, np.ndarray]:
        u = np.asarray(u, dtype=float)
        if u.size != self.size:
            raise ArgumentError(f"Expected {self.size} parameters, got {u.size}")
        out: Dict[str, np.ndarray] = {}
        offset = 0
        for block in self.blocks:
            out[block.name] = block.to_natural(u[offset : offset + block.size])
            offset += block.size
        return out

    def pack(self, values: Dict[str, np.ndarray]) -> np.ndarray:
        parts = []
        for block in self.blocks:
            value = np.atleast_1d(np.asarray(values[block.name], dtype=float))
            if value.size != block.size:
                raise ArgumentError(
                    f"Parameter {block.name!r} needs {block.size} values, got {value.size}"
                )
            parts.append(block.to_unconstrained(value))
        if not parts:
            return np.zeros(0)
        packed = np.concatenate(parts)
        return np.clip(packed, -UNCONSTRAINED_BOUND, UNCONSTRAINED_BOUND)


def central_difference_gradient(
    f: Callable[[np.ndarray], float], u: np.ndarray, step: float = FD_STEP
) -> np.ndarray:
    """Central finite-difference gradient of ``f`` at ``u``.

    >>> g = central_difference_gradient(lambda v: float(v @ v), np.array([1.0, -2.0]))
    >>> [round(x, 6) for x in g.tolist()]
    [2.0, -4.0]
    """
    grad = np.zeros_like(u, dtype=float)
    for i in range(u.size):
        e = np.zeros_like(u, dtype=float)
        e[i] = step
        grad[i] = (f(u + e) - f(u - e)) / (2.0 * step)
    return grad


@attrs.define(frozen=True)
class SearchResult:
    """Best point found by :func:`multi_start_maximize`."""

    x: np.ndarray
    value: float
    restart_values: Tuple[float, ...]


def multi_start_maximize(
    objective: Callable[[np.ndarray], float], starts: Sequence[np.ndarray]
) -> SearchResult:
    """Maximize ``objective`` from each start and return the best result.

    ``objective`` may return ``-inf`` or raise :class:`NumericalError` for
    invalid points; such points are heavily penalized. Ties keep the
    earliest restart.

    :raises NumericalError: if no restart reaches a finite value.
    """

    def negated(u: np.ndarray) -> float:
        try:
            value = objective(u)
        except NumericalError:
            return _PENALTY
        if not math.isfinite(value):
            return _PENALTY
        return -value

    best_x, best_value = None, -math.inf
    restart_values: List[float] = []
    for start in starts:
        start = np.clip(np.asarray(start, dtype=float), -UNCONSTRAINED_BOUND, UNCONSTRAINED_BOUND)
        if start.size == 0:
            value = -negated(start)
            x = start
        else:
            result = minimize(
                negated,
                start,
                jac=lambda u: central_difference_gradient(negated, u),
                method="L-BFGS-B",
                bounds=[(-UNCONSTRAINED_BOUND, UNCONSTRAINED_BOUND)] * start.size,
                options={"maxiter": MAX_ITERATIONS, "gtol": GRADIENT_TOL},
            )
            x = np.asarray(result.x, dtype=float)
            value = -negated(x)
        if value <= -_PENALTY:
            value = -math.inf
        restart_values.append(value)
        logger.debug(f"Restart {len(restart_values)} reached objective {value:.6g}")
        if value > best_value:
            best_x, best_value = x, value
    if best_x is None:
        raise NumericalError(
            "Every restart failed to reach a finite objective",
            {"restarts": len(restart_values)},
        )
    return SearchResult(x=best_x, value=best_value, restart_values=tuple(restart_values))
