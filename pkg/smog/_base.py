"""Contains numerical definitions that are internal to **smog**.

In general, users shouldn't import and use the contents of this module.
"""

import logging
from typing import Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from smog.exceptions import FactorizationError

logger = logging.getLogger(__name__)

#: Relative jitter levels tried, in order, before giving up on a Cholesky.
JITTER_LEVELS: Tuple[float, ...] = (1e-8, 1e-6, 1e-4)

_SOFTPLUS_FLOOR = 1e-10


def _softplus(u):
    """Map an unconstrained value to a positive one.

    >>> round(float(_softplus(0.0)), 6)
    0.693147
    """
    return np.logaddexp(0.0, u) + _SOFTPLUS_FLOOR


def _inv_softplus(value):
    """Inverse of :func:`_softplus`.

    >>> round(float(_inv_softplus(_softplus(1.5))), 12)
    1.5
    """
    v = np.asarray(value, dtype=float) - _SOFTPLUS_FLOOR
    # log(expm1(v)) overflows for large v, where it equals v anyway
    return np.where(v > 30.0, v, np.log(np.expm1(np.minimum(v, 30.0))))


def _logistic(u):
    """Map an unconstrained value into the open interval (0, 1)."""
    return 1.0 / (1.0 + np.exp(-u))


def _logit(p):
    p = np.asarray(p, dtype=float)
    return np.log(p) - np.log1p(-p)


def jittered_cholesky(
    matrix: np.ndarray, levels: Sequence[float] = JITTER_LEVELS
) -> Tuple[np.ndarray, float]:
    """Return the lower Cholesky factor of ``matrix`` plus a diagonal jitter.

    The jitter is ``level * mean(diag(matrix))``; the first level is always
    applied, the following ones only when the factorization fails. The
    jitter actually added is returned alongside the factor.

    :raises FactorizationError: when every level fails.
    """
    n = matrix.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    scale = float(np.mean(np.diag(matrix)))
    if not np.isfinite(scale):
        raise FactorizationError(size=n, levels=tuple(levels), scale=scale)
    scale = abs(scale)
    for i, level in enumerate(levels):
        jitter = level * scale
        try:
            factor = cholesky(matrix + jitter * np.eye(n), lower=True)
        except LinAlgError:
            continue
        if i > 0:
            logger.warning(
                f"Cholesky of a {n}x{n} matrix needed jitter escalation "
                f"to {level:g} of the mean diagonal"
            )
        return factor, jitter
    raise FactorizationError(size=n, levels=tuple(levels), scale=scale)


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Return a square root ``L`` with ``L @ L.T == matrix`` for a PSD matrix.

    An exactly zero matrix yields an exactly zero root; otherwise a jittered
    Cholesky factor is used.
    """
    if not np.any(matrix):
        return np.zeros_like(matrix, dtype=float)
    factor, _ = jittered_cholesky(matrix)
    return factor
