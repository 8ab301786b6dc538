"""
Numerical Exceptions
~~~~~~~~~~~~~~~~~~~~

These are exceptions pertaining to linear algebra failures while fitting
or conditioning Gaussian process models.
"""

from typing import Any, Dict, Optional, Tuple

__all__ = [
    "NumericalError",
    "FactorizationError",
    "MetaTaskFitError",
]


class NumericalError(ArithmeticError):
    """Indicates that a numerical routine could not produce a usable result.

    This is used as a **base class** for more specific errors.

    :param diagnostics: Free-form details about the failure.
    :type diagnostics: dict
    """

    def __init__(
        self, msg: Optional[str] = None, diagnostics: Optional[Dict[str, Any]] = None
    ):
        #: Details about the failure, e.g. matrix sizes or tried jitters.
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})
        if msg is None:
            msg = f"Numerical failure: {self.diagnostics}"
        super().__init__(msg)


class FactorizationError(NumericalError):
    """A Cholesky factorization failed even after jitter escalation.

    :param size: Number of rows of the matrix.
    :type size: int
    :param levels: Relative jitter levels that were tried.
    :type levels: tuple
    """

    def __init__(
        self,
        msg: Optional[str] = None,
        size: Optional[int] = None,
        levels: Tuple[float, ...] = (),
        **diagnostics: Any,
    ):
        self.size = size
        self.levels = levels
        if msg is None:
            msg = (
                f"Cholesky factorization of a {size}x{size} matrix failed "
                f"with relative jitter levels {list(levels)}"
            )
        super().__init__(msg, {"size": size, "levels": levels, **diagnostics})


class MetaTaskFitError(NumericalError):
    """Fitting the model of one meta task failed.

    :param task_index: Index of the meta task.
    :type task_index: int
    """

    def __init__(self, msg: Optional[str] = None, task_index: Optional[int] = None):
        self.task_index = task_index
        if msg is None:
            msg = f"Fitting meta task {task_index} failed"
        super().__init__(msg, {"task_index": task_index})
