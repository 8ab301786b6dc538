"""
Core Exceptions
~~~~~~~~~~~~~~~

These exceptions are tied to how **smog** validates its inputs and state.
"""

from typing import Optional

__all__ = [
    "ArgumentError",
    "ConfigError",
    "ModelStateError",
]


class ArgumentError(ValueError):
    """An operation received arguments that violate its contract, e.g.
    mismatched dimensions, an objective index out of range or a non-finite
    value."""


class ConfigError(ValueError):
    """The experiment configuration is missing, malformed or invalid.

    :param path: The configuration file, when there is one.
    :type path: str
    """

    def __init__(self, msg: Optional[str] = None, path: Optional[str] = None):
        #: Configuration file that triggered the exception.
        self.path = path
        if msg is None:
            msg = f"Invalid experiment configuration: {self.path}"
        super().__init__(msg)


class ModelStateError(RuntimeError):
    """A model was used before the caches it needs were computed, e.g. a
    posterior was requested from a model that was never conditioned."""
