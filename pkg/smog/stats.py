"""Counters that tests and the harness can inspect after a computation.

Numerical code writes counts (cache hits, posterior evaluations, kernel
entries) through a :class:`Stats` instance; reading them back depends on
the :class:`StatCollector` behind it.
"""

import threading
from abc import ABC, abstractmethod
from typing import Any, Dict, Union

StatNum = Union[int, float]


class StatCollector(ABC):
    """Base class for storing the data written through :class:`Stats`."""

    @abstractmethod
    def set(self, key: str, value: Any) -> None:
        """Set the value of stat *key* to *value*."""

    @abstractmethod
    def inc(self, key: str, value: StatNum = 1) -> None:
        """Increment the value of stat *key* by *value*, or set it to *value*
        if *key* has no value."""


class MemoryStatCollector(StatCollector):
    """:class:`StatCollector` that keeps stats in a dict. Safe to write
    from several worker threads."""

    def __init__(self):
        self._stats: Dict[str, Any] = {}
        self._lock = threading.Lock()

    def set(self, key: str, value: Any) -> None:  # noqa: D102
        with self._lock:
            self._stats[key] = value

    def inc(self, key: str, value: StatNum = 1) -> None:  # noqa: D102
        with self._lock:
            if key in self._stats:
                assert isinstance(self._stats[key], (int, float))
                self._stats[key] += value
            else:
                self._stats[key] = value

    def get(self, key: str, default: Any = 0) -> Any:
        """Return the value of stat *key*."""
        with self._lock:
            return self._stats.get(key, default)

    def clear(self) -> None:
        """Forget every stat."""
        with self._lock:
            self._stats.clear()


class Stats:
    """Write key-value counters during a computation that you can inspect
    later.

    >>> stats = Stats()
    >>> stats.inc("cache/miss")
    >>> stats.inc("cache/miss", 2)
    >>> stats.get("cache/miss")
    3
    """

    def __init__(self, stat_collector=None):
        self._stats = stat_collector or MemoryStatCollector()

    def set(self, key: str, value: Any) -> None:
        """Set the value of stat *key* to *value*."""
        self._stats.set(key, value)

    def inc(self, key: str, value: StatNum = 1) -> None:
        """Increment the value of stat *key* by *value*, or set it to *value*
        if *key* has no value."""
        self._stats.inc(key, value)

    def get(self, key: str, default: Any = 0) -> Any:
        """Return the value of stat *key*, if the collector can be read."""
        getter = getattr(self._stats, "get", None)
        if getter is None:
            return default
        return getter(key, default)

    def clear(self) -> None:
        """Reset the underlying collector, if it supports it."""
        clear = getattr(self._stats, "clear", None)
        if clear is not None:
            clear()


#: Process-wide counters written by the kernels and model code.
default_stats = Stats()
