import json
from typing import Any, Iterable, List

import numpy as np


def _format_json(data: Any) -> str:
    """Produce a formatted JSON string with preset options."""
    return json.dumps(data, ensure_ascii=False, sort_keys=True, indent=2)


def _format_float(value: float) -> str:
    """Format a float with 17 significant digits, enough to round-trip.

    >>> _format_float(0.1)
    '0.10000000000000001'
    >>> float(_format_float(1 / 3)) == 1 / 3
    True
    """
    return format(float(value), ".17g")


def _format_floats(values: Iterable[float]) -> str:
    """
    >>> _format_floats([1.0, 0.5])
    '1,0.5'
    """
    return ",".join(_format_float(v) for v in np.ravel(np.asarray(list(values), dtype=float)))


def _parse_floats(text: str) -> List[float]:
    """
    >>> _parse_floats("1,0.5")
    [1.0, 0.5]
    >>> _parse_floats("")
    []
    """
    text = text.strip()
    if not text:
        return []
    return [float(v) for v in text.split(",")]
