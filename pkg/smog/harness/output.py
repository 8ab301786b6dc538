"""
CSV tables and SVG gap plots.

Both writers are byte-deterministic: floats are written with 17
significant digits, lines end with ``\\n``, and the SVG carries no date and
a fixed hash salt.
"""

import csv
import logging
import os
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from smog.exceptions import ArgumentError, ConfigError
from smog.serialization.utils import _format_float

from .suite import GapRow, ResultRow

logger = logging.getLogger(__name__)

CSV_HEADER = ("model", "benchmark", "seed", "iteration", "hv", "hv_gap", "elapsed_ms")

#: Linear range of the symmetric-log gap axis; exact zero gaps stay visible.
GAP_LINTHRESH = 1e-3

_SVG_RC = {
    "svg.hashsalt": "smog",
    "svg.fonttype": "path",
    "font.family": "DejaVu Sans",
    "axes.unicode_minus": False,
}

PathLike = Union[str, os.PathLike]


def emit_csv(rows: Sequence[ResultRow], path: PathLike) -> Path:
    """Write ``rows`` in the result CSV format.

    :raises ArgumentError: if there are no rows.
    """
    if not rows:
        raise ArgumentError("Refusing to write an empty result table")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row.model,
                    row.benchmark,
                    row.seed,
                    row.iteration,
                    _format_float(row.hv),
                    _format_float(row.hv_gap),
                    _format_float(row.elapsed_ms),
                ]
            )
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def read_csv(path: PathLike) -> List[ResultRow]:
    """Parse a file written by :func:`emit_csv`.

    :raises ConfigError: if the file is missing or isn't a result table.
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or tuple(header) != CSV_HEADER:
                raise ConfigError(f"{path} is not a result table", path=str(path))
            rows = []
            for record in reader:
                model, benchmark, seed, iteration, hv, gap, elapsed = record
                rows.append(
                    ResultRow(
                        model, benchmark, int(seed), int(iteration),
                        float(hv), float(gap), float(elapsed),
                    )
                )
    except FileNotFoundError:
        raise ConfigError(f"Result table not found: {path}", path=str(path))
    except ValueError as ex:
        if isinstance(ex, ConfigError):
            raise
        raise ConfigError(f"Malformed result table {path}: {ex}", path=str(path))
    return rows


def emit_front(front: np.ndarray, path: PathLike) -> Path:
    """Write a Pareto front, one objective vector per line."""
    front = np.atleast_2d(np.asarray(front, dtype=float))
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([f"y{o}" for o in range(front.shape[1])])
        for y in front:
            writer.writerow([_format_float(v) for v in y])
    return path


def _by_model(table: Iterable[GapRow]) -> Dict[str, List[GapRow]]:
    out: Dict[str, List[GapRow]] = {}
    for row in table:
        out.setdefault(row.model, []).append(row)
    for rows in out.values():
        rows.sort(key=lambda r: r.iteration)
    return dict(sorted(out.items()))


def emit_plot(table: Sequence[GapRow], path: PathLike, title: Optional[str] = None) -> Path:
    """Render mean gap curves with standard-error bands as one SVG.

    Each model's curve is the element with id ``gap-curve-<model>`` and its
    band ``gap-band-<model>``.

    :raises ArgumentError: if the table is empty.
    """
    curves = _by_model(table)
    if not curves:
        raise ArgumentError("No models to plot")
    path = Path(path)
    with matplotlib.rc_context(_SVG_RC):
        fig = Figure(figsize=(6.4, 4.0))
        ax = fig.add_subplot()
        for model, rows in curves.items():
            it = np.array([r.iteration for r in rows])
            mean = np.array([r.mean_gap for r in rows])
            err = np.array([r.stderr for r in rows])
            (line,) = ax.plot(it, mean, label=model)
            line.set_gid(f"gap-curve-{model}")
            band = ax.fill_between(
                it, np.maximum(mean - err, 0.0), mean + err, alpha=0.2, color=line.get_color()
            )
            band.set_gid(f"gap-band-{model}")
        ax.set_yscale("symlog", linthresh=GAP_LINTHRESH)
        ax.set_xlabel("Iteration")
        ax.set_ylabel("Hypervolume gap")
        if title:
            ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=8)
        fig.savefig(path, format="svg", metadata={"Date": None})
    logger.info(f"Wrote {len(curves)} gap curves to {path}")
    return path
