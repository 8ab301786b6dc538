"""The SMOGMETA text format of fitted meta-task models.

A file starts with the ``SMOGMETA 1`` header, followed by ``key=value``
lines holding the structure and natural-scale hyperparameters, a
``[data]`` marker, and the standardized training data as CSV rows of
inputs followed by outputs.
"""

from typing import Dict, List, Tuple, Type

import numpy as np

from smog.data import MultiOutputDataset, StandardizationTransform
from smog.exceptions import ConfigError
from smog.gp import FittedGP, Hyperparameters, condition
from smog.kernels import EquicorrelatedTaskParams, Matern52Params
from smog.model import MetaTaskModel, meta_spec

from .api import META_SUFFIX, SerializedLeafData, register_serialization
from .utils import _format_float, _format_floats, _parse_floats

FORMAT_HEADER = "SMOGMETA"
FORMAT_VERSION = 1
DATA_MARKER = "[data]"
LEAF_KEY = META_SUFFIX


def format_meta_model(model: MetaTaskModel) -> str:
    """Render ``model`` as SMOGMETA text."""
    gp = model.gp
    params = gp.params
    spec = gp.spec
    lines = [
        f"{FORMAT_HEADER} {FORMAT_VERSION}",
        f"index={model.index}",
        f"input_dim={spec.input_dim}",
        f"objective_count={spec.objective_count}",
        f"task_mode={spec.task_mode}",
        f"lengthscales={_format_floats(params.input.lengthscales)}",
        f"outputscale={_format_float(params.input.outputscale)}",
        f"sigma={_format_floats(params.task.sigma)}",
        f"rho={_format_float(params.task.rho)}",
        f"noise={_format_floats(params.noise)}",
        f"transform_means={_format_floats(model.transform.means)}",
        f"transform_stds={_format_floats(model.transform.stds)}",
        f"rows={gp.data.n}",
        DATA_MARKER,
    ]
    for x, y in zip(gp.data.inputs, gp.data.outputs):
        lines.append(_format_floats(np.concatenate([x, y])))
    return "\n".join(lines) + "\n"


def _split(text: str) -> Tuple[Dict[str, str], List[str]]:
    lines = text.splitlines()
    if not lines or lines[0].split() != [FORMAT_HEADER, str(FORMAT_VERSION)]:
        raise ConfigError(f"Not a {FORMAT_HEADER} {FORMAT_VERSION} document")
    try:
        marker = lines.index(DATA_MARKER)
    except ValueError:
        raise ConfigError(f"Missing {DATA_MARKER} section")
    header: Dict[str, str] = {}
    for line in lines[1:marker]:
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"Malformed line {line!r}")
        header[key.strip()] = value.strip()
    return header, [line for line in lines[marker + 1 :] if line.strip()]


def parse_meta_model(text: str) -> MetaTaskModel:
    """Parse SMOGMETA text and recondition the GP on the stored data.

    :raises ConfigError: if the document is malformed.
    """
    header, rows = _split(text)
    try:
        dim = int(header["input_dim"])
        O = int(header["objective_count"])
        params = Hyperparameters(
            input=Matern52Params(
                _parse_floats(header["lengthscales"]), float(header["outputscale"])
            ),
            task=EquicorrelatedTaskParams(_parse_floats(header["sigma"]), float(header["rho"])),
            noise=_parse_floats(header["noise"]),
        )
        transform = StandardizationTransform(
            _parse_floats(header["transform_means"]), _parse_floats(header["transform_stds"])
        )
        values = np.array([_parse_floats(row) for row in rows], dtype=float).reshape(-1, dim + O)
        expected = int(header["rows"])
        index = int(header["index"])
        task_mode = header["task_mode"]
    except (KeyError, ValueError) as ex:
        raise ConfigError(f"Malformed {FORMAT_HEADER} document: {ex}") from ex
    if values.shape[0] != expected:
        raise ConfigError(f"Expected {expected} data rows, found {values.shape[0]}")
    spec = meta_spec(dim, O, task_mode)
    data = MultiOutputDataset(values[:, :dim], values[:, dim:])
    gp = condition(FittedGP.prior_only(spec, params), data)
    return MetaTaskModel(index=index, gp=gp, transform=transform)


def _serialize_MetaTaskModel(o: MetaTaskModel) -> SerializedLeafData:
    return {LEAF_KEY: format_meta_model(o).encode("utf-8")}


def _deserialize_MetaTaskModel(cls: Type[MetaTaskModel], data: SerializedLeafData) -> MetaTaskModel:
    return parse_meta_model(data[LEAF_KEY].decode("utf-8"))


register_serialization(_serialize_MetaTaskModel, _deserialize_MetaTaskModel)
