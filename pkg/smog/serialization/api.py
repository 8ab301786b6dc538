import json
import logging
import os
from functools import singledispatch
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Type, TypeVar, Union

from smog.exceptions import ConfigError
from smog.model import MetaTaskModel

from .utils import _format_json

logger = logging.getLogger(__name__)

# represents one object serialized as a set of named files
SerializedLeafData = Dict[str, bytes]
T = TypeVar("T")
SerializeFunction = Callable[[Any], SerializedLeafData]
DeserializeFunction = Callable[[Type[T], SerializedLeafData], T]

#: File suffix of a serialized meta-task model.
META_SUFFIX = "smogmeta"
MANIFEST_NAME = "manifest.json"


def serialize_leaf(o: Any) -> SerializedLeafData:
    raise NotImplementedError(f"Serialization for {type(o)} is not implemented")


def _deserialize_leaf_base(cls: Type[Any], data: SerializedLeafData) -> Any:
    raise NotImplementedError(f"Deserialization for {cls} is not implemented")


serialize_leaf.f_deserialize = _deserialize_leaf_base  # type: ignore[attr-defined]
serialize_leaf = singledispatch(serialize_leaf)


def register_serialization(
    f_serialize: SerializeFunction, f_deserialize: DeserializeFunction
) -> None:
    serialize_leaf.register(f_serialize)  # type: ignore[attr-defined]
    f_serialize.f_deserialize = f_deserialize  # type: ignore[attr-defined]


def deserialize_leaf(cls: Type[T], data: SerializedLeafData) -> T:
    f_ser: SerializeFunction = serialize_leaf.dispatch(cls)  # type: ignore[attr-defined]
    return f_ser.f_deserialize(cls, data)  # type: ignore[attr-defined]


class MetaModelStorage:
    """Fitted meta-task models stored as ``<directory>/<subdir>/<index>.smogmeta``.

    A ``manifest.json`` next to the models records what they were fit on;
    :meth:`read` refuses a cache whose manifest differs from the expected
    one.
    """

    def __init__(self, directory: Union[str, os.PathLike], subdir: str = "meta") -> None:
        self.directory: Path = Path(directory) / subdir

    def exists(self) -> bool:
        return (self.directory / MANIFEST_NAME).is_file()

    def write(self, models: Sequence[Any], manifest: Optional[Dict[str, Any]] = None) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        for stale in self.directory.glob(f"*.{META_SUFFIX}"):
            stale.unlink()
        for model in models:
            leaf = serialize_leaf(model)
            for suffix, contents in leaf.items():
                Path(self.directory, f"{model.index}.{suffix}").write_bytes(contents)
        info = dict(manifest or {})
        info["indices"] = [m.index for m in models]
        info["type"] = MetaTaskModel.__name__
        (self.directory / MANIFEST_NAME).write_text(_format_json(info) + "\n", encoding="utf-8")
        logger.info(f"Saved {len(models)} meta-task models to {self.directory}")

    def read_manifest(self) -> Dict[str, Any]:
        path = self.directory / MANIFEST_NAME
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"No meta-model cache at {self.directory}", path=str(path))
        except ValueError as ex:
            raise ConfigError(f"Corrupt manifest: {ex}", path=str(path))

    def read(self, expected: Optional[Dict[str, Any]] = None) -> List[Any]:
        manifest = self.read_manifest()
        for key, value in (expected or {}).items():
            if manifest.get(key) != value:
                raise ConfigError(
                    f"Meta-model cache was built with {key}={manifest.get(key)!r}, "
                    f"expected {value!r}",
                    path=str(self.directory),
                )
        models = []
        for index in manifest.get("indices", []):
            path = Path(self.directory, f"{index}.{META_SUFFIX}")
            try:
                data = {META_SUFFIX: path.read_bytes()}
            except FileNotFoundError:
                raise ConfigError(f"Missing meta model {path}", path=str(path))
            models.append(deserialize_leaf(MetaTaskModel, data))
        logger.info(f"Loaded {len(models)} meta-task models from {self.directory}")
        return models
