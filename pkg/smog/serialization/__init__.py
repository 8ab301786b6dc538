from . import functions  # needed to run register functions
from .api import (
    DeserializeFunction,
    MetaModelStorage,
    SerializedLeafData,
    SerializeFunction,
    deserialize_leaf,
    register_serialization,
    serialize_leaf,
)
from .functions import format_meta_model, parse_meta_model
