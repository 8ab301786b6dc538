import hashlib
import os
from collections.abc import Iterable
from typing import Any, List, Optional, Union

import numpy as np

#: Environment variable capping the number of worker threads (0 = auto).
THREADS_ENV_VAR = "SMOG_THREADS"


def derive_seed(root: int, *keys: Union[int, str]) -> int:
    """Derive an independent 63-bit seed from a root seed and a key path.

    The derivation is a content hash, so it doesn't depend on the order in
    which seeds are requested, nor on the interpreter's hash salt.

    >>> derive_seed(0, "alpha", 3) == derive_seed(0, "alpha", 3)
    True
    >>> derive_seed(0, "alpha", 3) == derive_seed(0, "alpha", 4)
    False
    >>> derive_seed(1, "x") == derive_seed(2, "x")
    False
    """
    path = "/".join([str(int(root))] + [str(k) for k in keys])
    digest = hashlib.blake2b(path.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def make_rng(root: int, *keys: Union[int, str]) -> np.random.Generator:
    """Return a numpy generator seeded with :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(root, *keys))


def content_hash(*arrays: Any) -> str:
    """Return a hex digest of the shapes and bytes of ``arrays``.

    >>> a = np.zeros((2, 3))
    >>> content_hash(a) == content_hash(a.copy())
    True
    >>> content_hash(a) == content_hash(a.reshape(3, 2))
    False
    """
    h = hashlib.sha1()
    for arr in arrays:
        arr = np.ascontiguousarray(arr)
        h.update(str((arr.dtype.str, arr.shape)).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


def as_list(value: Optional[Any]) -> List[Any]:
    """Normalizes the value input as a list.

    >>> as_list(None)
    []
    >>> as_list("smog")
    ['smog']
    >>> as_list(("smog", "ind-gp"))
    ['smog', 'ind-gp']
    """
    if value is None:
        return []
    if isinstance(value, str):
        return [value]
    if not isinstance(value, Iterable):
        return [value]
    return list(value)


def resolve_thread_count(requested: Optional[int] = None) -> int:
    """Return the number of worker threads to use.

    ``requested`` wins when given; otherwise the ``SMOG_THREADS`` environment
    variable is read. ``0`` means one worker per CPU.
    """
    if requested is None:
        raw = os.environ.get(THREADS_ENV_VAR, "0").strip() or "0"
        requested = int(raw)
    if requested < 0:
        raise ValueError(f"Thread count must be >= 0, got {requested}")
    if requested == 0:
        return os.cpu_count() or 1
    return requested
