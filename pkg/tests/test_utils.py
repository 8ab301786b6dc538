import numpy as np
import pytest

from smog.utils import (
    THREADS_ENV_VAR,
    as_list,
    content_hash,
    derive_seed,
    make_rng,
    resolve_thread_count,
)


def test_derive_seed_is_stable_and_bounded() -> None:
    seeds = {derive_seed(7, "meta", i) for i in range(100)}
    assert len(seeds) == 100
    assert all(0 <= s < 2**63 for s in seeds)
    assert derive_seed(7) != derive_seed(7, "meta")
    assert derive_seed(7, 1) == derive_seed(7, "1")


def test_make_rng_streams() -> None:
    a = make_rng(3, "x").uniform(size=4)
    np.testing.assert_array_equal(a, make_rng(3, "x").uniform(size=4))
    assert not np.array_equal(a, make_rng(3, "y").uniform(size=4))


def test_content_hash_depends_on_dtype_and_values() -> None:
    a = np.arange(4)
    assert content_hash(a) != content_hash(a.astype(float))
    assert content_hash(a, a) != content_hash(a)
    b = a.copy()
    b[0] = 9
    assert content_hash(a) != content_hash(b)
    assert content_hash(np.asfortranarray(np.eye(2))) == content_hash(np.eye(2))


@pytest.mark.parametrize(
    "value, expected",
    [
        (None, []),
        ("smog", ["smog"]),
        (3, [3]),
        (("a", "b"), ["a", "b"]),
        (["a"], ["a"]),
    ],
)
def test_as_list(value, expected) -> None:
    assert as_list(value) == expected


def test_resolve_thread_count(monkeypatch) -> None:
    monkeypatch.setattr("os.cpu_count", lambda: 6)
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    assert resolve_thread_count() == 6
    assert resolve_thread_count(2) == 2
    monkeypatch.setenv(THREADS_ENV_VAR, "3")
    assert resolve_thread_count() == 3
    assert resolve_thread_count(1) == 1
    monkeypatch.setenv(THREADS_ENV_VAR, " ")
    assert resolve_thread_count() == 6
    with pytest.raises(ValueError, match=">= 0"):
        resolve_thread_count(-1)
