import pytest

from smog.exceptions import (
    ArgumentError,
    ConfigError,
    FactorizationError,
    MetaTaskFitError,
    ModelStateError,
    NumericalError,
)


def test_config_error_init() -> None:
    exc = ConfigError()
    assert exc.path is None
    assert exc.args

    exc = ConfigError(path="experiment.json")
    assert exc.path == "experiment.json"
    assert "experiment.json" in str(exc)

    exc = ConfigError("bad seed", path="experiment.json")
    assert str(exc) == "bad seed"


def test_numerical_error_init() -> None:
    exc = NumericalError()
    assert exc.diagnostics == {}
    assert exc.args

    exc = NumericalError("boom", {"size": 3})
    assert exc.diagnostics == {"size": 3}
    assert str(exc) == "boom"


def test_factorization_error_init() -> None:
    exc = FactorizationError(size=4, levels=(1e-8, 1e-6), scale=2.0)
    assert isinstance(exc, NumericalError)
    assert exc.size == 4
    assert exc.levels == (1e-8, 1e-6)
    assert exc.diagnostics == {"size": 4, "levels": (1e-8, 1e-6), "scale": 2.0}
    assert "4x4" in str(exc)


def test_meta_task_fit_error_init() -> None:
    exc = MetaTaskFitError(task_index=2)
    assert exc.task_index == 2
    assert exc.diagnostics == {"task_index": 2}
    assert "meta task 2" in str(exc)


@pytest.mark.parametrize(
    "cls, base",
    [
        (ArgumentError, ValueError),
        (ConfigError, ValueError),
        (ModelStateError, RuntimeError),
        (NumericalError, ArithmeticError),
        (MetaTaskFitError, NumericalError),
    ],
)
def test_hierarchy(cls, base) -> None:
    assert issubclass(cls, base)
