import math

import numpy as np
import pytest

from smog.exceptions import ArgumentError, NumericalError
from smog.fitting import (
    UNCONSTRAINED_BOUND,
    ParameterBlock,
    ParameterCodec,
    central_difference_gradient,
    multi_start_maximize,
)
from smog.priors import NOISE_LOWER_BOUND


@pytest.mark.parametrize(
    "transform,value",
    [
        ("positive", [0.01, 1.0, 7.5]),
        ("noise", [1e-4, 0.3]),
        ("unit", [0.1, 0.5, 0.9]),
        ("identity", [-2.0, 0.0, 3.0]),
    ],
)
def test_block_transforms_invert(transform, value) -> None:
    block = ParameterBlock("p", len(value), transform)
    np.testing.assert_allclose(block.to_natural(block.to_unconstrained(value)), value, rtol=1e-9)


def test_noise_transform_respects_lower_bound() -> None:
    block = ParameterBlock("noise", 1, "noise")
    assert block.to_natural(np.array([-50.0]))[0] >= NOISE_LOWER_BOUND


def test_codec_pack_unpack() -> None:
    codec = ParameterCodec(
        [ParameterBlock("lengthscale", 2, "positive"), ParameterBlock("rho", 1, "unit")]
    )
    assert codec.size == 3
    assert codec.names() == ["lengthscale", "rho"]
    values = codec.unpack(codec.pack({"lengthscale": [0.3, 2.0], "rho": [0.4]}))
    np.testing.assert_allclose(values["lengthscale"], [0.3, 2.0])
    np.testing.assert_allclose(values["rho"], [0.4])


def test_codec_clips_to_box() -> None:
    codec = ParameterCodec([ParameterBlock("w", 1, "identity")])
    assert codec.pack({"w": [100.0]})[0] == UNCONSTRAINED_BOUND


def test_codec_size_errors() -> None:
    codec = ParameterCodec([ParameterBlock("lengthscale", 2, "positive")])
    with pytest.raises(ArgumentError, match="needs 2 values"):
        codec.pack({"lengthscale": [1.0]})
    with pytest.raises(ArgumentError, match="Expected 2 parameters"):
        codec.unpack(np.zeros(3))


def test_central_difference_gradient() -> None:
    def f(u: np.ndarray) -> float:
        return float(np.sin(u[0]) + u[1] ** 3)

    grad = central_difference_gradient(f, np.array([0.3, 2.0]))
    np.testing.assert_allclose(grad, [math.cos(0.3), 12.0], rtol=1e-7)


def test_multi_start_maximize_finds_concave_maximum() -> None:
    target = np.array([1.0, -2.0])
    result = multi_start_maximize(
        lambda u: -float(np.sum((u - target) ** 2)), [np.zeros(2), np.full(2, 5.0)]
    )
    np.testing.assert_allclose(result.x, target, atol=1e-4)
    assert len(result.restart_values) == 2
    assert result.value == max(result.restart_values)


def test_multi_start_maximize_penalizes_invalid_points() -> None:
    def objective(u: np.ndarray) -> float:
        if u[0] < 0:
            raise NumericalError("negative")
        if u[0] > 3:
            return -math.inf
        return -float((u[0] - 1.0) ** 2)

    result = multi_start_maximize(objective, [np.array([0.5])])
    assert result.x[0] == pytest.approx(1.0, abs=1e-4)


def test_multi_start_maximize_all_failed() -> None:
    with pytest.raises(NumericalError, match="Every restart"):
        multi_start_maximize(lambda u: -math.inf, [np.zeros(1), np.ones(1)])


def test_multi_start_maximize_ties_keep_first_restart() -> None:
    result = multi_start_maximize(lambda u: 1.0, [np.array([1.0]), np.array([2.0])])
    assert result.x[0] == 1.0
