"""Tests for the training objective."""

import math

import numpy as np
import pytest

from src.config import ItsConfig
from src.network import init_parameters
from src.tensor import RngState, ShapeError, Tape, Tensor

from .loss import PROB_EPSILON, bce_loss, l2_gradients, l2_penalty


# ##################################################################
# test cross-entropy hand values
def test_perfect_prediction_is_near_zero():
    assert bce_loss(Tensor([1.0 - PROB_EPSILON]), [1]).item() == pytest.approx(0.0, abs=1e-9)


def test_half_probability_costs_ln2():
    assert bce_loss(Tensor([0.5]), [1]).item() == pytest.approx(math.log(2))


def test_loss_is_averaged_over_sentences():
    assert bce_loss(Tensor([0.5, 0.5]), [1, 0]).item() == pytest.approx(math.log(2))


def test_clamping_keeps_loss_finite():
    value = bce_loss(Tensor([0.0, 1.0]), [1, 0]).item()
    assert np.isfinite(value)
    assert value == pytest.approx(-math.log(PROB_EPSILON), rel=1e-4)


def test_length_mismatch_raises():
    with pytest.raises(ShapeError):
        bce_loss(Tensor([0.5, 0.5]), [1])


def test_gradient_of_loss():
    tape = Tape()
    y = tape.leaf(np.array([0.5, 0.25]), name="y")
    loss = bce_loss(y, [1, 0])
    grad = tape.named_gradients(tape.backward(loss))["y"]
    # d/dy of mean(-log y0, -log(1 - y1))
    np.testing.assert_allclose(grad, [-1.0 / (2 * 0.5), 1.0 / (2 * 0.75)])


# ##################################################################
# test L2 penalty
def test_l2_penalty_value_and_gradient_agree():
    rng = np.random.default_rng(0)
    arrays = {"a.W": rng.normal(size=(3, 2)), "a.b": rng.normal(size=2)}
    tape = Tape()
    leaves = {name: tape.leaf(value, name=name) for name, value in arrays.items()}
    penalty = l2_penalty(leaves, ["a.W"], 0.1)
    assert penalty.item() == pytest.approx(0.1 * float(np.sum(arrays["a.W"] ** 2)))
    grads = tape.named_gradients(tape.backward(penalty))
    np.testing.assert_allclose(grads["a.W"], l2_gradients(arrays, ["a.W"], 0.1)["a.W"])
    np.testing.assert_array_equal(grads["a.b"], np.zeros(2))


def test_l2_excludes_every_bias():
    params = init_parameters(ItsConfig(iterations=2, hidden=4, embedding=4, max_words=3), 10, RngState(0))
    regularized = set(params.regularized_names())
    for name in params.names():
        last = name.rsplit(".", 1)[-1]
        assert (name in regularized) == (not last.startswith("b")), name
    assert "embedding" in regularized
    assert "head.W4" in regularized
    assert "head.b4" not in regularized
