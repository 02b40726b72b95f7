"""Sentence-label cross-entropy and the L2 penalty."""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from src import tensor as T
from src.tensor import ShapeError, Tensor

PROB_EPSILON = 1e-12


def bce_loss(scores: Tensor, labels: Sequence[int] | np.ndarray) -> Tensor:
    """Mean over sentences of -[y' log y + (1 - y') log(1 - y)], y clamped to [eps, 1 - eps]."""
    targets = np.asarray(labels, dtype=np.float64)
    if targets.shape != scores.shape:
        raise ShapeError("bce_loss", scores.shape, targets.shape)
    clamped = T.clamp(scores, PROB_EPSILON, 1.0 - PROB_EPSILON)
    log_likelihood = T.multiply(targets, T.log(clamped)) + T.multiply(1.0 - targets, T.log(1.0 - clamped))
    return T.subtract(0.0, T.mean(log_likelihood))


def l2_penalty(weights: Mapping[str, Tensor], names: Iterable[str], coefficient: float) -> Tensor:
    """coefficient * sum of squared entries over ``names`` (biases are never passed in)."""
    total = Tensor(0.0)
    for name in names:
        total = total + T.sum_of_squares(weights[name])
    return T.multiply(coefficient, total)


def l2_gradients(arrays: Mapping[str, np.ndarray], names: Iterable[str], coefficient: float) -> dict[str, np.ndarray]:
    """Closed-form gradient of l2_penalty."""
    return {name: 2.0 * coefficient * arrays[name] for name in names}
