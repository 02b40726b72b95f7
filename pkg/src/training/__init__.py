"""Supervised training: loss, Adam, the epoch loop."""

from .loss import bce_loss, l2_gradients, l2_penalty
from .optimizer import NumericalError, OptimizerState, adam_step, lr_schedule
from .trainer import (
    EpochMetrics,
    Example,
    TrainResult,
    effective_config,
    evaluate_accuracy,
    prepare_examples,
    read_metrics,
    train,
)

__all__ = [
    "bce_loss",
    "l2_gradients",
    "l2_penalty",
    "NumericalError",
    "OptimizerState",
    "adam_step",
    "lr_schedule",
    "EpochMetrics",
    "Example",
    "TrainResult",
    "effective_config",
    "evaluate_accuracy",
    "prepare_examples",
    "read_metrics",
    "train",
]
