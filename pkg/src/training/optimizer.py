"""Adam with bias correction and the step-annealed learning rate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from src.config import TrainConfig


class NumericalError(ArithmeticError):
    """NaN or infinite values during optimisation."""


@dataclass
class OptimizerState:
    """Adam moments per parameter name plus the step counter."""

    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def create(cls, params: Mapping[str, np.ndarray], beta1=0.9, beta2=0.999, epsilon=1e-8) -> OptimizerState:
        return cls(
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
            m={name: np.zeros_like(value) for name, value in params.items()},
            v={name: np.zeros_like(value) for name, value in params.items()},
        )

    def to_dict(self) -> dict:
        return {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "step": self.step,
            "m": self.m,
            "v": self.v,
        }

    @classmethod
    def from_dict(cls, data: dict) -> OptimizerState:
        return cls(
            beta1=float(data["beta1"]),
            beta2=float(data["beta2"]),
            epsilon=float(data["epsilon"]),
            step=int(data["step"]),
            m=dict(data["m"]),
            v=dict(data["v"]),
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: OptimizerState,
    lr: float,
) -> OptimizerState:
    """One bias-corrected Adam update applied to ``params`` in place.

    Every gradient is checked before anything changes, so a NaN leaves both
    the parameters and the state untouched.
    """
    if lr <= 0:
        raise ValueError(f"Learning rate must be positive, got {lr}")
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        if grad.shape != value.shape:
            raise ValueError(f"Gradient for '{name}' has shape {grad.shape}, parameter has {value.shape}")
        if not np.all(np.isfinite(grad)):
            raise NumericalError(f"Non-finite gradient for parameter '{name}'")

    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(value)
        m = state.m.setdefault(name, np.zeros_like(value))
        v = state.v.setdefault(name, np.zeros_like(value))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * (grad * grad)
        value -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return state


def lr_schedule(epoch: int, config: TrainConfig) -> float:
    """learning_rate * anneal_factor ** (epoch // anneal_period)."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return config.learning_rate * config.anneal_factor ** (epoch // config.anneal_period)
