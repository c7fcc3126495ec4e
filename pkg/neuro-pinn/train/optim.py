"""Adam and staircase learning-rate schedules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from config import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from errors import ContractViolation


@dataclass(frozen=True)
class LrSchedule:
    """lr(k) = initial * decay_factor ** (k // decay_every)."""

    initial: float
    decay_factor: float = 1.0
    decay_every: int = 1

    def __post_init__(self):
        if not self.initial > 0 or not self.decay_factor > 0 or int(self.decay_every) < 1:
            raise ContractViolation(f"invalid learning-rate schedule {self}")

    @classmethod
    def constant(cls, lr: float) -> "LrSchedule":
        return cls(lr, 1.0, 1)

    def __call__(self, k: int) -> float:
        return self.initial * self.decay_factor ** (k // int(self.decay_every))


@dataclass
class AdamState:
    """First/second moment accumulators for one parameter vector."""

    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps_adam: float = ADAM_EPS

    @classmethod
    def zeros(cls, n: int, **kwargs) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, **kwargs)


def adam_step(
    state: AdamState, params: np.ndarray, grads: np.ndarray, lr: float
) -> Tuple[AdamState, np.ndarray]:
    """
    One bias-corrected Adam update.

    Args:
        state: Moments before the step
        params: Current parameter vector
        grads: Gradient at ``params``
        lr: Step size for this iteration

    Returns:
        (new state, new params)
    """
    if not (state.m.shape == params.shape == grads.shape):
        raise ContractViolation(
            f"Adam shapes disagree: m{state.m.shape} params{params.shape} grads{grads.shape}"
        )
    k = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    m = b1 * state.m + (1.0 - b1) * grads
    v = b2 * state.v + (1.0 - b2) * grads * grads
    m_hat = m / (1.0 - b1 ** k)
    v_hat = v / (1.0 - b2 ** k)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + state.eps_adam)
    return AdamState(m, v, k, b1, b2, state.eps_adam), new_params
