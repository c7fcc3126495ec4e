"""Gradient-norm loss balancing across the residual equations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from config import BALANCE_ALPHA, BALANCE_EPS, BALANCE_UPDATE_EVERY
from errors import ContractViolation


@dataclass(frozen=True)
class BalanceState:
    """
    Per-equation loss weights and their refresh cadence.

    Usage:
        bs = BalanceState.uniform(3)
        if bs.due(k):
            bs = update_balance(bs, grad_norms)
    """

    weights: np.ndarray
    alpha: float = BALANCE_ALPHA
    eps: float = BALANCE_EPS
    update_every: int = BALANCE_UPDATE_EVERY

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ContractViolation(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.eps > 0:
            raise ContractViolation(f"eps must be positive, got {self.eps}")
        if int(self.update_every) < 1:
            raise ContractViolation("update_every must be >= 1")

    @classmethod
    def uniform(cls, n_equations: int, **kwargs) -> "BalanceState":
        return cls(np.ones(n_equations), **kwargs)

    def due(self, iteration: int) -> bool:
        """True on iterations where the weights are refreshed."""
        return iteration % int(self.update_every) == 0


def update_balance(bs: BalanceState, grad_norms) -> BalanceState:
    """
    w <- alpha * w + (1 - alpha) * w_hat, with
    w_hat_j = sum_k (|g_k| + eps) / (|g_j| + eps).
    """
    g = np.asarray(grad_norms, dtype=float)
    if g.shape != bs.weights.shape:
        raise ContractViolation(f"expected {bs.weights.size} gradient norms, got {g.shape}")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ContractViolation("gradient norms must be finite and non-negative")
    smoothed = g + bs.eps
    w_hat = smoothed.sum() / smoothed
    weights = bs.alpha * bs.weights + (1.0 - bs.alpha) * w_hat
    return BalanceState(weights, bs.alpha, bs.eps, bs.update_every)
