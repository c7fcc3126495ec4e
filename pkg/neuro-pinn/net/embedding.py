"""Fourier feature embedding of time."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from errors import ContractViolation


@dataclass
class FourierEmbedding:
    """
    Maps t (ms) to interleaved [sin(w1 t), cos(w1 t), sin(w2 t), ...].

    Fixed frequencies come from the spectral selection; trainable ones are
    appended after them and receive gradients.
    """

    fixed_freqs: np.ndarray
    trainable_freqs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.fixed_freqs = np.asarray(self.fixed_freqs, dtype=float).reshape(-1)
        self.trainable_freqs = np.asarray(self.trainable_freqs, dtype=float).reshape(-1)
        if self.fixed_freqs.size == 0:
            raise ContractViolation("embedding needs at least one fixed frequency")

    @classmethod
    def build(
        cls,
        fixed_freqs: Sequence[float],
        n_trainable: int = 0,
        rng: Optional[np.random.Generator] = None,
    ) -> "FourierEmbedding":
        """Fixed frequencies plus ``n_trainable`` drawn uniformly over their range."""
        fixed = np.asarray(fixed_freqs, dtype=float)
        if n_trainable and rng is None:
            raise ContractViolation("trainable frequencies need a generator")
        trainable = (
            rng.uniform(fixed.min(), fixed.max(), size=int(n_trainable))
            if n_trainable else np.zeros(0)
        )
        return cls(fixed, trainable)

    @property
    def freqs(self) -> np.ndarray:
        return np.concatenate([self.fixed_freqs, self.trainable_freqs])

    @property
    def n_freqs(self) -> int:
        return self.fixed_freqs.size + self.trainable_freqs.size

    @property
    def dim(self) -> int:
        return 2 * self.n_freqs

    def embed(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """
        Features and their time derivative.

        Args:
            t: Scalar or 1-D array of times (ms)

        Returns:
            (features, dfeatures_dt), each shaped (B, dim)
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = self.freqs
        phase = t[:, None] * w[None, :]
        s, c = np.sin(phase), np.cos(phase)
        feats = np.empty((t.shape[0], self.dim))
        dfeats = np.empty_like(feats)
        feats[:, 0::2] = s
        feats[:, 1::2] = c
        dfeats[:, 0::2] = w * c
        dfeats[:, 1::2] = -w * s
        return feats, dfeats

    def freq_grad(self, t, adj_feats: np.ndarray, adj_dfeats: np.ndarray) -> np.ndarray:
        """
        Gradient w.r.t. the trainable frequencies, summed over the batch.

        Args:
            t: Times the features were evaluated at
            adj_feats: dL/dfeatures, (B, dim)
            adj_dfeats: dL/d(dfeatures/dt), (B, dim)
        """
        n_fixed = self.fixed_freqs.size
        if self.trainable_freqs.size == 0:
            return np.zeros(0)
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        w = self.trainable_freqs[None, :]
        phase = t * w
        s, c = np.sin(phase), np.cos(phase)
        cols = slice(2 * n_fixed, None)
        a_sin = adj_feats[:, cols][:, 0::2]
        a_cos = adj_feats[:, cols][:, 1::2]
        d_sin = adj_dfeats[:, cols][:, 0::2]
        d_cos = adj_dfeats[:, cols][:, 1::2]
        g = (
            a_sin * t * c
            - a_cos * t * s
            + d_sin * (c - w * t * s)
            - d_cos * (s + w * t * c)
        )
        return g.sum(axis=0)
