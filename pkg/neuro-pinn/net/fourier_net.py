"""Fourier-feature MLP with random weight factorization.

Each layer computes z = a @ W + b with W = diag(exp(s)) @ W_N, so the
scale vector s has one entry per input unit. Hidden layers use the
sigmoid; the output passes through the network's output map and a fixed
affine rescaling (shift, scale).

Time derivatives are carried forward as tangents next to the values,
and ``backward`` runs reverse mode over that forward sweep, so gradients
of any loss built from (value, dvalue/dt) are exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import RWF_MU, RWF_SIGMA
from errors import ContractViolation
from net.embedding import FourierEmbedding

log = logging.getLogger(__name__)

OUTPUT_MAPS = ("identity", "sigmoid", "softplus")


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _output_map(kind: str, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(g, g', g'') of an output map at z."""
    if kind == "identity":
        return z, np.ones_like(z), np.zeros_like(z)
    if kind == "sigmoid":
        y = _sigmoid(z)
        d1 = y * (1.0 - y)
        return y, d1, d1 * (1.0 - 2.0 * y)
    if kind == "softplus":
        sig = _sigmoid(z)
        return np.logaddexp(0.0, z), sig, sig * (1.0 - sig)
    raise ContractViolation(f"unknown output map {kind!r}")


@dataclass
class RwfLayer:
    """Dense layer with factorized weight diag(exp(s)) @ W_N."""

    s: np.ndarray
    w_n: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        n_in, n_out = self.w_n.shape
        if self.s.shape != (n_in,) or self.b.shape != (n_out,):
            raise ContractViolation(
                f"layer shapes disagree: s{self.s.shape} W_N{self.w_n.shape} b{self.b.shape}"
            )

    @property
    def weight(self) -> np.ndarray:
        return np.exp(self.s)[:, None] * self.w_n

    @property
    def n_params(self) -> int:
        return self.s.size + self.w_n.size + self.b.size


@dataclass
class Tape:
    """Values kept by a forward sweep for the matching backward sweep."""

    t: np.ndarray
    inputs: List[Tuple[np.ndarray, np.ndarray]]   # (a, da/dt) entering each layer
    pre: List[Tuple[np.ndarray, np.ndarray]]      # (z, dz/dt) leaving each layer
    weights: List[np.ndarray]
    value: np.ndarray
    dvalue: np.ndarray


class FourierNet:
    """
    One-output network approximating a single state variable of time.

    Usage:
        net = init_network([50, 50], emb, seed=1, output_map="sigmoid")
        v, dv = net.forward_dt(t)
        grads = net.backward(t, dloss_dv, dloss_ddv)
    """

    def __init__(
        self,
        embedding: FourierEmbedding,
        layers: List[RwfLayer],
        output_map: str = "identity",
        out_shift: float = 0.0,
        out_scale: float = 1.0,
        name: str = "",
    ):
        if output_map not in OUTPUT_MAPS:
            raise ContractViolation(f"unknown output map {output_map!r}")
        if not layers:
            raise ContractViolation("network needs at least one layer")
        if layers[0].w_n.shape[0] != embedding.dim:
            raise ContractViolation("first layer width does not match embedding dimension")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.w_n.shape[1] != nxt.w_n.shape[0]:
                raise ContractViolation("consecutive layer widths disagree")
        if layers[-1].w_n.shape[1] != 1:
            raise ContractViolation("output layer must have width 1")
        self.embedding = embedding
        self.layers = layers
        self.output_map = output_map
        self.out_shift = float(out_shift)
        self.out_scale = float(out_scale)
        self.name = name

    @property
    def widths(self) -> List[int]:
        return [layer.w_n.shape[1] for layer in self.layers[:-1]]

    @property
    def n_params(self) -> int:
        return sum(layer.n_params for layer in self.layers) + self.embedding.trainable_freqs.size

    def param_counts(self) -> Dict[str, int]:
        """Trainable parameter count broken down by class."""
        return {
            "weights": sum(layer.w_n.size for layer in self.layers),
            "biases": sum(layer.b.size for layer in self.layers),
            "rwf_scales": sum(layer.s.size for layer in self.layers),
            "frequencies": int(self.embedding.trainable_freqs.size),
            "total": self.n_params,
        }

    # evaluation

    def trace(self, t) -> Tape:
        """Forward sweep carrying (value, d/dt) pairs; returns the tape."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        a, da = self.embedding.embed(t)
        inputs, pre, weights = [], [], []
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            w = layer.weight
            inputs.append((a, da))
            weights.append(w)
            z = a @ w + layer.b
            dz = da @ w
            pre.append((z, dz))
            if i < last:
                a = _sigmoid(z)
                da = a * (1.0 - a) * dz
        z, dz = pre[-1]
        y, g1, _ = _output_map(self.output_map, z[:, 0])
        value = self.out_shift + self.out_scale * y
        dvalue = self.out_scale * g1 * dz[:, 0]
        return Tape(t, inputs, pre, weights, value, dvalue)

    def forward(self, t) -> np.ndarray:
        return self.trace(t).value

    def forward_dt(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """Network value and its exact time derivative at t."""
        tape = self.trace(t)
        return tape.value, tape.dvalue

    def backward(self, t, adj_value, adj_dvalue, tape: Optional[Tape] = None) -> np.ndarray:
        """
        Parameter gradient of a loss with the given partials.

        Args:
            t: Batch of times (B,)
            adj_value: dL/d(value) per sample (B,)
            adj_dvalue: dL/d(dvalue/dt) per sample (B,)
            tape: Forward tape at the same t (recomputed when omitted)

        Returns:
            Flat gradient in ``get_flat`` order, summed over the batch
        """
        if tape is None:
            tape = self.trace(t)
        n = tape.t.shape[0]
        adj_value = np.broadcast_to(np.asarray(adj_value, dtype=float), (n,))
        adj_dvalue = np.broadcast_to(np.asarray(adj_dvalue, dtype=float), (n,))

        z, dz = tape.pre[-1]
        _, g1, g2 = _output_map(self.output_map, z[:, 0])
        ybar = self.out_scale * adj_value
        dybar = self.out_scale * adj_dvalue
        zbar = (ybar * g1 + dybar * g2 * dz[:, 0])[:, None]
        dzbar = (dybar * g1)[:, None]

        grads: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            a, da = tape.inputs[i]
            w = tape.weights[i]
            wbar = a.T @ zbar + da.T @ dzbar
            bbar = zbar.sum(axis=0)
            sbar = np.sum(wbar * w, axis=1)
            wnbar = np.exp(layer.s)[:, None] * wbar
            grads[i] = (wnbar, sbar, bbar)

            abar = zbar @ w.T
            dabar = dzbar @ w.T
            if i == 0:
                break
            # undo the hidden sigmoid that produced a
            zp, dzp = tape.pre[i - 1]
            d1 = a * (1.0 - a)
            d2 = d1 * (1.0 - 2.0 * a)
            zbar = abar * d1 + dabar * d2 * dzp
            dzbar = dabar * d1

        freq_bar = self.embedding.freq_grad(tape.t, abar, dabar)
        parts = []
        for wnbar, sbar, bbar in grads:
            parts.extend([wnbar.ravel(), sbar, bbar])
        parts.append(freq_bar)
        return np.concatenate(parts)

    # flat parameter access

    def get_flat(self) -> np.ndarray:
        """All trainable parameters: per layer W_N, s, b; then trainable frequencies."""
        parts = []
        for layer in self.layers:
            parts.extend([layer.w_n.ravel(), layer.s, layer.b])
        parts.append(self.embedding.trainable_freqs)
        return np.concatenate(parts)

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_params,):
            raise ContractViolation(f"expected {self.n_params} parameters, got {flat.shape}")
        pos = 0
        for layer in self.layers:
            for attr in ("w_n", "s", "b"):
                arr = getattr(layer, attr)
                setattr(layer, attr, flat[pos:pos + arr.size].reshape(arr.shape).copy())
                pos += arr.size
        k = self.embedding.trainable_freqs.size
        self.embedding.trainable_freqs = flat[pos:pos + k].copy()

    # checkpoints

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "output_map": self.output_map,
            "out_shift": self.out_shift,
            "out_scale": self.out_scale,
            "fixed_freqs": self.embedding.fixed_freqs.tolist(),
            "trainable_freqs": self.embedding.trainable_freqs.tolist(),
            "layers": [
                {"s": l.s.tolist(), "w_n": l.w_n.tolist(), "b": l.b.tolist()}
                for l in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FourierNet":
        emb = FourierEmbedding(doc["fixed_freqs"], doc.get("trainable_freqs", []))
        layers = [
            RwfLayer(
                np.asarray(l["s"], dtype=float),
                np.asarray(l["w_n"], dtype=float).reshape(len(l["s"]), -1),
                np.asarray(l["b"], dtype=float),
            )
            for l in doc["layers"]
        ]
        return cls(
            emb, layers, doc.get("output_map", "identity"),
            doc.get("out_shift", 0.0), doc.get("out_scale", 1.0), doc.get("name", ""),
        )


def init_network(
    widths: Sequence[int],
    embedding: FourierEmbedding,
    seed: int,
    rwf_mu: float = RWF_MU,
    rwf_sigma: float = RWF_SIGMA,
    output_map: str = "identity",
    out_shift: float = 0.0,
    out_scale: float = 1.0,
    name: str = "",
    rng: Optional[np.random.Generator] = None,
) -> FourierNet:
    """
    Glorot-uniform W_N and b, RWF scales s ~ N(mu, sigma^2).

    Args:
        widths: Hidden layer widths, e.g. [50, 50]
        embedding: Input embedding (fixes the input width)
        seed: Philox seed, used when ``rng`` is not given
        rwf_mu: Mean of the scale draws
        rwf_sigma: Std of the scale draws
        output_map: identity | sigmoid | softplus
        out_shift: Fixed offset added to the mapped output
        out_scale: Fixed factor applied to the mapped output
        name: State variable this network represents
        rng: Shared generator (lets several nets draw from one stream)

    Returns:
        A freshly initialized FourierNet
    """
    if any(int(w) < 1 for w in widths):
        raise ContractViolation(f"layer widths must be >= 1, got {list(widths)}")
    rng = rng or np.random.Generator(np.random.Philox(int(seed)))
    sizes = [embedding.dim] + [int(w) for w in widths] + [1]
    layers = []
    for n_in, n_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        w_n = rng.uniform(-limit, limit, size=(n_in, n_out))
        b = rng.uniform(-limit, limit, size=n_out)
        s = rng.normal(rwf_mu, rwf_sigma, size=n_in)
        layers.append(RwfLayer(s, w_n, b))
    net = FourierNet(embedding, layers, output_map, out_shift, out_scale, name)
    log.debug("initialized %s net: widths %s, %d params", name or "?", list(widths), net.n_params)
    return net
