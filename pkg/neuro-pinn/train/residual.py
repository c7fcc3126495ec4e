"""ODE residual losses and their exact gradients.

For equation i the residual is r_i = dX_i/dt - F_i(X; lambda) with X and
dX/dt taken from the per-state networks. The model vector field is
evaluated once on Dual numbers seeded along every state and every
estimated parameter, which yields dF_i/dX_j and dF_i/dlambda_k exactly.
Those partials become the adjoints handed to each network's backward
sweep.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import CHUNK_SIZE
from dual import Dual, tangent_of, value_of
from errors import ContractViolation, NonFiniteResidual
from models import ModelParams, ModelSpec
from net import FourierNet
from train.params import ConstrainedParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradLayout:
    """Order of the trainable block: networks (state order), then z."""

    net_names: Tuple[str, ...]
    net_sizes: Tuple[int, ...]
    n_z: int

    @classmethod
    def of(cls, nets: Mapping[str, FourierNet], trainable: Sequence[str], n_z: int) -> "GradLayout":
        return cls(tuple(trainable), tuple(nets[n].n_params for n in trainable), n_z)

    @property
    def size(self) -> int:
        return sum(self.net_sizes) + self.n_z

    def split(self, flat: np.ndarray) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
        """Flat gradient -> ({net name: slice}, z slice)."""
        out, pos = {}, 0
        for name, size in zip(self.net_names, self.net_sizes):
            out[name] = flat[pos:pos + size]
            pos += size
        return out, flat[pos:]


@dataclass
class ResidualEval:
    """
    Residual losses at one batch.

    ``grad`` is the gradient of sum_i weights_i * losses_i over the
    trainable block. ``eq_grads`` (one row per equation, unweighted) is
    present only when per-equation gradients were requested.
    """

    losses: np.ndarray
    weights: np.ndarray
    grad: np.ndarray
    layout: GradLayout
    eq_grads: Optional[np.ndarray] = None

    @property
    def total(self) -> float:
        return float(np.dot(self.weights, self.losses))

    def eq_grad_norms(self) -> np.ndarray:
        if self.eq_grads is None:
            raise ContractViolation("per-equation gradients were not computed")
        return np.linalg.norm(self.eq_grads, axis=1)

    def weighted(self, weights: np.ndarray) -> np.ndarray:
        """Total gradient under other weights (needs per-equation gradients)."""
        if self.eq_grads is None:
            raise ContractViolation("per-equation gradients were not computed")
        return np.asarray(weights) @ self.eq_grads


def _unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _chunk(
    nets: Mapping[str, FourierNet],
    spec: ModelSpec,
    cp: ConstrainedParams,
    fixed: Mapping[str, float],
    t: np.ndarray,
    weights: np.ndarray,
    layout: GradLayout,
    per_equation: bool,
    scale: float,
):
    d = spec.dim
    k_dirs = d + len(cp.names)
    n = t.shape[0]
    names = spec.state_names

    tapes = [nets[s].trace(t) for s in names]
    states = [Dual(tape.value, _unit(k_dirs, j)) for j, tape in enumerate(tapes)]
    lam = cp.lam
    p = dict(fixed)
    for k, pname in enumerate(cp.names):
        p[pname] = Dual(lam[k], _unit(k_dirs, d + k))

    field = spec.rhs(states, p)
    f_val = np.stack([np.broadcast_to(value_of(f), (n,)) for f in field])
    jac = np.stack([tangent_of(f, (n,), k_dirs) for f in field])       # (d, n, d+K)
    dx = np.stack([tape.dvalue for tape in tapes])
    r = dx - f_val

    bad = ~np.isfinite(r)
    if bad.any():
        i, b = np.argwhere(bad)[0]
        raise NonFiniteResidual(names[i], float(t[b]))

    sq = np.sum(r * r, axis=1)
    coef = 2.0 * scale * r                                             # dL_i / dr_i
    dz = -np.einsum("ib,ibk->ik", coef, jac[:, :, d:]) * lam          # (d, K)

    index = {s: j for j, s in enumerate(names)}

    def net_grads(row_weights: np.ndarray) -> List[np.ndarray]:
        parts = []
        for s in layout.net_names:
            j = index[s]
            adj_v = -np.einsum("i,ib->b", row_weights, coef * jac[:, :, j])
            adj_dv = row_weights[j] * coef[j]
            parts.append(nets[s].backward(t, adj_v, adj_dv, tapes[j]))
        return parts

    if per_equation:
        rows = []
        for i in range(d):
            parts = net_grads(_unit(d, i))
            parts.append(dz[i])
            rows.append(np.concatenate(parts))
        return sq, np.vstack(rows)

    parts = net_grads(weights)
    parts.append(weights @ dz)
    return sq, np.concatenate(parts)


def residual_losses(
    nets: Mapping[str, FourierNet],
    spec: ModelSpec,
    cp: ConstrainedParams,
    t_batch: np.ndarray,
    base: ModelParams,
    weights: Optional[np.ndarray] = None,
    trainable: Optional[Sequence[str]] = None,
    per_equation: bool = False,
    threads: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> ResidualEval:
    """
    Mean squared residual of every equation plus exact gradients.

    Args:
        nets: One network per state variable, keyed by state name
        spec: Model specification
        cp: Estimated parameters (gradients are taken w.r.t. cp.z)
        t_batch: Collocation times (ms)
        base: Complete params supplying the fixed (non-estimated) values
        weights: Per-equation loss weights (default all ones)
        trainable: Networks whose parameters get gradients (default: all
            but the observed-variable network)
        per_equation: Also return one unweighted gradient row per equation
        threads: Worker threads over fixed-size chunks
        chunk_size: Samples per chunk; partial sums are reduced in chunk order

    Returns:
        ResidualEval
    """
    missing = [s for s in spec.state_names if s not in nets]
    if missing:
        raise ContractViolation(f"no network for state(s) {missing}")
    t_batch = np.asarray(t_batch, dtype=float).reshape(-1)
    if t_batch.size == 0:
        raise ContractViolation("empty collocation batch")
    d = spec.dim
    weights = np.ones(d) if weights is None else np.asarray(weights, dtype=float)
    if trainable is None:
        trainable = [s for i, s in enumerate(spec.state_names) if i != spec.observed_index]
    layout = GradLayout.of(nets, trainable, len(cp.names))
    fixed = {k: v for k, v in base.items() if k not in cp.names}
    scale = 1.0 / t_batch.size

    chunks = [t_batch[i:i + chunk_size] for i in range(0, t_batch.size, chunk_size)]

    def work(t):
        return _chunk(nets, spec, cp, fixed, t, weights, layout, per_equation, scale)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, chunks))
    else:
        partials = [work(t) for t in chunks]

    sq_total = partials[0][0].copy()
    grad_total = partials[0][1].copy()
    for sq, g in partials[1:]:
        sq_total += sq
        grad_total += g
    losses = sq_total * scale

    if per_equation:
        return ResidualEval(losses, weights, weights @ grad_total, layout, grad_total)
    return ResidualEval(losses, weights, grad_total, layout)


def residual_values(
    nets: Mapping[str, FourierNet],
    spec: ModelSpec,
    params: ModelParams,
    t: np.ndarray,
) -> np.ndarray:
    """Raw residuals r_i(t), shape (d, B); no gradients."""
    t = np.asarray(t, dtype=float).reshape(-1)
    values, derivs = zip(*(nets[s].forward_dt(t) for s in spec.state_names))
    field = spec.rhs(list(values), params)
    return np.stack(derivs) - np.stack([np.broadcast_to(f, t.shape) for f in field])
