"""Two-stage estimation: voltage pre-training, then physics-constrained training."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from tqdm import trange

from config import (
    BALANCE_ALPHA,
    BALANCE_EPS,
    BALANCE_UPDATE_EVERY,
    CHECKPOINT_EVERY,
    LOG_EVERY,
    RWF_MU,
    RWF_SIGMA,
    STAGE1_DECAY_EVERY,
    STAGE1_DECAY_FACTOR,
    STAGE1_ITERS,
    STAGE1_LR0,
    STAGE2_DECAY_FACTOR,
)
from errors import ContractViolation, NonFiniteResidual, TrainingDiverged
from models import ModelParams, ModelSpec
from net import FourierEmbedding, FourierNet, init_network
from sim import TimeSeries, Trajectory
from spectral import FrequencySelection
from train.balance import BalanceState, update_balance
from train.metrics import normalized_l2, param_rel_errors
from train.optim import AdamState, LrSchedule, adam_step
from train.params import ConstrainedParams
from train.residual import residual_losses

log = logging.getLogger(__name__)


# settings

@dataclass(frozen=True)
class Stage1Settings:
    lr0: float = STAGE1_LR0
    decay_factor: float = STAGE1_DECAY_FACTOR
    decay_every: int = STAGE1_DECAY_EVERY
    iters: int = STAGE1_ITERS
    batch: int = 500

    @property
    def schedule(self) -> LrSchedule:
        return LrSchedule(self.lr0, self.decay_factor, self.decay_every)

    @classmethod
    def from_doc(cls, doc: Mapping) -> "Stage1Settings":
        return cls(
            float(doc["lr0"]), float(doc["decay_factor"]), int(doc["decay_every"]),
            int(doc["iters"]), int(doc["batch"]),
        )


@dataclass(frozen=True)
class Stage2Settings:
    lr0_theta: float = 1e-4
    decay_every: int = 100_000
    decay_factor: float = STAGE2_DECAY_FACTOR
    lr_lambda: float = 1e-4
    iters: int = 800_000
    batch: int = 500
    alpha: float = BALANCE_ALPHA
    eps: float = BALANCE_EPS
    update_every: int = BALANCE_UPDATE_EVERY
    train_v: bool = False
    omega_u: float = 1.0
    checkpoint_every: int = CHECKPOINT_EVERY

    @property
    def theta_schedule(self) -> LrSchedule:
        return LrSchedule(self.lr0_theta, self.decay_factor, self.decay_every)

    @property
    def lambda_schedule(self) -> LrSchedule:
        return LrSchedule.constant(self.lr_lambda)

    @classmethod
    def from_doc(cls, doc: Mapping) -> "Stage2Settings":
        bal = doc.get("balance", {})
        return cls(
            lr0_theta=float(doc["lr0_theta"]),
            decay_every=int(doc["decay_every"]),
            decay_factor=float(doc["decay_factor"]),
            lr_lambda=float(doc["lr_lambda"]),
            iters=int(doc["iters"]),
            batch=int(doc["batch"]),
            alpha=float(bal.get("alpha", BALANCE_ALPHA)),
            eps=float(bal.get("eps", BALANCE_EPS)),
            update_every=int(bal.get("update_every", BALANCE_UPDATE_EVERY)),
            train_v=bool(doc.get("train_v", False)),
            omega_u=float(doc.get("omega_u", 1.0)),
            checkpoint_every=int(doc.get("checkpoint_every", CHECKPOINT_EVERY)),
        )


@dataclass
class TrainHooks:
    """Progress display, interruption and checkpoint callbacks for the loops."""

    quiet: bool = True
    log_every: int = LOG_EVERY
    stop: Callable[[], bool] = lambda: False
    on_checkpoint: Optional[Callable[[str, int, Dict[str, FourierNet], ConstrainedParams], None]] = None


@dataclass
class LossHistory:
    """Rows of (stage, iteration, total, per-equation losses, weights)."""

    rows: List[Tuple[str, int, float, Optional[np.ndarray], Optional[np.ndarray]]] = field(default_factory=list)

    def append(self, stage: str, k: int, total: float, losses=None, weights=None) -> None:
        self.rows.append((
            stage, int(k), float(total),
            None if losses is None else np.array(losses, dtype=float),
            None if weights is None else np.array(weights, dtype=float),
        ))

    def header(self, state_names: Sequence[str]) -> List[str]:
        return (
            ["stage", "iter", "loss_total"]
            + [f"loss_{s}" for s in state_names]
            + [f"weight_{s}" for s in state_names]
        )

    def table(self, state_names: Sequence[str]) -> List[list]:
        d = len(state_names)
        out = []
        for stage, k, total, losses, weights in self.rows:
            row = [stage, k, total]
            row += list(losses) if losses is not None else [None] * d
            row += list(weights) if weights is not None else [None] * d
            out.append(row)
        return out


@dataclass
class StageOutcome:
    iterations: int
    interrupted: bool
    final_loss: float


@dataclass
class EstimationResult:
    lambda_hat: ModelParams
    per_param_rel_error: Dict[str, float]
    state_errors: Dict[str, float]
    loss_history: LossHistory
    checkpoints: List[str]
    iters: Dict[str, int]
    interrupted: bool
    param_counts: Dict[str, Dict[str, int]]
    estimated_names: Tuple[str, ...]

    def to_record(self) -> dict:
        """Deterministic JSON body (no timings)."""
        return {
            "model": self.lambda_hat.spec_id,
            "lambda_hat": {n: self.lambda_hat[n] for n in self.estimated_names},
            "rel_errors": self.per_param_rel_error,
            "state_errors": self.state_errors,
            "iters": self.iters,
            "interrupted": self.interrupted,
            "param_counts": self.param_counts,
        }


@dataclass
class EstimationProblem:
    """Everything stage 2 needs; nets and cp are updated in place."""

    spec: ModelSpec
    observations: TimeSeries
    nets: Dict[str, FourierNet]
    cp: ConstrainedParams
    base: ModelParams
    settings: Stage2Settings
    batch_seed: int
    truth: Optional[ModelParams] = None
    reference: Optional[Trajectory] = None
    threads: int = 1
    hooks: TrainHooks = field(default_factory=TrainHooks)
    history: LossHistory = field(default_factory=LossHistory)


# network construction

def build_nets(
    spec: ModelSpec,
    selection: FrequencySelection,
    observations: TimeSeries,
    widths: Sequence[int],
    seed: int,
    rwf_mu: float = RWF_MU,
    rwf_sigma: float = RWF_SIGMA,
) -> Dict[str, FourierNet]:
    """
    One network per state variable, all drawn from one Philox stream.

    The observed-variable network uses only the selected frequencies and an
    output rescaled by the observation mean/std; hidden-state networks add
    as many trainable frequencies as were selected.
    """
    rng = np.random.Generator(np.random.Philox(int(seed)))
    fixed = np.asarray(selection.angular_freqs)
    obs = observations.values
    nets = {}
    for i, name in enumerate(spec.state_names):
        if i == spec.observed_index:
            emb = FourierEmbedding.build(fixed)
            shift, scale = float(obs.mean()), float(obs.std()) or 1.0
        else:
            emb = FourierEmbedding.build(fixed, n_trainable=fixed.size, rng=rng)
            shift, scale = 0.0, 1.0
        nets[name] = init_network(
            widths, emb, seed, rwf_mu, rwf_sigma,
            output_map=spec.output_maps[name], out_shift=shift, out_scale=scale,
            name=name, rng=rng,
        )
    return nets


def _batch_generator(seed: int, stage: int) -> np.random.Generator:
    bitgen = np.random.Philox(int(seed))
    for _ in range(stage - 1):
        bitgen = bitgen.jumped()
    return np.random.Generator(bitgen)


# stage 1

def pretrain_voltage(
    v_net: FourierNet,
    observations: TimeSeries,
    schedule: LrSchedule,
    batch_size: int,
    iterations: int,
    seed: int,
    hooks: Optional[TrainHooks] = None,
    history: Optional[LossHistory] = None,
) -> StageOutcome:
    """
    Fit the observed-variable network to data by mini-batch Adam.

    Mini-batches are drawn uniformly with replacement from the observation
    grid; the network is updated in place.
    """
    hooks = hooks or TrainHooks()
    n = len(observations)
    if not 1 <= batch_size <= n:
        raise ContractViolation(f"batch size must lie in [1, {n}], got {batch_size}")
    times, values = observations.times, observations.values
    rng = _batch_generator(seed, 1)
    theta = v_net.get_flat()
    adam = AdamState.zeros(theta.size)
    loss = float("nan")
    done = 0

    bar = trange(iterations, desc="stage 1", disable=hooks.quiet, leave=False)
    for k in bar:
        idx = rng.integers(0, n, size=batch_size)
        t = times[idx]
        tape = v_net.trace(t)
        r = tape.value - values[idx]
        loss = float(np.mean(r * r))
        if not np.isfinite(loss):
            raise TrainingDiverged("stage1", k)
        grad = v_net.backward(t, 2.0 * r / batch_size, 0.0, tape)
        adam, theta = adam_step(adam, theta, grad, schedule(k))
        v_net.set_flat(theta)
        done = k + 1

        if k % hooks.log_every == 0:
            if history is not None:
                history.append("stage1", k, loss)
            bar.set_postfix(loss=f"{loss:.3e}")
        if hooks.stop():
            log.warning("stage 1 interrupted at iteration %d", k)
            return StageOutcome(done, True, loss)

    log.info("stage 1 done: %d iterations, data loss %.3e", done, loss)
    return StageOutcome(done, False, loss)


# stage 2

def _save(problem: EstimationProblem, stage: str, k: int, saved: List[str]) -> None:
    if problem.hooks.on_checkpoint is not None:
        path = problem.hooks.on_checkpoint(stage, k, problem.nets, problem.cp)
        if path is not None:
            saved.append(str(path))


def run_physics_stage(problem: EstimationProblem) -> Tuple[StageOutcome, List[str]]:
    """
    Joint training of the hidden-state networks and the parameters.

    Each iteration samples collocation times from the observation grid,
    evaluates the residual losses, refreshes the balancing weights on
    their cadence, and takes separate Adam steps for the network weights
    and for z. The observed-variable network stays frozen unless
    ``settings.train_v``.
    """
    spec, st, hooks = problem.spec, problem.settings, problem.hooks
    obs = problem.observations
    n = len(obs)
    if not 1 <= st.batch <= n:
        raise ContractViolation(f"batch size must lie in [1, {n}], got {st.batch}")
    times, values = obs.times, obs.values
    v_name = spec.state_names[spec.observed_index]
    trainable = [
        s for i, s in enumerate(spec.state_names)
        if i != spec.observed_index or st.train_v
    ]

    theta = np.concatenate([problem.nets[s].get_flat() for s in trainable])
    adam_theta = AdamState.zeros(theta.size)
    adam_z = AdamState.zeros(problem.cp.z.size)
    bs = BalanceState.uniform(spec.dim, alpha=st.alpha, eps=st.eps, update_every=st.update_every)
    rng = _batch_generator(problem.batch_seed, 2)
    saved: List[str] = []
    total = float("nan")
    done = 0

    bar = trange(st.iters, desc="stage 2", disable=hooks.quiet, leave=False)
    for k in bar:
        idx = rng.integers(0, n, size=st.batch)
        t = times[idx]
        refresh = bs.due(k)
        try:
            ev = residual_losses(
                problem.nets, spec, problem.cp, t, problem.base,
                weights=bs.weights, trainable=trainable,
                per_equation=refresh, threads=problem.threads,
            )
        except NonFiniteResidual as e:
            raise TrainingDiverged("stage2", k, e.equation, e.t) from None

        if refresh:
            bs = update_balance(bs, ev.eq_grad_norms())
            grad = ev.weighted(bs.weights)
            if not np.all(np.isfinite(problem.cp.lam)):
                raise TrainingDiverged("stage2", k)
        else:
            grad = ev.grad
        total = float(np.dot(bs.weights, ev.losses))

        if st.train_v:
            v_net = problem.nets[v_name]
            tape = v_net.trace(t)
            r = tape.value - values[idx]
            total += st.omega_u * float(np.mean(r * r))
            g_v = v_net.backward(t, st.omega_u * 2.0 * r / st.batch, 0.0, tape)
            offset = sum(ev.layout.net_sizes[:ev.layout.net_names.index(v_name)])
            grad = grad.copy()
            grad[offset:offset + g_v.size] += g_v

        if not np.isfinite(total) or not np.all(np.isfinite(grad)):
            raise TrainingDiverged("stage2", k)

        n_theta = theta.size
        adam_theta, theta = adam_step(adam_theta, theta, grad[:n_theta], st.theta_schedule(k))
        adam_z, z = adam_step(adam_z, problem.cp.z, grad[n_theta:], st.lambda_schedule(k))
        problem.cp.z = z
        pos = 0
        for s in trainable:
            size = problem.nets[s].n_params
            problem.nets[s].set_flat(theta[pos:pos + size])
            pos += size
        done = k + 1

        if k % hooks.log_every == 0:
            problem.history.append("stage2", k, total, ev.losses, bs.weights)
            bar.set_postfix(loss=f"{total:.3e}")
            log.debug("stage 2 iteration %d: loss %.4e weights %s", k, total, np.round(bs.weights, 3))
        if done % st.checkpoint_every == 0:
            _save(problem, "stage2", done, saved)
        if hooks.stop():
            log.warning("stage 2 interrupted at iteration %d", k)
            _save(problem, "stage2", done, saved)
            return StageOutcome(done, True, total), saved

    log.info("stage 2 done: %d iterations, residual loss %.3e", done, total)
    return StageOutcome(done, False, total), saved


# assessment

def reconstruct(nets: Mapping[str, FourierNet], spec: ModelSpec, times: np.ndarray) -> np.ndarray:
    """Network predictions of every state on ``times``, shape (N, d)."""
    return np.column_stack([nets[s].forward(times) for s in spec.state_names])


def assess(
    spec: ModelSpec,
    nets: Mapping[str, FourierNet],
    cp: ConstrainedParams,
    base: ModelParams,
    truth: Optional[ModelParams] = None,
    reference: Optional[Trajectory] = None,
) -> Tuple[ModelParams, Dict[str, float], Dict[str, float]]:
    """
    Current estimate and its errors.

    Returns:
        (lambda_hat, relative error per parameter, normalized L2 error per state)
    """
    lam = cp.lam
    if not np.all(np.isfinite(lam)):
        raise TrainingDiverged("assessment", -1)
    lambda_hat = cp.to_params(spec, base)
    rel = param_rel_errors(truth, lambda_hat, cp.names) if truth is not None else {}
    states = {}
    if reference is not None:
        pred = reconstruct(nets, spec, reference.times)
        for j, name in enumerate(spec.state_names):
            states[name] = normalized_l2(reference.states[:, j], pred[:, j])
    return lambda_hat, rel, states


def run_estimation(
    problem: EstimationProblem,
    stage1: Stage1Settings,
) -> EstimationResult:
    """Stage 1 on the observed-variable network, then stage 2, then assessment."""
    spec = problem.spec
    v_net = problem.nets[spec.state_names[spec.observed_index]]
    first = pretrain_voltage(
        v_net, problem.observations, stage1.schedule, stage1.batch, stage1.iters,
        problem.batch_seed, problem.hooks, problem.history,
    )
    second, saved = StageOutcome(0, False, float("nan")), []
    if not first.interrupted:
        second, saved = run_physics_stage(problem)

    lambda_hat, rel, states = assess(
        spec, problem.nets, problem.cp, problem.base, problem.truth, problem.reference
    )
    return EstimationResult(
        lambda_hat=lambda_hat,
        per_param_rel_error=rel,
        state_errors=states,
        loss_history=problem.history,
        checkpoints=saved,
        iters={"stage1": first.iterations, "stage2": second.iterations},
        interrupted=first.interrupted or second.interrupted,
        param_counts={name: net.param_counts() for name, net in problem.nets.items()},
        estimated_names=problem.cp.names,
    )
