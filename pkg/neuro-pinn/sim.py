"""Ground-truth simulation, downsampling and observation noise."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from errors import ContractViolation, IntegrationBlowup, NonFiniteInput
from models import ModelParams, ModelSpec

log = logging.getLogger(__name__)

NOISE_KINDS = ("relative", "absolute")


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar signal; sample i sits at t0 + i*dt (ms)."""

    t0: float
    dt: float
    values: np.ndarray
    name: str = "V"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ContractViolation(f"time series must be 1-D, got shape {values.shape}")
        if not self.dt > 0:
            raise ContractViolation(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(self.t0, self.dt, values, self.name)

    @classmethod
    def from_times(cls, times: np.ndarray, values: np.ndarray, name: str = "V") -> "TimeSeries":
        """Build from explicit sample times, which must form a uniform grid."""
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.shape[0] < 2:
            raise ContractViolation("need at least 2 sample times")
        steps = np.diff(times)
        dt = (times[-1] - times[0]) / (len(times) - 1)
        if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-6 * dt:
            raise ContractViolation("sample times are not on a uniform grid")
        return cls(float(times[0]), float(dt), values, name)


@dataclass(frozen=True)
class Trajectory:
    """N x d state history on a uniform grid."""

    t0: float
    dt: float
    states: np.ndarray
    model_id: str
    state_names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2:
            raise ContractViolation(f"trajectory states must be N x d, got {states.shape}")
        if not self.dt > 0:
            raise ContractViolation(f"dt must be positive, got {self.dt}")
        if states.shape[0] < 2:
            raise ContractViolation("trajectory needs at least 2 rows")
        if not np.all(np.isfinite(states)):
            raise NonFiniteInput("trajectory contains non-finite entries")
        names = tuple(self.state_names) or tuple(f"x{i}" for i in range(states.shape[1]))
        if len(names) != states.shape[1]:
            raise ContractViolation("state_names does not match state dimension")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "state_names", names)

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def series(self, name: str) -> TimeSeries:
        """One state variable as a TimeSeries."""
        try:
            idx = self.state_names.index(name)
        except ValueError:
            raise ContractViolation(f"no state named {name!r} in {self.state_names}") from None
        return TimeSeries(self.t0, self.dt, self.states[:, idx].copy(), name)


@dataclass(frozen=True)
class NoiseSpec:
    """Observation noise: kind, level r and generator seed."""

    kind: str = "relative"
    level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ContractViolation(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not self.level >= 0:
            raise ContractViolation(f"noise level must be >= 0, got {self.level}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ContractViolation("noise seed must be a 64-bit unsigned integer")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "NoiseSpec":
        """Parse ``kind:level`` (e.g. ``relative:0.01``)."""
        try:
            kind, level = text.split(":")
            return cls(kind.strip(), float(level), seed)
        except ValueError:
            raise ContractViolation(f"noise must look like 'relative:0.01', got {text!r}") from None


def heun(
    f: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    dt: float,
    n_steps: int,
    record_every: int = 1,
    record_from: int = 0,
    component: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Explicit trapezoid (Heun) integration.

    x* = x + dt F(x);  x' = x + dt/2 (F(x) + F(x*)).

    ``x0`` may carry extra trailing axes (e.g. one column per parameter
    value) as long as ``f`` broadcasts over them.

    Args:
        f: Vector field on arrays shaped like x0
        x0: Initial state, first axis = state dimension
        dt: Step (ms)
        n_steps: Number of steps
        record_every: Keep every k-th step
        record_from: First step index eligible for recording
        component: Record only this state component

    Returns:
        (final state, recorded states stacked along a new first axis)
    """
    if not dt > 0:
        raise ContractViolation(f"dt must be positive, got {dt}")
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("initial state is not finite")

    rec_steps = range(record_from, n_steps + 1, record_every)
    rec_shape = x.shape if component is None else x.shape[1:]
    recorded = np.empty((len(rec_steps),) + rec_shape)
    slot = 0
    half = 0.5 * dt
    for k in range(n_steps + 1):
        if k >= record_from and (k - record_from) % record_every == 0:
            recorded[slot] = x if component is None else x[component]
            slot += 1
        if k == n_steps:
            break
        fx = np.asarray(f(x))
        xp = x + dt * fx
        x = x + half * (fx + np.asarray(f(xp)))
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowup(k + 1)
    return x, recorded


def integrate(
    spec: ModelSpec,
    params: ModelParams,
    x0: np.ndarray,
    dt: float,
    n_steps: int,
) -> Trajectory:
    """Heun integration of a model; returns n_steps + 1 rows."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (spec.dim,):
        raise ContractViolation(f"{spec.id}: x0 must have shape ({spec.dim},)")

    def field_(x):
        return np.array(spec.rhs(x, params))

    _, states = heun(field_, x0, dt, int(n_steps))
    log.debug("integrated %s: %d steps at dt=%g ms", spec.id, n_steps, dt)
    return Trajectory(0.0, dt, states, spec.id, spec.state_names)


def downsample(traj: Trajectory, stride: int) -> Trajectory:
    """Keep rows 0, stride, 2*stride, ...; dt scales by stride."""
    if int(stride) < 1:
        raise ContractViolation(f"stride must be >= 1, got {stride}")
    stride = int(stride)
    return Trajectory(
        traj.t0, traj.dt * stride, traj.states[::stride], traj.model_id, traj.state_names
    )


def add_noise(series: TimeSeries, ns: NoiseSpec) -> TimeSeries:
    """
    Additive Gaussian observation noise.

    relative: V + r * std(V) * e   (population std of the clean series)
    absolute: V + r * mean(V) * e  (mean over the observation window)

    e is drawn i.i.d. standard normal from numpy's Philox counter-based
    generator seeded with ``ns.seed``; identical seeds give bitwise
    identical output.
    """
    v = series.values
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("cannot add noise to a non-finite series")
    if ns.level == 0:
        return series.with_values(v.copy())

    rng = np.random.Generator(np.random.Philox(int(ns.seed)))
    e = rng.standard_normal(len(v))
    if ns.kind == "relative":
        scale = ns.level * v.std()
    else:
        scale = ns.level * v.mean()
    return series.with_values(v + scale * e)


def simulate(
    spec: ModelSpec,
    params: ModelParams,
    duration: float,
    dt: float,
    stride: int = 1,
    x0: Optional[np.ndarray] = None,
    t_discard: float = 0.0,
) -> Trajectory:
    """
    Integrate from the standard initial condition over ``duration`` ms and downsample.

    The first ``t_discard`` ms are integrated but not recorded; the returned
    trajectory still starts at t = 0.
    """
    if t_discard < 0:
        raise ContractViolation(f"t_discard must be >= 0, got {t_discard}")
    n_steps = int(round(duration / dt))
    x0 = spec.initial_state(params) if x0 is None else x0
    n_discard = int(round(t_discard / dt))
    if n_discard:
        x0 = integrate(spec, params, x0, dt, n_discard).states[-1]
    traj = integrate(spec, params, x0, dt, n_steps)
    return downsample(traj, stride)
