"""Stable-attractor voltage envelopes by direct simulation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from bifurcation.continuation import BifEvent, BifurcationSystem
from config import (
    MODEL_DEFAULTS,
    OSCILLATION_MIN_AMPLITUDE,
    ORBIT_SAMPLE_DT,
    PERIOD_BLOWUP_FACTOR,
)
from errors import ContractViolation
from models import ModelParams, ModelSpec
from sim import heun

log = logging.getLogger(__name__)

MIN_CROSSINGS = 3


@dataclass(frozen=True)
class OrbitSample:
    bif_param: float
    v_min: float
    v_max: float
    period: Optional[float] = None

    @property
    def oscillating(self) -> bool:
        return self.period is not None


@dataclass
class OrbitExtremaBranch:
    samples: List[OrbitSample] = field(default_factory=list)

    def __post_init__(self):
        self.samples = sorted(self.samples, key=lambda s: s.bif_param)


def estimate_period(v: np.ndarray, sample_dt: float) -> Optional[float]:
    """
    Mean spacing of upward crossings of the mid-range level.

    None when the amplitude is below OSCILLATION_MIN_AMPLITUDE or fewer
    than three crossings occur.
    """
    v_min, v_max = float(v.min()), float(v.max())
    if v_max - v_min < OSCILLATION_MIN_AMPLITUDE:
        return None
    mid = 0.5 * (v_min + v_max)
    idx = np.nonzero((v[:-1] < mid) & (v[1:] >= mid))[0]
    if idx.size < MIN_CROSSINGS:
        return None
    frac = (mid - v[idx]) / (v[idx + 1] - v[idx])
    times = (idx + frac) * sample_dt
    return float(np.mean(np.diff(times)))


def sweep_orbits(
    spec: ModelSpec,
    params: ModelParams,
    bif_param_name: str,
    values: Sequence[float],
    t_transient: float,
    t_measure: float,
    dt: Optional[float] = None,
) -> List[OrbitSample]:
    """
    Simulate every parameter value at once and measure the V envelope.

    All grid values integrate together as columns of one state array from
    the standard initial condition; V is recorded every ORBIT_SAMPLE_DT
    after the transient.
    """
    if not t_transient >= 0 or not t_measure > 0:
        raise ContractViolation("t_transient must be >= 0 and t_measure > 0")
    dt = dt or MODEL_DEFAULTS.get(spec.id, {}).get("sim_dt", 0.1)
    values = np.asarray(values, dtype=float)
    system = BifurcationSystem(spec, params, bif_param_name)

    x0 = system.reduce(spec.initial_state(params))
    x0 = np.repeat(x0[:, None], values.size, axis=1)
    every = max(1, int(round(ORBIT_SAMPLE_DT / dt)))
    start = int(round(t_transient / dt))
    n_steps = start + int(round(t_measure / dt))

    _, rec = heun(
        lambda x: system.field(x, values), x0, dt, n_steps,
        record_every=every, record_from=start, component=system.v_index,
    )
    sample_dt = every * dt
    out = []
    for g, mu in enumerate(values):
        v = rec[:, g]
        out.append(OrbitSample(float(mu), float(v.min()), float(v.max()), estimate_period(v, sample_dt)))
    log.debug("orbit sweep: %d of %d values oscillate", sum(s.oscillating for s in out), len(out))
    return out


def orbit_extrema(
    spec: ModelSpec,
    params: ModelParams,
    bif_param_name: str,
    value: float,
    t_transient: float,
    t_measure: float,
    dt: Optional[float] = None,
) -> OrbitSample:
    """Envelope of the attractor reached at one parameter value."""
    return sweep_orbits(spec, params, bif_param_name, [value], t_transient, t_measure, dt)[0]


def orbit_events(branch: OrbitExtremaBranch) -> List[BifEvent]:
    """
    Oscillation onset/offset between grid neighbours, and period blow-ups.

    A period above PERIOD_BLOWUP_FACTOR times the branch median marks the
    divergent-period signature of SNIC and homoclinic transitions.
    """
    events = []
    samples = branch.samples
    for a, b in zip(samples, samples[1:]):
        mid = 0.5 * (a.bif_param + b.bif_param)
        if not a.oscillating and b.oscillating:
            events.append(BifEvent("onset", mid, None))
        elif a.oscillating and not b.oscillating:
            events.append(BifEvent("offset", mid, None))
    periods = np.array([s.period for s in samples if s.oscillating])
    if periods.size:
        median = float(np.median(periods))
        for s in samples:
            if s.oscillating and s.period > PERIOD_BLOWUP_FACTOR * median:
                events.append(BifEvent("period-blowup", s.bif_param, None))
    return events
