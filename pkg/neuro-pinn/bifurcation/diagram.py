"""One-parameter bifurcation diagrams and their distance."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from bifurcation.continuation import (
    BifEvent,
    BifurcationSystem,
    EquilibriumBranch,
    continue_equilibria,
)
from bifurcation.orbits import OrbitExtremaBranch, orbit_events, sweep_orbits
from config import BIF_SEED, MODEL_DEFAULTS
from errors import ContractViolation
from models import ModelParams, ModelSpec

log = logging.getLogger(__name__)


@dataclass
class BifurcationDiagram:
    model_id: str
    bif_param: str
    bif_range: Tuple[float, float]
    state_names: Tuple[str, ...]
    v_index: int
    branches: List[EquilibriumBranch]
    orbits: OrbitExtremaBranch
    events: List[BifEvent] = field(default_factory=list)

    def equilibrium_cloud(self) -> np.ndarray:
        """All equilibrium points as (bif_param, V) rows."""
        rows = [
            (p.bif_param, float(p.state[self.v_index]))
            for br in self.branches for p in br.points
        ]
        return np.array(rows, dtype=float).reshape(-1, 2)

    def events_of(self, kind: str) -> List[BifEvent]:
        return [e for e in self.events if e.kind == kind]


def sweep_diagram(
    spec: ModelSpec,
    params: ModelParams,
    bif_param_name: str,
    bif_range: Tuple[float, float],
    n_orbit_samples: int,
    t_transient: Optional[float] = None,
    t_measure: Optional[float] = None,
    dt: Optional[float] = None,
    seed: int = BIF_SEED,
) -> BifurcationDiagram:
    """
    Equilibrium branches plus stable-orbit envelopes on a uniform grid.

    Args:
        spec: Model specification
        params: Parameter set to analyse
        bif_param_name: Parameter or frozen state swept
        bif_range: (low, high)
        n_orbit_samples: Grid points for the orbit sweep
        t_transient: Discarded simulation time (ms); model default when None
        t_measure: Measured simulation time (ms); model default when None
        dt: Integration step; model default when None
        seed: Multi-start seed for equilibrium seeding

    Returns:
        BifurcationDiagram
    """
    if int(n_orbit_samples) < 2:
        raise ContractViolation("need at least 2 orbit samples")
    defaults = MODEL_DEFAULTS.get(spec.id, {})
    t_transient = defaults.get("t_transient", 2000.0) if t_transient is None else t_transient
    t_measure = defaults.get("t_measure", 2000.0) if t_measure is None else t_measure
    lo, hi = (float(v) for v in bif_range)

    branches = continue_equilibria(spec, params, bif_param_name, (lo, hi), seed=seed)
    grid = np.linspace(lo, hi, int(n_orbit_samples))
    orbits = OrbitExtremaBranch(
        sweep_orbits(spec, params, bif_param_name, grid, t_transient, t_measure, dt)
    )
    events = [e for br in branches for e in br.events] + orbit_events(orbits)
    events.sort(key=lambda e: (e.bif_param, e.kind))
    system = BifurcationSystem(spec, params, bif_param_name)
    return BifurcationDiagram(
        spec.id, bif_param_name, (lo, hi), system.names, system.v_index,
        branches, orbits, events,
    )


@dataclass
class DiagramDistance:
    orbit_term: float
    hausdorff_term: float
    event_shifts: Dict[str, List[dict]]

    @property
    def total(self) -> float:
        return self.orbit_term + self.hausdorff_term

    def max_event_shift(self, kind: str) -> Optional[float]:
        shifts = [s["rel_shift"] for s in self.event_shifts.get(kind, []) if s["rel_shift"] is not None]
        return max(shifts) if shifts else None

    def as_record(self) -> dict:
        return {
            "distance": self.total,
            "orbit_term": self.orbit_term,
            "hausdorff_term": self.hausdorff_term,
            "event_shifts": self.event_shifts,
        }


def _orbit_term(a: OrbitExtremaBranch, b: OrbitExtremaBranch) -> float:
    pa = np.array([s.bif_param for s in a.samples])
    pb = np.array([s.bif_param for s in b.samples])
    diffs = []
    for i, mu in enumerate(pa):
        j = np.nonzero(np.isclose(pb, mu, rtol=0.0, atol=1e-9 * max(1.0, abs(mu))))[0]
        if j.size:
            sa, sb = a.samples[i], b.samples[j[0]]
            diffs.append(abs(sa.v_min - sb.v_min) + abs(sa.v_max - sb.v_max))
    if not diffs:
        if not a.samples and not b.samples:
            return 0.0
        raise ContractViolation("diagrams share no orbit grid points")
    return float(np.mean(diffs))


def _hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape[0] == 0 and b.shape[0] == 0:
        return 0.0
    if a.shape[0] == 0 or b.shape[0] == 0:
        return float("inf")
    return float(max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0]))


def _event_shifts(a: BifurcationDiagram, b: BifurcationDiagram) -> Dict[str, List[dict]]:
    """For each event of ``a``, the nearest event of the same kind in ``b``."""
    out: Dict[str, List[dict]] = {}
    for ev in a.events:
        others = b.events_of(ev.kind)
        entry = {"a": ev.bif_param, "b": None, "rel_shift": None}
        if others:
            near = min(others, key=lambda e: abs(e.bif_param - ev.bif_param))
            shift = abs(near.bif_param - ev.bif_param)
            entry["b"] = near.bif_param
            entry["rel_shift"] = shift / abs(ev.bif_param) if ev.bif_param != 0 else shift
        out.setdefault(ev.kind, []).append(entry)
    return out


def diagram_distance(a: BifurcationDiagram, b: BifurcationDiagram) -> DiagramDistance:
    """
    Orbit-envelope term + symmetric Hausdorff term, reported separately.

    orbit term: mean over the shared grid of |dv_min| + |dv_max|.
    Hausdorff term: between equilibrium clouds in (bif_param, V).
    """
    if a.bif_param != b.bif_param:
        raise ContractViolation(f"diagrams sweep different parameters ({a.bif_param} vs {b.bif_param})")
    return DiagramDistance(
        _orbit_term(a.orbits, b.orbits),
        _hausdorff(a.equilibrium_cloud(), b.equilibrium_cloud()),
        _event_shifts(a, b),
    )
