"""Equilibrium branches by pseudo-arclength continuation.

Branches are followed in scaled coordinates u = (x / state_scales,
mu / range_width). Every accepted point is Newton-converged to
max|F| < NEWTON_TOL. Curves are split into separate branches at folds;
fold and Hopf points are located by bisection along the branch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from config import (
    ARCLENGTH_DS0,
    ARCLENGTH_DS_MAX,
    ARCLENGTH_DS_MIN,
    BIF_SEED,
    EVENT_TOL,
    JACOBIAN_REL_STEP,
    NEWTON_MAX_ITER,
    NEWTON_TOL,
    SEED_GRID_POINTS,
    SEED_RANDOM_STARTS,
)
from errors import ConfigError, ContractViolation
from models import ModelParams, ModelSpec

log = logging.getLogger(__name__)

V_GRID_POINTS = 16
DEDUP_TOL = 1e-6        # scaled distance below which two equilibria coincide
COVER_TOL = 5e-3        # scaled distance from a traced curve that marks a seed as covered
MAX_CORRECTION = 0.5    # scaled Newton step beyond which a corrector is abandoned
COMPLEX_TOL = 1e-8
BISECT_MAX = 60


@dataclass(frozen=True)
class BifEvent:
    kind: str                   # fold | hopf | onset | offset | period-blowup
    bif_param: float
    v: Optional[float] = None


@dataclass(frozen=True)
class EquilibriumPoint:
    bif_param: float
    state: np.ndarray
    eigen_real_parts: np.ndarray

    @property
    def max_re_eig(self) -> float:
        return float(np.max(self.eigen_real_parts))

    @property
    def stability(self) -> str:
        return "stable" if self.max_re_eig < 0 else "unstable"


@dataclass
class EquilibriumBranch:
    points: List[EquilibriumPoint]
    events: List[BifEvent] = field(default_factory=list)


class BifurcationSystem:
    """
    A model's vector field as a function of (state, mu).

    ``bif_param`` names a model parameter or a state variable; a state
    variable is removed from the system and frozen at mu (fast subsystem).
    Fields accept trailing batch axes, so one call can cover a grid of mu.
    """

    def __init__(self, spec: ModelSpec, params: ModelParams, bif_param: str):
        self.spec = spec
        self.params = params
        self.name = bif_param
        if bif_param in spec.state_names:
            self.frozen = spec.state_names.index(bif_param)
            if self.frozen == spec.observed_index:
                raise ConfigError(f"cannot freeze the observed variable {bif_param!r}")
        elif bif_param in params:
            self.frozen = None
        else:
            raise ConfigError(f"{spec.id}: {bif_param!r} is neither a parameter nor a state")
        self.free = [i for i in range(spec.dim) if i != self.frozen]
        self.names = tuple(spec.state_names[i] for i in self.free)
        self.v_index = self.free.index(spec.observed_index)
        self.scales = np.array([spec.state_scales[i] for i in self.free], dtype=float)
        self.bounds = [spec.state_bounds[i] for i in self.free]
        self._base = params.as_dict()

    @property
    def dim(self) -> int:
        return len(self.free)

    def reduce(self, full_state: np.ndarray) -> np.ndarray:
        return np.asarray(full_state, dtype=float)[self.free]

    def field(self, x, mu) -> np.ndarray:
        """dx/dt of the free states at parameter value(s) mu."""
        comps = list(x)
        if self.frozen is None:
            p = dict(self._base)
            p[self.name] = mu
        else:
            p = self._base
            comps.insert(self.frozen, mu)
        f = self.spec.rhs(comps, p)
        shape = np.broadcast(*[np.asarray(c) for c in comps]).shape
        return np.stack([np.broadcast_to(f[i], shape) for i in self.free]).astype(float)

    def jacobian(self, x: np.ndarray, mu: float) -> np.ndarray:
        d = self.dim
        jac = np.empty((d, d))
        for j in range(d):
            h = JACOBIAN_REL_STEP * max(1.0, abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            jac[:, j] = (self.field(xp, mu) - self.field(xm, mu)) / (2.0 * h)
        return jac

    def dmu(self, x: np.ndarray, mu: float) -> np.ndarray:
        h = JACOBIAN_REL_STEP * max(1.0, abs(mu))
        return (self.field(x, mu + h) - self.field(x, mu - h)) / (2.0 * h)

    def eigenvalues(self, x: np.ndarray, mu: float) -> np.ndarray:
        return linalg.eigvals(self.jacobian(x, mu))

    def starts(self, mu: float, rng: np.random.Generator) -> List[np.ndarray]:
        """Newton starting points: quasi-steady states on a V grid plus random draws."""
        p = dict(self._base)
        if self.frozen is None:
            p[self.name] = mu
        lo, hi = self.spec.state_bounds[self.spec.observed_index]
        out = []
        for v in np.linspace(lo, hi, V_GRID_POINTS):
            full = np.asarray(self.spec.quasi_steady_state(v, p), dtype=float)
            if full.shape == (self.spec.dim,):
                out.append(self.reduce(full))
            else:
                x = np.array([0.5 * (a + b) for a, b in self.bounds])
                x[self.v_index] = v
                out.append(x)
        lows = np.array([b[0] for b in self.bounds])
        highs = np.array([b[1] for b in self.bounds])
        for _ in range(SEED_RANDOM_STARTS):
            out.append(rng.uniform(lows, highs))
        return out


def newton(system: BifurcationSystem, x0: np.ndarray, mu: float) -> Optional[np.ndarray]:
    """Equilibrium at fixed mu, or None when Newton stagnates."""
    x = np.array(x0, dtype=float)
    for _ in range(NEWTON_MAX_ITER + 1):
        f = system.field(x, mu)
        if not np.all(np.isfinite(f)):
            return None
        if np.max(np.abs(f)) < NEWTON_TOL:
            return x
        try:
            x = x + np.linalg.solve(system.jacobian(x, mu), -f)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(x)):
            return None
    return None


class _Tracer:
    """Pseudo-arclength predictor/corrector on one system in scaled coordinates."""

    def __init__(self, system: BifurcationSystem, lo: float, hi: float):
        self.system = system
        self.lo, self.hi = lo, hi
        self.sx = system.scales
        self.sm = hi - lo

    def unscale(self, u: np.ndarray) -> Tuple[np.ndarray, float]:
        return u[:-1] * self.sx, float(u[-1] * self.sm)

    def scale(self, x: np.ndarray, mu: float) -> np.ndarray:
        return np.append(x / self.sx, mu / self.sm)

    def _extended_jacobian(self, x: np.ndarray, mu: float) -> np.ndarray:
        jx = self.system.jacobian(x, mu) * self.sx[None, :]
        jm = self.system.dmu(x, mu) * self.sm
        return np.column_stack([jx, jm])

    def tangent(self, u: np.ndarray, prev: Optional[np.ndarray]) -> np.ndarray:
        x, mu = self.unscale(u)
        _, _, vt = linalg.svd(self._extended_jacobian(x, mu))
        tau = vt[-1]
        if prev is not None and np.dot(tau, prev) < 0:
            tau = -tau
        return tau

    def correct(self, anchor: np.ndarray, tau: np.ndarray, s: float) -> Optional[np.ndarray]:
        """Point on the branch with tau . (u - anchor) = s."""
        u = anchor + s * tau
        for it in range(NEWTON_MAX_ITER + 1):
            x, mu = self.unscale(u)
            f = self.system.field(x, mu)
            if not np.all(np.isfinite(f)):
                return None
            if it > 0 and np.max(np.abs(f)) < NEWTON_TOL:
                return u
            c = np.dot(tau, u - anchor) - s
            m = np.vstack([self._extended_jacobian(x, mu), tau])
            try:
                delta = np.linalg.solve(m, -np.append(f, c))
            except np.linalg.LinAlgError:
                return None
            if np.linalg.norm(delta) > MAX_CORRECTION:
                return None
            u = u + delta
        return None

    def trace(self, u0: np.ndarray, tau0: np.ndarray, max_points: int) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        pts, taus = [u0], [tau0]
        ds = ARCLENGTH_DS0
        while len(pts) < max_points:
            u, tau = pts[-1], taus[-1]
            nxt = self.correct(u, tau, ds)
            if nxt is None:
                ds *= 0.5
                if ds < ARCLENGTH_DS_MIN:
                    log.debug("step size underflow at mu=%g", self.unscale(u)[1])
                    break
                continue
            _, mu = self.unscale(nxt)
            if not self.lo <= mu <= self.hi:
                edge = self.land_on_edge(u, nxt)
                if edge is not None and np.linalg.norm(edge - u) > DEDUP_TOL:
                    pts.append(edge)
                    taus.append(self.tangent(edge, tau))
                break
            pts.append(nxt)
            taus.append(self.tangent(nxt, tau))
            if len(pts) > 10 and np.linalg.norm(nxt - u0) < ds:
                break       # closed curve
            ds = min(ds * 1.5, ARCLENGTH_DS_MAX)
        return pts, taus

    def land_on_edge(self, u: np.ndarray, beyond: np.ndarray) -> Optional[np.ndarray]:
        """Equilibrium at the range end crossed between u and beyond."""
        x_a, mu_a = self.unscale(u)
        x_b, mu_b = self.unscale(beyond)
        edge = self.hi if mu_b > self.hi else self.lo
        w = (edge - mu_a) / (mu_b - mu_a) if mu_b != mu_a else 0.0
        x = newton(self.system, x_a + w * (x_b - x_a), edge)
        return None if x is None else self.scale(x, edge)

    def bisect(
        self,
        ua: np.ndarray,
        tau_a: np.ndarray,
        ub: np.ndarray,
        indicator: Callable[[np.ndarray, np.ndarray], Optional[float]],
    ) -> Optional[Tuple[float, np.ndarray]]:
        """Locate a sign change of ``indicator`` between two consecutive points."""
        lo_s, hi_s = 0.0, float(np.dot(tau_a, ub - ua))
        lo_u, hi_u = ua, ub
        g_lo = indicator(ua, tau_a)
        if g_lo is None:
            return None
        for _ in range(BISECT_MAX):
            mu_lo, mu_hi = self.unscale(lo_u)[1], self.unscale(hi_u)[1]
            if abs(mu_hi - mu_lo) < EVENT_TOL:
                break
            mid_s = 0.5 * (lo_s + hi_s)
            mid_u = self.correct(ua, tau_a, mid_s)
            if mid_u is None:
                break
            g_mid = indicator(mid_u, self.tangent(mid_u, tau_a))
            if g_mid is None:
                break
            if np.sign(g_mid) == np.sign(g_lo):
                lo_s, lo_u, g_lo = mid_s, mid_u, g_mid
            else:
                hi_s, hi_u = mid_s, mid_u
        mid = 0.5 * (lo_u + hi_u)
        return 0.5 * (self.unscale(lo_u)[1] + self.unscale(hi_u)[1]), mid


def _near_curve(u: np.ndarray, pts: Sequence[np.ndarray]) -> bool:
    if len(pts) == 1:
        return np.linalg.norm(u - pts[0]) < COVER_TOL
    a = np.asarray(pts[:-1])
    b = np.asarray(pts[1:])
    ab = b - a
    denom = np.maximum(np.sum(ab * ab, axis=1), 1e-300)
    w = np.clip(np.sum((u - a) * ab, axis=1) / denom, 0.0, 1.0)
    closest = a + w[:, None] * ab
    return bool(np.min(np.linalg.norm(closest - u, axis=1)) < COVER_TOL)


def _hopf_indicator(eigs: np.ndarray) -> Optional[float]:
    """Largest real part among complex eigenvalues, None when all are real."""
    cplx = eigs[np.abs(eigs.imag) > COMPLEX_TOL]
    if cplx.size == 0:
        return None
    return float(np.max(cplx.real))


def _seed_equilibria(system: BifurcationSystem, tracer: _Tracer, seed: int) -> List[np.ndarray]:
    rng = np.random.Generator(np.random.Philox(int(seed)))
    seeds = []
    for mu in np.linspace(tracer.lo, tracer.hi, SEED_GRID_POINTS):
        found: List[np.ndarray] = []
        for x0 in system.starts(mu, rng):
            x = newton(system, x0, mu)
            if x is None:
                continue
            u = tracer.scale(x, mu)
            if all(np.linalg.norm(u - v) > DEDUP_TOL for v in found):
                found.append(u)
        seeds.extend(found)
    log.debug("%d equilibrium seeds over [%g, %g]", len(seeds), tracer.lo, tracer.hi)
    return seeds


def _split_branches(tracer: _Tracer, pts: List[np.ndarray], taus: List[np.ndarray]) -> List[EquilibriumBranch]:
    system = tracer.system
    points, hopf_ind = [], []
    for u in pts:
        x, mu = tracer.unscale(u)
        eigs = system.eigenvalues(x, mu)
        points.append(EquilibriumPoint(mu, x, np.sort(eigs.real)[::-1]))
        hopf_ind.append(_hopf_indicator(eigs))

    def fold_indicator(u, tau):
        return float(tau[-1])

    def hopf_indicator(u, tau):
        x, mu = tracer.unscale(u)
        return _hopf_indicator(system.eigenvalues(x, mu))

    def v_at(u):
        return float(tracer.unscale(u)[0][system.v_index])

    branches = [EquilibriumBranch([points[0]])]
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        ha, hb = hopf_ind[i], hopf_ind[i + 1]
        if ha is not None and hb is not None and np.sign(ha) != np.sign(hb):
            hit = tracer.bisect(a, taus[i], b, hopf_indicator)
            if hit is not None:
                branches[-1].events.append(BifEvent("hopf", hit[0], v_at(hit[1])))
        if np.sign(taus[i][-1]) != np.sign(taus[i + 1][-1]):
            hit = tracer.bisect(a, taus[i], b, fold_indicator)
            if hit is not None:
                branches[-1].events.append(BifEvent("fold", hit[0], v_at(hit[1])))
            branches.append(EquilibriumBranch([]))
        branches[-1].points.append(points[i + 1])
    return [br for br in branches if br.points]


def continue_equilibria(
    spec: ModelSpec,
    params: ModelParams,
    bif_param_name: str,
    bif_range: Tuple[float, float],
    max_points: int = 2000,
    seed: int = BIF_SEED,
) -> List[EquilibriumBranch]:
    """
    Equilibrium branches over a parameter interval.

    Args:
        spec: Model specification
        params: Parameter set (the bifurcation parameter's own value is ignored)
        bif_param_name: Parameter or state variable swept
        bif_range: (low, high)
        max_points: Cap on points per traced direction
        seed: Multi-start seed

    Returns:
        Branches split at folds; empty when no equilibrium exists in range
    """
    lo, hi = (float(v) for v in bif_range)
    if not hi > lo:
        raise ContractViolation(f"empty range [{lo}, {hi}]")
    system = BifurcationSystem(spec, params, bif_param_name)
    tracer = _Tracer(system, lo, hi)

    curves: List[List[np.ndarray]] = []
    branches: List[EquilibriumBranch] = []
    for u in _seed_equilibria(system, tracer, seed):
        if any(_near_curve(u, c) for c in curves):
            continue
        tau = tracer.tangent(u, None)
        if tau[-1] < 0:
            tau = -tau
        fwd, fwd_t = tracer.trace(u, tau, max_points)
        bwd, bwd_t = tracer.trace(u, -tau, max_points)
        pts = bwd[:0:-1] + fwd
        taus = [-t for t in bwd_t[:0:-1]] + fwd_t
        curves.append(pts)
        branches.extend(_split_branches(tracer, pts, taus))

    if not branches:
        log.warning("no equilibrium found for %s in [%g, %g]", bif_param_name, lo, hi)
    else:
        log.info(
            "%d equilibrium branch(es), %d point(s), events: %s",
            len(branches), sum(len(b.points) for b in branches),
            ", ".join(f"{e.kind}@{e.bif_param:.4g}" for b in branches for e in b.events) or "none",
        )
    return branches
