"""Tests for equilibrium continuation, orbit envelopes and diagram distance."""

import sys

import numpy as np
import pytest

from bifurcation import (
    BifEvent,
    BifurcationDiagram,
    BifurcationSystem,
    OrbitExtremaBranch,
    OrbitSample,
    continue_equilibria,
    diagram_distance,
    estimate_period,
    newton,
    orbit_events,
    orbit_extrema,
    sweep_diagram,
    sweep_orbits,
)
from errors import ConfigError, ContractViolation
from models import get_model, load_preset
from sim import integrate


@pytest.fixture(scope="module")
def fold_branches(fold_model):
    return continue_equilibria(fold_model, fold_model.default_params(), "mu", (-0.5, 1.0))


@pytest.fixture(scope="module")
def fold_model():
    return get_model("fold-test")


# continuation

def test_fold_splits_curve_into_two_branches(fold_branches):
    assert len(fold_branches) == 2
    folds = [e for br in fold_branches for e in br.events if e.kind == "fold"]
    assert len(folds) == 1
    assert abs(folds[0].bif_param) < 1e-3
    assert abs(folds[0].v) < 0.05


def test_fold_branch_stability(fold_branches):
    for br in fold_branches:
        for p in br.points:
            if p.state[0] > 0.01:
                assert p.stability == "stable"
            elif p.state[0] < -0.01:
                assert p.stability == "unstable"


def test_branch_points_are_equilibria_in_range(fold_branches):
    for br in fold_branches:
        for p in br.points:
            assert -0.5 - 1e-12 <= p.bif_param <= 1.0 + 1e-12
            assert abs(p.bif_param - p.state[0] ** 2) < 1e-9


def test_branches_reach_the_range_end(fold_branches):
    ends = sorted(float(p.state[0]) for br in fold_branches for p in br.points if p.bif_param > 1.0 - 1e-9)
    assert ends == pytest.approx([-1.0, 1.0], abs=1e-9)


def test_no_equilibrium_gives_no_branches(fold_model):
    assert continue_equilibria(fold_model, fold_model.default_params(), "mu", (-1.0, -0.5)) == []


def test_continuation_is_deterministic(fold_model):
    p = fold_model.default_params()
    a = continue_equilibria(fold_model, p, "mu", (0.1, 0.9), seed=3)
    b = continue_equilibria(fold_model, p, "mu", (0.1, 0.9), seed=3)
    assert [len(br.points) for br in a] == [len(br.points) for br in b]
    for ba, bb in zip(a, b):
        for pa, pb in zip(ba.points, bb.points):
            assert pa.bif_param == pb.bif_param
            assert np.array_equal(pa.state, pb.state)


def test_continuation_argument_checks(fold_model):
    p = fold_model.default_params()
    with pytest.raises(ContractViolation):
        continue_equilibria(fold_model, p, "mu", (1.0, 1.0))
    with pytest.raises(ConfigError):
        continue_equilibria(fold_model, p, "nu", (0.0, 1.0))
    with pytest.raises(ConfigError):
        BifurcationSystem(fold_model, p, "V")


def test_newton_converges_on_the_fold_model(fold_model):
    system = BifurcationSystem(fold_model, fold_model.default_params(), "mu")
    x = newton(system, np.array([1.5]), 0.25)
    assert x[0] == pytest.approx(0.5, abs=1e-10)
    assert newton(system, np.array([1.0]), -0.25) is None


def test_frozen_state_subsystem():
    pbc = get_model("pbc")
    system = BifurcationSystem(pbc, load_preset("pbc-default"), "h")
    assert system.names == ("V", "n")
    assert system.dim == 2
    f = system.field(np.array([-60.0, 0.01]), 0.5)
    full = pbc.rhs([-60.0, 0.01, 0.5], load_preset("pbc-default"))
    np.testing.assert_allclose(f, [full[0], full[1]])


def test_homoclinic_preset_rests_at_its_nominal_current():
    sml = get_model("sml")
    params = load_preset("homoclinic")
    system = BifurcationSystem(sml, params, "I_app")
    x = newton(system, np.array(sml.quasi_steady_state(8.5, params)), params["I_app"])
    assert x is not None
    assert 0.0 < x[0] < 20.0
    assert np.max(system.eigenvalues(x, params["I_app"]).real) < 0


# orbits

def test_estimate_period_of_a_sine():
    dt = 0.1
    t = dt * np.arange(2000)
    v = -40.0 + 20.0 * np.sin(2.0 * np.pi * t / 20.0 + 0.3)
    assert estimate_period(v, dt) == pytest.approx(20.0, rel=1e-3)


def test_estimate_period_rejects_quiet_or_short_signals():
    dt = 0.1
    t = dt * np.arange(2000)
    assert estimate_period(np.full(100, -60.0), dt) is None
    assert estimate_period(-60.0 + 0.4 * np.sin(t), dt) is None
    assert estimate_period(-40.0 + 20.0 * np.sin(2.0 * np.pi * t / 100.0), dt) is None


def test_orbit_events():
    branch = OrbitExtremaBranch([
        OrbitSample(5.0, -60.0, -60.0),
        OrbitSample(0.0, -61.0, -61.0),
        OrbitSample(1.0, -70.0, 20.0, 10.0),
        OrbitSample(2.0, -70.0, 20.0, 10.0),
        OrbitSample(3.0, -70.0, 20.0, 200.0),
        OrbitSample(4.0, -62.0, -62.0),
    ])
    assert [s.bif_param for s in branch.samples] == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
    events = {(e.kind, e.bif_param) for e in orbit_events(branch)}
    assert events == {("onset", 0.5), ("offset", 3.5), ("period-blowup", 3.0)}


def test_decaying_model_does_not_oscillate(decay_model):
    samples = sweep_orbits(decay_model, decay_model.default_params(), "k", [0.5, 1.0, 2.0],
                           t_transient=20.0, t_measure=10.0, dt=0.05)
    assert [s.bif_param for s in samples] == [0.5, 1.0, 2.0]
    for s in samples:
        assert not s.oscillating
        assert abs(s.v_max) < 0.01
    with pytest.raises(ContractViolation):
        sweep_orbits(decay_model, decay_model.default_params(), "k", [1.0], 10.0, 0.0)


# diagrams

def test_decay_diagram(decay_model):
    diagram = sweep_diagram(decay_model, decay_model.default_params(), "k", (0.5, 2.0), 4,
                            t_transient=20.0, t_measure=10.0, dt=0.05)
    assert len(diagram.branches) == 1
    assert all(p.stability == "stable" for p in diagram.branches[0].points)
    assert diagram.events == []
    cloud = diagram.equilibrium_cloud()
    assert cloud.shape[1] == 2
    assert cloud[:, 0].min() == pytest.approx(0.5)
    assert cloud[:, 0].max() == pytest.approx(2.0)
    np.testing.assert_allclose(cloud[:, 1], 0.0, atol=1e-9)
    assert len(diagram.orbits.samples) == 4
    with pytest.raises(ContractViolation):
        sweep_diagram(decay_model, decay_model.default_params(), "k", (0.5, 2.0), 1)


def _diagram(branches, shift=0.0, events=()):
    orbits = OrbitExtremaBranch([
        OrbitSample(mu, -65.0 + shift, -65.0 + shift + (40.0 if mu > 0.5 else 0.0),
                    30.0 if mu > 0.5 else None)
        for mu in np.linspace(-0.5, 1.0, 7)
    ])
    return BifurcationDiagram("fold-test", "mu", (-0.5, 1.0), ("V",), 0,
                              branches, orbits, list(events))


def test_distance_to_itself_is_zero(fold_branches):
    d = _diagram(fold_branches)
    dist = diagram_distance(d, d)
    assert dist.orbit_term == 0.0
    assert dist.hausdorff_term == 0.0
    assert dist.total == 0.0


def test_shifted_envelope_adds_two_per_millivolt(fold_branches):
    dist = diagram_distance(_diagram(fold_branches), _diagram(fold_branches, shift=1.0))
    assert dist.orbit_term == pytest.approx(2.0)
    assert dist.hausdorff_term == 0.0
    record = dist.as_record()
    assert record["distance"] == pytest.approx(2.0)


def test_hausdorff_term_of_a_moved_cloud(fold_branches, fold_model):
    moved = continue_equilibria(fold_model, fold_model.default_params(), "mu", (-0.5, 0.5))
    dist = diagram_distance(_diagram(fold_branches), _diagram(moved))
    assert dist.hausdorff_term > 0.1
    assert diagram_distance(_diagram(fold_branches), _diagram([])).hausdorff_term == float("inf")


def test_event_shifts():
    a = _diagram([], events=[BifEvent("fold", 10.0, -30.0), BifEvent("hopf", 50.0, -20.0)])
    b = _diagram([], events=[BifEvent("fold", 11.0, -30.0)])
    dist = diagram_distance(a, b)
    assert dist.max_event_shift("fold") == pytest.approx(0.1)
    assert dist.event_shifts["hopf"] == [{"a": 50.0, "b": None, "rel_shift": None}]
    assert dist.max_event_shift("hopf") is None
    assert dist.max_event_shift("onset") is None


def test_distance_needs_the_same_parameter(fold_branches):
    a = _diagram(fold_branches)
    b = _diagram(fold_branches)
    b.bif_param = "I_app"
    with pytest.raises(ContractViolation):
        diagram_distance(a, b)


# model diagrams

@pytest.mark.slow
def test_sml_hopf_regime_has_a_hopf_point():
    sml = get_model("sml")
    branches = continue_equilibria(sml, load_preset("hopf"), "I_app", (0.0, 250.0))
    assert any(e.kind == "hopf" for br in branches for e in br.events)


@pytest.mark.slow
def test_stable_sml_equilibria_attract_nearby_states():
    sml = get_model("sml")
    base = load_preset("hopf")
    branches = continue_equilibria(sml, base, "I_app", (0.0, 250.0))
    checked = 0
    for br in branches:
        stable = [p for p in br.points if p.max_re_eig < -2e-3]
        if not stable:
            continue
        for i in np.unique(np.linspace(0, len(stable) - 1, 10).astype(int)):
            point = stable[i]
            x0 = np.array(point.state, dtype=float)
            x0[0] += 0.1
            params = base.replace(sml, I_app=point.bif_param)
            end = integrate(sml, params, x0, 0.1, 5000).states[-1]
            assert abs(end[0] - point.state[0]) < 0.5
            checked += 1
    assert checked >= 10


@pytest.mark.slow
def test_pbc_fast_subsystem_has_folds():
    pbc = get_model("pbc")
    branches = continue_equilibria(pbc, load_preset("pbc-default"), "h", (0.0, 1.0))
    assert any(e.kind == "fold" for br in branches for e in br.events)


@pytest.mark.slow
def test_sml_oscillates_at_its_nominal_current():
    sml = get_model("sml")
    sample = orbit_extrema(sml, load_preset("hopf"), "I_app", 100.0, 2000.0, 1000.0)
    assert sample.oscillating
    assert sample.v_max - sample.v_min > 30.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
