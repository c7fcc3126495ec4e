"""Tests for the optimizer, loss balancing, residual gradients and training stages."""

import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from errors import ConfigError, ContractViolation, NonFiniteResidual, UndefinedMetric
from export import write_json
from models import get_model, load_preset
from net import FourierEmbedding, init_network
from sim import TimeSeries
from train import (
    AdamState,
    BalanceState,
    ConstrainedParams,
    EstimationProblem,
    LossHistory,
    LrSchedule,
    Stage2Settings,
    TrainHooks,
    adam_step,
    initial_guess,
    load_checkpoint,
    normalized_l2,
    param_rel_error,
    pretrain_voltage,
    residual_losses,
    residual_values,
    run_physics_stage,
    save_checkpoint,
    update_balance,
)

SML = get_model("sml")
HOPF = load_preset("hopf")


# optimizer

def test_adam_first_step_moves_by_learning_rate():
    state = AdamState.zeros(2)
    state, x = adam_step(state, np.array([1.0, -2.0]), np.array([0.5, -3.0]), 0.1)
    np.testing.assert_allclose(x, [0.9, -1.9], atol=1e-6)
    assert state.step_count == 1


def test_adam_zero_gradient_leaves_params():
    state = AdamState.zeros(3)
    x0 = np.array([0.1, 0.2, 0.3])
    _, x = adam_step(state, x0, np.zeros(3), 0.1)
    np.testing.assert_array_equal(x, x0)


def test_adam_minimizes_a_quadratic():
    schedule = LrSchedule(0.1, 0.5, 200)
    state = AdamState.zeros(1)
    x = np.array([3.0])
    for k in range(2000):
        state, x = adam_step(state, x, 2.0 * x, schedule(k))
    assert abs(x[0]) < 1e-2


def test_adam_rejects_mismatched_shapes():
    with pytest.raises(ContractViolation):
        adam_step(AdamState.zeros(2), np.zeros(3), np.zeros(3), 0.1)


def test_staircase_schedule():
    schedule = LrSchedule(1e-3, 0.5, 10_000)
    assert schedule(0) == 1e-3
    assert schedule(9_999) == 1e-3
    assert schedule(10_000) == pytest.approx(5e-4)
    assert schedule(25_000) == pytest.approx(2.5e-4)
    assert LrSchedule.constant(1e-4)(10 ** 6) == 1e-4
    with pytest.raises(ContractViolation):
        LrSchedule(0.0)
    with pytest.raises(ContractViolation):
        LrSchedule(1e-3, 0.5, 0)


# balancing

def test_balance_equal_gradients():
    bs = update_balance(BalanceState.uniform(3), [1.0, 1.0, 1.0])
    np.testing.assert_allclose(bs.weights, [1.2, 1.2, 1.2])


def test_balance_boosts_the_small_gradient():
    bs = update_balance(BalanceState.uniform(2, alpha=0.0), [0.0, 1.0])
    assert bs.weights[0] == pytest.approx(1e6 + 2.0, rel=1e-9)
    assert bs.weights[1] == pytest.approx(1.0 + 1e-6 / (1.0 + 1e-6), rel=1e-12)


def test_balance_alpha_one_freezes_weights():
    bs = BalanceState(np.array([2.0, 0.5]), alpha=1.0)
    assert np.array_equal(update_balance(bs, [3.0, 0.1]).weights, [2.0, 0.5])


def test_balance_converges_to_fixed_point():
    g = np.array([2.0, 0.5, 1.0])
    bs = BalanceState.uniform(3)
    for _ in range(500):
        bs = update_balance(bs, g)
    smoothed = g + bs.eps
    np.testing.assert_allclose(bs.weights, smoothed.sum() / smoothed, rtol=1e-9)


@given(st.lists(st.floats(min_value=0.0, max_value=1e3), min_size=1, max_size=6))
def test_balance_target_weights_equalize_weighted_norms(norms):
    bs = update_balance(BalanceState.uniform(len(norms), alpha=0.0), norms)
    smoothed = np.asarray(norms) + bs.eps
    np.testing.assert_allclose(bs.weights * smoothed, smoothed.sum(), rtol=1e-12)
    assert np.all(bs.weights >= 1.0 - 1e-12)


def test_balance_cadence_and_validation():
    bs = BalanceState.uniform(2, update_every=1000)
    assert bs.due(0) and bs.due(2000) and not bs.due(999)
    with pytest.raises(ContractViolation):
        update_balance(bs, [1.0])
    with pytest.raises(ContractViolation):
        update_balance(bs, [1.0, np.nan])
    with pytest.raises(ContractViolation):
        BalanceState.uniform(2, alpha=1.5)


# constrained parameters

def test_ones_start_respects_declared_signs():
    cp = ConstrainedParams.ones(SML)
    values = cp.values()
    assert values["V1"] == -1.0
    assert all(v == 1.0 for k, v in values.items() if k != "V1")
    np.testing.assert_array_equal(cp.z, 0.0)


def test_preset_start_round_trips():
    cp = initial_guess(SML, "hopf")
    for name, value in cp.values().items():
        assert value == pytest.approx(HOPF[name], rel=1e-12)
    assert cp.to_params(SML, HOPF)["I_app"] == 100.0
    np.testing.assert_allclose(cp.dlam_dz(), cp.lam)


def test_bad_initial_values():
    values = {n: HOPF[n] for n in SML.param_names("estimated")}
    with pytest.raises(ContractViolation):
        ConstrainedParams.from_values(SML, dict(values, V1=0.0))
    with pytest.raises(ContractViolation):
        ConstrainedParams.from_values(SML, dict(values, g_K=-8.0))
    with pytest.raises(ContractViolation):
        ConstrainedParams(("a",), [2.0], [0.0])


# residuals

def _sml_nets(seed=3):
    rng = np.random.Generator(np.random.Philox(seed))
    freqs = [0.05, 0.31]
    v = init_network([6], FourierEmbedding.build(freqs), seed, output_map="identity",
                     out_shift=-30.0, out_scale=20.0, name="V", rng=rng)
    n = init_network([6], FourierEmbedding.build(freqs, 2, rng), seed, output_map="sigmoid",
                     name="n", rng=rng)
    return {"V": v, "n": n}


def _fd_check(nets, spec, cp, t, base, weights, trainable, rtol=1e-5, atol=1e-6):
    ev = residual_losses(nets, spec, cp, t, base, weights=weights, trainable=trainable)

    def total():
        return residual_losses(nets, spec, cp, t, base, weights=weights, trainable=trainable).total

    grads, gz = ev.layout.split(ev.grad)
    h = 1e-6
    z0 = cp.z.copy()
    for k in range(z0.size):
        cp.z = z0.copy()
        cp.z[k] += h
        up = total()
        cp.z = z0.copy()
        cp.z[k] -= h
        down = total()
        assert gz[k] == pytest.approx((up - down) / (2 * h), rel=rtol, abs=atol)
    cp.z = z0

    rng = np.random.Generator(np.random.Philox(8))
    for name in trainable:
        net = nets[name]
        theta = net.get_flat()
        for i in rng.choice(theta.size, size=min(15, theta.size), replace=False):
            shifted = theta.copy()
            shifted[i] += h
            net.set_flat(shifted)
            up = total()
            shifted[i] -= 2 * h
            net.set_flat(shifted)
            down = total()
            net.set_flat(theta)
            assert grads[name][i] == pytest.approx((up - down) / (2 * h), rel=rtol, abs=atol)


def test_residual_gradient_on_decay_model(decay_model):
    emb = FourierEmbedding([0.2, 0.7])
    nets = {"V": init_network([5], emb, seed=2, name="V")}
    cp = ConstrainedParams.from_values(decay_model, {"k": 0.8})
    t = np.linspace(0.0, 10.0, 17)
    _fd_check(nets, decay_model, cp, t, decay_model.default_params(), np.ones(1), ["V"])


def test_residual_gradient_on_spiking_model():
    nets = _sml_nets()
    cp = initial_guess(SML, "hopf")
    t = np.linspace(0.0, 60.0, 23)
    _fd_check(nets, SML, cp, t, HOPF, np.array([1.3, 0.7]), ["V", "n"], atol=1e-5)


def test_residual_loss_matches_raw_residuals():
    nets = _sml_nets()
    cp = initial_guess(SML, "hopf")
    t = np.linspace(0.0, 30.0, 11)
    ev = residual_losses(nets, SML, cp, t, HOPF)
    r = residual_values(nets, SML, HOPF, t)
    assert r.shape == (2, 11)
    np.testing.assert_allclose(ev.losses, np.mean(r * r, axis=1), rtol=1e-10)
    assert ev.layout.net_names == ("n",)


def test_threaded_residuals_are_bitwise_equal():
    nets = _sml_nets()
    cp = initial_guess(SML, "hopf")
    t = np.linspace(0.0, 80.0, 40)
    one = residual_losses(nets, SML, cp, t, HOPF, threads=1, chunk_size=7)
    two = residual_losses(nets, SML, cp, t, HOPF, threads=2, chunk_size=7)
    assert np.array_equal(one.losses, two.losses)
    assert np.array_equal(one.grad, two.grad)


def test_per_equation_gradients_recombine():
    nets = _sml_nets()
    cp = initial_guess(SML, "hopf")
    t = np.linspace(0.0, 40.0, 15)
    w = np.array([0.4, 2.5])
    plain = residual_losses(nets, SML, cp, t, HOPF, weights=w)
    split = residual_losses(nets, SML, cp, t, HOPF, weights=w, per_equation=True)
    np.testing.assert_allclose(split.weighted(w), plain.grad, rtol=1e-10, atol=1e-9)
    assert split.eq_grad_norms().shape == (2,)
    with pytest.raises(ContractViolation):
        plain.eq_grad_norms()


def test_non_finite_residual_names_the_equation(decay_model):
    nets = {"V": init_network([3], FourierEmbedding([0.5]), seed=0, name="V")}
    cp = ConstrainedParams(("k",), [1.0], [800.0])
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NonFiniteResidual) as info:
            residual_losses(nets, decay_model, cp, [0.0, 1.0], decay_model.default_params())
    assert info.value.equation == "V"


def test_residual_needs_every_network():
    nets = _sml_nets()
    del nets["n"]
    with pytest.raises(ContractViolation):
        residual_losses(nets, SML, initial_guess(SML, "hopf"), [0.0], HOPF)


# metrics

def test_metrics():
    x = np.array([1.0, -2.0, 3.0])
    assert normalized_l2(x, x) == 0.0
    assert normalized_l2(x, np.zeros(3)) == 1.0
    assert param_rel_error(100.0, 100.8) == pytest.approx(0.008)
    with pytest.raises(UndefinedMetric):
        normalized_l2(np.zeros(3), x)
    with pytest.raises(UndefinedMetric):
        param_rel_error(0.0, 1.0)
    with pytest.raises(ContractViolation):
        normalized_l2(TimeSeries(0.0, 0.1, x), TimeSeries(0.0, 0.2, x))


# stages

def _sine_observations(n=200, dt=0.5):
    t = dt * np.arange(n)
    return TimeSeries(0.0, dt, -40.0 + 10.0 * np.sin(0.2 * t))


def test_pretraining_fits_the_observations():
    obs = _sine_observations()
    net = init_network([8], FourierEmbedding([0.2]), seed=5, out_shift=-40.0, out_scale=10.0)
    before = np.mean((net.forward(obs.times) - obs.values) ** 2)
    history = LossHistory()
    outcome = pretrain_voltage(net, obs, LrSchedule(1e-2), 50, 300, seed=2, history=history)
    after = np.mean((net.forward(obs.times) - obs.values) ** 2)
    assert outcome.iterations == 300
    assert not outcome.interrupted
    assert after < 0.5 * before
    assert history.rows[0][0] == "stage1"


def test_pretraining_is_reproducible():
    obs = _sine_observations()
    nets = [init_network([4], FourierEmbedding([0.2]), seed=5) for _ in range(2)]
    for net in nets:
        pretrain_voltage(net, obs, LrSchedule(1e-2), 20, 25, seed=9)
    assert np.array_equal(nets[0].get_flat(), nets[1].get_flat())


def test_pretraining_stops_on_request():
    obs = _sine_observations()
    net = init_network([4], FourierEmbedding([0.2]), seed=5)
    hooks = TrainHooks(stop=lambda: True)
    outcome = pretrain_voltage(net, obs, LrSchedule(1e-2), 20, 100, seed=1, hooks=hooks)
    assert outcome.interrupted
    assert outcome.iterations == 1
    with pytest.raises(ContractViolation):
        pretrain_voltage(net, obs, LrSchedule(1e-2), 0, 10, seed=1)


def _decay_problem(decay_model, **settings):
    t = 0.1 * np.arange(101)
    obs = TimeSeries(0.0, 0.1, np.exp(-0.5 * t))
    nets = {"V": init_network([5], FourierEmbedding([0.3, 0.9]), seed=1, name="V")}
    cp = ConstrainedParams.from_values(decay_model, {"k": 1.0})
    st = Stage2Settings(lr0_theta=1e-3, lr_lambda=1e-2, iters=settings.pop("iters", 20),
                        batch=16, update_every=5, train_v=True, **settings)
    return EstimationProblem(decay_model, obs, nets, cp, decay_model.default_params(), st,
                             batch_seed=4, hooks=TrainHooks(log_every=5))


def test_physics_stage_runs_and_logs(decay_model):
    problem = _decay_problem(decay_model)
    z0 = problem.cp.z.copy()
    outcome, saved = run_physics_stage(problem)
    assert outcome.iterations == 20
    assert not outcome.interrupted
    assert saved == []
    assert not np.array_equal(problem.cp.z, z0)
    assert [row[1] for row in problem.history.rows] == [0, 5, 10, 15]
    assert np.isfinite(outcome.final_loss)


def test_physics_stage_checkpoints_on_interrupt(decay_model):
    problem = _decay_problem(decay_model)
    calls = []
    problem.hooks.stop = lambda: len(calls) == 0 and problem.history.rows != []
    problem.hooks.on_checkpoint = lambda stage, k, nets, cp: calls.append((stage, k)) or f"{stage}-{k}"
    outcome, saved = run_physics_stage(problem)
    assert outcome.interrupted
    assert calls == [("stage2", 1)]
    assert saved == ["stage2-1"]


def test_loss_history_table():
    history = LossHistory()
    history.append("stage1", 0, 2.0)
    history.append("stage2", 0, 1.5, [1.0, 0.5], [1.0, 1.0])
    assert history.header(("V", "n")) == [
        "stage", "iter", "loss_total", "loss_V", "loss_n", "weight_V", "weight_n",
    ]
    rows = history.table(("V", "n"))
    assert rows[0] == ["stage1", 0, 2.0, None, None, None, None]
    assert rows[1] == ["stage2", 0, 1.5, 1.0, 0.5, 1.0, 1.0]


# checkpoints

def test_checkpoint_round_trip(tmp_path):
    nets = _sml_nets()
    cp = initial_guess(SML, "snic")
    path = save_checkpoint(tmp_path / "ck" / "stage2-00000010.json", nets, cp, "stage2", 10, "sml")
    loaded, cp2, header = load_checkpoint(path)
    assert header == {"model": "sml", "stage": "stage2", "iteration": 10}
    assert cp2.names == cp.names
    np.testing.assert_array_equal(cp2.z, cp.z)
    t = np.linspace(0.0, 20.0, 5)
    for name in ("V", "n"):
        np.testing.assert_array_equal(loaded[name].forward(t), nets[name].forward(t))


def test_checkpoint_format_is_checked(tmp_path):
    path = write_json(tmp_path / "bad.json", {"format": 99})
    with pytest.raises(ConfigError):
        load_checkpoint(path)
    with pytest.raises(ConfigError):
        load_checkpoint(tmp_path / "missing.json")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
