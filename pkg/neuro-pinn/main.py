#!/usr/bin/env python3
"""Main entry point: simulate, spectrum, train, evaluate, bifurcate, diff."""

import argparse
import json
import logging
import os
import signal
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from config import DEFAULT_OUT_DIR, LOG_LEVEL_ENV, OUT_DIR_ENV
from context import RunContext
from errors import ConfigError, ContinuationFailure, PinnError
from export import (
    read_json,
    read_series_csv,
    read_trajectory_csv,
    write_csv,
    write_json,
    write_series_csv,
    write_trajectory_csv,
)
from formatters import fmt_param_table, fmt_percent
from models import ModelParams, ModelSpec, get_model, load_preset
from runconfig import canonicalize, config_hash, load_config
from sim import NoiseSpec, add_noise, simulate
from spectral import ENERGY_CONVENTIONS, extract

log = logging.getLogger("neuro-pinn")

EXIT_INTERRUPTED = 130

# Global state
ctx = None            # RunContext of the running command


def handle_shutdown(signum, frame):
    """Handle shutdown signals: let the running loop finish its iteration, exit on a second signal."""
    global ctx
    if ctx is not None and not ctx.stop_requested():
        log.warning("signal %d received; stopping after the current iteration", signum)
        ctx.request_stop()
        return
    sys.exit(EXIT_INTERRUPTED)


# helpers

def _parse_range(text: str):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"range must look like 'a:b', got {text!r}") from None
    return [lo, hi]


def _overrides(args) -> Dict[str, Any]:
    """Nested config overrides from the flags that were given."""
    o: Dict[str, Any] = {}

    def put(path, value):
        if value is None:
            return
        node = o
        *parents, leaf = path.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value

    get = lambda name: getattr(args, name, None)
    put("model", get("model"))
    put("regime", get("regime"))
    if get("noise") is not None:
        ns = NoiseSpec.parse(args.noise)
        put("noise.kind", ns.kind)
        put("noise.level", ns.level)
    put("noise.seed", get("seed"))
    put("sim.duration", get("duration"))
    put("sim.dt", get("dt"))
    put("sim.stride", get("stride"))
    put("sim.t_discard", get("discard"))
    put("fft.p", get("p"))
    put("fft.energy", get("energy"))
    put("init_guess", get("init"))
    put("net.seed", get("net_seed"))
    put("batch_seed", get("batch_seed"))
    put("stage1.iters", get("stage1_iters"))
    put("stage2.iters", get("stage2_iters"))
    if get("train_v"):
        put("stage2.train_v", True)
    put("threads", get("threads"))
    put("bifurcation.param", get("param"))
    if get("range") is not None:
        put("bifurcation.range", _parse_range(args.range))
    put("bifurcation.orbit_samples", get("orbit_samples"))
    put("bifurcation.t_transient", get("t_transient"))
    put("bifurcation.t_measure", get("t_measure"))
    return o


def _start(args, command: str):
    global ctx
    doc = load_config(args.config, _overrides(args))
    ctx = RunContext(args.out_dir, doc, command=command)
    log.info("%s: model %s, regime %s, config %s", command, doc["model"], doc["regime"], config_hash(doc)[:12])
    return doc, ctx


def _finish(ctx: RunContext) -> int:
    ctx.record(write_json(ctx.path("config.json"), _canonical(ctx.config)))
    ctx.write_manifest()
    return EXIT_INTERRUPTED if ctx.interrupted else 0


def _canonical(doc):
    return json.loads(canonicalize(doc))


def _load_params(spec: ModelSpec, path: Optional[str], regime: str) -> ModelParams:
    """
    Parameters from a file laid over the regime preset.

    Accepts a flat {name: value} map, {"params": {...}}, or a result file
    with "lambda_hat" (plus optional "regime").
    """
    truth = load_preset(regime, spec.id)
    if not path:
        return truth
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    if doc.get("model") not in (None, spec.id):
        raise ConfigError(f"{path}: parameters belong to model {doc['model']!r}, not {spec.id!r}")
    if doc.get("regime"):
        truth = load_preset(doc["regime"], spec.id)
    values = doc.get("params") or doc.get("lambda_hat") or {
        k: v for k, v in doc.items() if k not in ("model", "regime")
    }
    return spec.make_params(values, base=truth)


# commands

def cmd_simulate(args) -> int:
    """Ground-truth trajectory plus clean and noisy observations."""
    doc, ctx = _start(args, "simulate")
    spec = get_model(doc["model"])
    truth = load_preset(doc["regime"], spec.id)
    sim = doc["sim"]
    with ctx.phase("simulate"):
        traj = simulate(spec, truth, sim["duration"], sim["dt"], sim["stride"], t_discard=sim["t_discard"])
        clean = traj.series(spec.state_names[spec.observed_index])
        noise = doc["noise"]
        noisy = add_noise(clean, NoiseSpec(noise["kind"], noise["level"], noise["seed"]))
    ctx.record(write_trajectory_csv(ctx.path("trajectory.csv"), traj))
    ctx.record(write_series_csv(ctx.path("observations_clean.csv"), clean))
    ctx.record(write_series_csv(ctx.path("observations.csv"), noisy))
    log.info("%d observation samples at dt=%g ms", len(noisy), noisy.dt)
    return _finish(ctx)


def _observations(args, ctx: RunContext, spec: ModelSpec):
    path = args.observations or ctx.path("observations.csv")
    return read_series_csv(path, spec.state_names[spec.observed_index])


def _write_selection(ctx: RunContext, spectrum, selection) -> None:
    rows = zip(spectrum.freqs.tolist(), spectrum.psd.tolist())
    ctx.record(write_csv(ctx.path("spectrum.csv"), ("freq", "psd"), rows))
    ctx.record(write_json(ctx.path("selection.json"), selection.as_record()))


def cmd_spectrum(args) -> int:
    """Power spectrum and dominant-frequency selection of the observations."""
    doc, ctx = _start(args, "spectrum")
    spec = get_model(doc["model"])
    obs = _observations(args, ctx, spec)
    with ctx.phase("spectrum"):
        spectrum, selection = extract(obs, doc["fft"]["p"], doc["fft"]["energy"])
    log.info("p=%g%% selects %d frequencies", selection.threshold, selection.m_star)
    _write_selection(ctx, spectrum, selection)
    return _finish(ctx)


def _reference(args, ctx: RunContext, spec: ModelSpec):
    path = Path(args.reference) if args.reference else ctx.path("trajectory.csv")
    if not path.is_file():
        log.warning("no reference trajectory at %s; state errors skipped", path)
        return None
    return read_trajectory_csv(path, spec.id, spec.state_names)


def cmd_train(args) -> int:
    """Two-stage estimation from the observation CSV."""
    from train import (
        EstimationProblem,
        Stage1Settings,
        Stage2Settings,
        TrainHooks,
        build_nets,
        initial_guess,
        run_estimation,
        save_checkpoint,
    )

    doc, ctx = _start(args, "train")
    spec = get_model(doc["model"])
    truth = load_preset(doc["regime"], spec.id)
    obs = _observations(args, ctx, spec)
    reference = _reference(args, ctx, spec)

    with ctx.phase("spectrum"):
        spectrum, selection = extract(obs, doc["fft"]["p"], doc["fft"]["energy"])
    _write_selection(ctx, spectrum, selection)
    log.info("p=%g%% selects %d frequencies", selection.threshold, selection.m_star)

    net = doc["net"]
    nets = build_nets(spec, selection, obs, net["widths"], net["seed"], net["rwf_mu"], net["rwf_sigma"])
    for name, n in nets.items():
        log.info("network %s: %d trainable parameters", name, n.n_params)

    def on_checkpoint(stage, k, nets_, cp_):
        path = ctx.path(f"checkpoints/{stage}-{k:08d}.json")
        return ctx.record(save_checkpoint(path, nets_, cp_, stage, k, spec.id))

    hooks = TrainHooks(
        quiet=args.quiet or not sys.stderr.isatty(),
        log_every=int(doc["log_every"]),
        stop=ctx.stop_requested,
        on_checkpoint=on_checkpoint,
    )
    problem = EstimationProblem(
        spec=spec,
        observations=obs,
        nets=nets,
        cp=initial_guess(spec, doc["init_guess"]),
        base=truth,
        settings=Stage2Settings.from_doc(doc["stage2"]),
        batch_seed=int(doc["batch_seed"]),
        truth=truth,
        reference=reference,
        threads=int(doc["threads"]),
        hooks=hooks,
    )
    with ctx.phase("train"):
        result = run_estimation(problem, Stage1Settings.from_doc(doc["stage1"]))
    ctx.interrupted = result.interrupted

    on_checkpoint("final", result.iters["stage2"], problem.nets, problem.cp)
    record = result.to_record()
    record.update({"regime": doc["regime"], "init_guess": doc["init_guess"], "config_hash": config_hash(doc)})
    ctx.record(write_json(ctx.path("result.json"), record))
    history = result.loss_history
    ctx.record(write_csv(
        ctx.path("loss_history.csv"), history.header(spec.state_names), history.table(spec.state_names),
    ))

    log.info("estimated parameters (estimate / truth):\n%s", fmt_param_table(
        record["lambda_hat"], truth, result.per_param_rel_error,
    ))
    for name, err in result.state_errors.items():
        log.info("state %s: normalized L2 error %s", name, fmt_percent(err, 2))
    return _finish(ctx)


def cmd_evaluate(args) -> int:
    """Recompute metrics from a saved checkpoint."""
    from train import assess, load_checkpoint

    doc, ctx = _start(args, "evaluate")
    if args.checkpoint:
        path = Path(args.checkpoint)
    else:
        found = sorted(ctx.out_dir.glob("checkpoints/final-*.json"))
        if not found:
            raise ConfigError(f"no final checkpoint under {ctx.out_dir / 'checkpoints'}")
        path = found[-1]
    nets, cp, header = load_checkpoint(path)
    spec = get_model(header["model"])
    truth = load_preset(doc["regime"], spec.id)
    reference = _reference(args, ctx, spec)
    with ctx.phase("evaluate"):
        lambda_hat, rel, states = assess(spec, nets, cp, truth, truth, reference)
    record = {
        "checkpoint": str(path),
        "stage": header["stage"],
        "iteration": header["iteration"],
        "lambda_hat": {n: lambda_hat[n] for n in cp.names},
        "rel_errors": rel,
        "state_errors": states,
    }
    ctx.record(write_json(ctx.path("evaluation.json"), record))
    log.info("parameters (estimate / truth):\n%s", fmt_param_table(record["lambda_hat"], truth, rel))
    return _finish(ctx)


def _diagram(doc, spec: ModelSpec, params: ModelParams):
    from bifurcation import sweep_diagram

    bif = doc["bifurcation"]
    return sweep_diagram(
        spec, params, bif["param"], tuple(bif["range"]), int(bif["orbit_samples"]),
        bif["t_transient"], bif["t_measure"], seed=int(bif["seed"]),
    )


def _write_diagram(ctx: RunContext, diagram, prefix: str = "") -> None:
    names = diagram.state_names
    eq_rows = []
    for b, br in enumerate(diagram.branches):
        for p in br.points:
            eq_rows.append([p.bif_param] + p.state.tolist() + [p.max_re_eig, p.stability, b])
    ctx.record(write_csv(
        ctx.path(prefix + "equilibria.csv"),
        ["bif_param"] + list(names) + ["max_re_eig", "stability", "branch"], eq_rows,
    ))
    ctx.record(write_csv(
        ctx.path(prefix + "events.csv"), ("kind", "bif_param"),
        ((e.kind, e.bif_param) for e in diagram.events),
    ))
    ctx.record(write_csv(
        ctx.path(prefix + "orbits.csv"), ("bif_param", "v_min", "v_max", "period"),
        ((s.bif_param, s.v_min, s.v_max, s.period) for s in diagram.orbits.samples),
    ))


def _require_branches(diagram) -> None:
    if not diagram.branches:
        lo, hi = diagram.bif_range
        raise ContinuationFailure(f"no equilibrium of {diagram.bif_param} in [{lo:g}, {hi:g}]")


def cmd_bifurcate(args) -> int:
    """Bifurcation diagram of one parameter set."""
    doc, ctx = _start(args, "bifurcate")
    spec = get_model(doc["model"])
    params = _load_params(spec, args.params_file, doc["regime"])
    with ctx.phase("bifurcate"):
        diagram = _diagram(doc, spec, params)
    _require_branches(diagram)
    _write_diagram(ctx, diagram)
    return _finish(ctx)


def cmd_diff(args) -> int:
    """Diagrams of two parameter sets and the distance between them."""
    from bifurcation import diagram_distance

    doc, ctx = _start(args, "diff")
    spec = get_model(doc["model"])
    pa = _load_params(spec, args.params_a, doc["regime"])
    pb = _load_params(spec, args.params_b, doc["regime"])
    with ctx.phase("diagram a"):
        da = _diagram(doc, spec, pa)
    with ctx.phase("diagram b"):
        db = _diagram(doc, spec, pb)
    _require_branches(da)
    _require_branches(db)
    _write_diagram(ctx, da, "a/")
    _write_diagram(ctx, db, "b/")
    dist = diagram_distance(da, db)
    ctx.record(write_json(ctx.path("distance.json"), dist.as_record()))
    log.info(
        "distance %.4g (orbit %.4g, hausdorff %.4g)",
        dist.total, dist.orbit_term, dist.hausdorff_term,
    )
    return _finish(ctx)


# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run document")
    common.add_argument("--out-dir", default=os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR))
    common.add_argument("--model", help="sml | bml | pbc")
    common.add_argument("--regime", help="ground-truth regime preset")
    common.add_argument("--threads", type=int)
    common.add_argument("--quiet", action="store_true", help="no progress bars")
    common.add_argument(
        "--log-level", default=os.environ.get(LOG_LEVEL_ENV, "INFO"),
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )

    parser = argparse.ArgumentParser(
        prog="neuro-pinn",
        description="Parameter estimation for conductance-based neuron models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate ground truth and observations")
    p.add_argument("--noise", help="kind:level, e.g. relative:0.01")
    p.add_argument("--seed", type=int, help="noise seed")
    p.add_argument("--duration", type=float, help="ms")
    p.add_argument("--dt", type=float, help="integration step (ms)")
    p.add_argument("--stride", type=int, help="downsampling stride")
    p.add_argument("--discard", type=float, help="ms of transient integrated before recording")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", parents=[common], help="dominant frequencies of the observations")
    p.add_argument("--observations", help="observation CSV (default <out-dir>/observations.csv)")
    p.add_argument("--p", type=float, help="cumulative energy threshold (percent)")
    p.add_argument("--energy", choices=ENERGY_CONVENTIONS, help="raw keeps the mean in the ranking")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("train", parents=[common], help="two-stage estimation")
    p.add_argument("--observations")
    p.add_argument("--reference", help="true trajectory CSV for state errors")
    p.add_argument("--p", type=float)
    p.add_argument("--energy", choices=ENERGY_CONVENTIONS)
    p.add_argument("--init", help="'ones' or a regime name")
    p.add_argument("--net-seed", type=int)
    p.add_argument("--batch-seed", type=int)
    p.add_argument("--stage1-iters", type=int)
    p.add_argument("--stage2-iters", type=int)
    p.add_argument("--train-v", action="store_true", help="keep training the voltage network in stage 2")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="metrics of a saved checkpoint")
    p.add_argument("--checkpoint")
    p.add_argument("--reference")
    p.set_defaults(func=cmd_evaluate)

    for name, func, helptext in (
        ("bifurcate", cmd_bifurcate, "bifurcation diagram"),
        ("diff", cmd_diff, "compare two bifurcation diagrams"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        if name == "bifurcate":
            p.add_argument("--params-file")
        else:
            p.add_argument("--params-a", help="reference parameters (default: regime preset)")
            p.add_argument("--params-b", required=True, help="parameters to compare")
        p.add_argument("--param", help="bifurcation parameter or frozen state")
        p.add_argument("--range", help="a:b")
        p.add_argument("--orbit-samples", type=int)
        p.add_argument("--t-transient", type=float)
        p.add_argument("--t-measure", type=float)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    """Parse arguments, configure logging, run one command, map errors to exit codes."""
    global ctx
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
    )

    signal.signal(signal.SIGTERM, handle_shutdown)
    signal.signal(signal.SIGINT, handle_shutdown)

    try:
        return args.func(args)
    except PinnError as e:
        log.error("%s", e)
        return e.exit_code
    finally:
        ctx = None


if __name__ == "__main__":
    sys.exit(main())
