"""Run configuration documents: defaults, merging, validation, hashing.

A run is described by one JSON document. Defaults come from config.py
for the chosen model; a user file is merged on top, then CLI overrides.
The merged document is canonicalized (sorted keys, compact separators,
round-trip floats) before hashing so identical runs share a hash.
"""

import copy
import hashlib
import json
import logging
from typing import Any, Dict, Mapping, Optional

from config import (
    BALANCE_ALPHA,
    BALANCE_EPS,
    BALANCE_UPDATE_EVERY,
    BATCH_SEED,
    BIF_SEED,
    CHECKPOINT_EVERY,
    DATA_SEED,
    FFT_ENERGY,
    LOG_EVERY,
    MODEL_DEFAULTS,
    NET_SEED,
    RWF_MU,
    RWF_SIGMA,
    STAGE1_DECAY_EVERY,
    STAGE1_DECAY_FACTOR,
    STAGE1_ITERS,
    STAGE1_LR0,
    STAGE2_DECAY_FACTOR,
    T_DISCARD,
)
from errors import ConfigError
from export import read_json
from models import PRESETS, get_model, load_preset
from sim import NOISE_KINDS
from spectral import ENERGY_CONVENTIONS

log = logging.getLogger(__name__)

DEFAULT_ORBIT_SAMPLES = 101


def default_config(model_id: str) -> Dict[str, Any]:
    """Complete run document with every default for ``model_id``."""
    spec = get_model(model_id)
    d = MODEL_DEFAULTS.get(spec.id)
    if d is None:
        raise ConfigError(f"no defaults for model {model_id!r}")
    return {
        "model": spec.id,
        "regime": d["regime"],
        "sim": {
            "dt": d["sim_dt"],
            "duration": d["duration"],
            "stride": d["stride"],
            "t_discard": T_DISCARD,
        },
        "noise": {"kind": "relative", "level": 0.01, "seed": DATA_SEED},
        "fft": {"p": d["fft_p"], "energy": FFT_ENERGY},
        "net": {
            "widths": list(d["widths"]),
            "rwf_mu": RWF_MU,
            "rwf_sigma": RWF_SIGMA,
            "seed": NET_SEED,
        },
        "stage1": {
            "lr0": STAGE1_LR0,
            "decay_factor": STAGE1_DECAY_FACTOR,
            "decay_every": STAGE1_DECAY_EVERY,
            "iters": STAGE1_ITERS,
            "batch": d["batch"],
        },
        "stage2": {
            "lr0_theta": d["stage2_lr0_theta"],
            "decay_every": d["stage2_decay_every"],
            "decay_factor": STAGE2_DECAY_FACTOR,
            "lr_lambda": d["stage2_lr_lambda"],
            "iters": d["stage2_iters"],
            "batch": d["batch"],
            "balance": {
                "alpha": BALANCE_ALPHA,
                "eps": BALANCE_EPS,
                "update_every": BALANCE_UPDATE_EVERY,
            },
            "train_v": False,
            "omega_u": 1.0,
            "checkpoint_every": CHECKPOINT_EVERY,
        },
        "init_guess": "ones",
        "batch_seed": BATCH_SEED,
        "threads": 1,
        "log_every": LOG_EVERY,
        "bifurcation": {
            "param": d["bif_param"],
            "range": list(d["bif_range"]),
            "orbit_samples": DEFAULT_ORBIT_SAMPLES,
            "t_transient": d["t_transient"],
            "t_measure": d["t_measure"],
            "seed": BIF_SEED,
        },
    }


def deep_merge(base: Mapping, override: Mapping) -> Dict[str, Any]:
    """Recursively lay ``override`` over ``base``; neither is modified."""
    out = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _check_keys(doc: Mapping, reference: Mapping, where: str) -> None:
    unknown = sorted(set(doc) - set(reference))
    if unknown:
        raise ConfigError(f"unknown config key(s) {unknown} in {where or 'top level'}")
    for key, ref in reference.items():
        if isinstance(ref, Mapping) and key in doc:
            if not isinstance(doc[key], Mapping):
                raise ConfigError(f"config key {where + key!r} must be an object")
            _check_keys(doc[key], ref, f"{where}{key}.")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def validate(doc: Dict[str, Any]) -> Dict[str, Any]:
    """
    Check a merged document; raise ConfigError on the first problem.

    Returns:
        The same document
    """
    _check_keys(doc, default_config(doc.get("model", "sml")), "")
    spec = get_model(doc["model"])
    load_preset(doc["regime"], spec.id)
    init = doc["init_guess"]
    _require(
        init == "ones" or PRESETS.get(init, ("",))[0] == spec.id,
        f"init_guess must be 'ones' or a {spec.id} regime, got {init!r}",
    )

    sim = doc["sim"]
    _require(sim["dt"] > 0 and sim["duration"] > 0, "sim.dt and sim.duration must be positive")
    _require(int(sim["stride"]) >= 1, "sim.stride must be >= 1")
    _require(sim["t_discard"] >= 0, "sim.t_discard must be >= 0")

    noise = doc["noise"]
    _require(noise["kind"] in NOISE_KINDS, f"noise.kind must be one of {NOISE_KINDS}")
    _require(noise["level"] >= 0, "noise.level must be >= 0")
    _require(0 < doc["fft"]["p"] < 100, "fft.p must lie in (0, 100)")
    _require(doc["fft"]["energy"] in ENERGY_CONVENTIONS, f"fft.energy must be one of {ENERGY_CONVENTIONS}")

    net = doc["net"]
    _require(
        len(net["widths"]) >= 1 and all(int(w) >= 1 for w in net["widths"]),
        "net.widths must be a non-empty list of positive integers",
    )
    _require(net["rwf_sigma"] >= 0, "net.rwf_sigma must be >= 0")

    for stage in ("stage1", "stage2"):
        s = doc[stage]
        _require(int(s["iters"]) >= 0, f"{stage}.iters must be >= 0")
        _require(int(s["batch"]) >= 1, f"{stage}.batch must be >= 1")
        _require(int(s["decay_every"]) >= 1, f"{stage}.decay_every must be >= 1")
        _require(s["decay_factor"] > 0, f"{stage}.decay_factor must be positive")
    _require(doc["stage1"]["lr0"] > 0, "stage1.lr0 must be positive")
    s2 = doc["stage2"]
    _require(s2["lr0_theta"] > 0 and s2["lr_lambda"] > 0, "stage2 learning rates must be positive")
    bal = s2["balance"]
    _require(0 <= bal["alpha"] <= 1, "stage2.balance.alpha must lie in [0, 1]")
    _require(bal["eps"] > 0, "stage2.balance.eps must be positive")
    _require(int(bal["update_every"]) >= 1, "stage2.balance.update_every must be >= 1")
    _require(int(s2["checkpoint_every"]) >= 1, "stage2.checkpoint_every must be >= 1")
    _require(int(doc["threads"]) >= 1, "threads must be >= 1")
    _require(int(doc["log_every"]) >= 1, "log_every must be >= 1")

    bif = doc["bifurcation"]
    _require(
        len(bif["range"]) == 2 and bif["range"][1] > bif["range"][0],
        "bifurcation.range must be [low, high] with high > low",
    )
    _require(int(bif["orbit_samples"]) >= 2, "bifurcation.orbit_samples must be >= 2")
    return doc


def load_config(path: Optional[str] = None, overrides: Optional[Mapping] = None) -> Dict[str, Any]:
    """
    Defaults for the model named by overrides/file, then file, then overrides.

    Args:
        path: Optional JSON run document
        overrides: Nested mapping from command-line flags

    Returns:
        Validated merged document
    """
    overrides = overrides or {}
    user = read_json(path) if path else {}
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    model_id = overrides.get("model") or user.get("model") or "sml"
    doc = default_config(model_id)
    if "model" in overrides and user.get("model") not in (None, overrides["model"]):
        # defaults for the overriding model; the file's regime/init belong to another model
        user = {k: v for k, v in user.items() if k not in ("model", "regime", "init_guess")}
    doc = deep_merge(doc, user)
    doc = deep_merge(doc, overrides)
    try:
        return validate(doc)
    except (KeyError, TypeError) as e:
        raise ConfigError(f"malformed config: {e}") from None


def canonicalize(doc: Mapping) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_hash(doc: Mapping) -> str:
    """SHA-256 of the canonical form."""
    return hashlib.sha256(canonicalize(doc).encode("utf-8")).hexdigest()


def seeds_of(doc: Mapping) -> Dict[str, int]:
    """The three named seeds every random draw descends from."""
    return {
        "data": int(doc["noise"]["seed"]),
        "net": int(doc["net"]["seed"]),
        "batch": int(doc["batch_seed"]),
    }
