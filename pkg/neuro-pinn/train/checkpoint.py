"""Portable JSON checkpoints of the network bundle and parameter estimate."""

import logging
from pathlib import Path
from typing import Dict, Tuple

from errors import ConfigError
from export import read_json, write_json
from net import FourierNet
from train.params import ConstrainedParams

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1


def save_checkpoint(
    path,
    nets: Dict[str, FourierNet],
    cp: ConstrainedParams,
    stage: str,
    iteration: int,
    model_id: str,
) -> Path:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "model": model_id,
        "stage": stage,
        "iteration": int(iteration),
        "lambda": {
            "names": list(cp.names),
            "signs": cp.signs.tolist(),
            "z": cp.z.tolist(),
        },
        "nets": {name: net.to_dict() for name, net in nets.items()},
    }
    path = write_json(path, doc)
    log.debug("checkpoint %s iteration %d -> %s", stage, iteration, path)
    return path


def load_checkpoint(path) -> Tuple[Dict[str, FourierNet], ConstrainedParams, dict]:
    """
    Read a checkpoint.

    Returns:
        (nets by state name, parameter estimate, header with model/stage/iteration)
    """
    doc = read_json(path)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"{path}: unsupported checkpoint format {doc.get('format')!r}")
    lam = doc["lambda"]
    cp = ConstrainedParams(tuple(lam["names"]), lam["signs"], lam["z"])
    nets = {name: FourierNet.from_dict(d) for name, d in doc["nets"].items()}
    header = {k: doc[k] for k in ("model", "stage", "iteration")}
    return nets, cp, header
