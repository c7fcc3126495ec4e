"""Model catalog: neuron systems by string id, ground-truth presets by name."""

from typing import Dict, Optional, Tuple

from errors import ConfigError
from models.base import (
    ModelParams,
    ModelSpec,
    ParamMeta,
    eval_jacobian,
    eval_vector_field,
    param_from_vector,
    param_vector,
)
from models.bml import REGIMES as BML_REGIMES
from models.bml import BurstingMorrisLecar
from models.pbc import REGIMES as PBC_REGIMES
from models.pbc import PreBotzinger
from models.sml import REGIMES as SML_REGIMES
from models.sml import SpikingMorrisLecar

MODELS: Dict[str, ModelSpec] = {
    "sml": SpikingMorrisLecar(),
    "bml": BurstingMorrisLecar(),
    "pbc": PreBotzinger(),
}

# preset name -> (model id, values laid over the model defaults)
PRESETS: Dict[str, Tuple[str, Dict[str, float]]] = {}
for _model_id, _regimes in (("sml", SML_REGIMES), ("bml", BML_REGIMES), ("pbc", PBC_REGIMES)):
    for _name, _values in _regimes.items():
        PRESETS[_name] = (_model_id, _values)


def get_model(model_id: str) -> ModelSpec:
    """Look up a model by id ("sml", "bml", "pbc", or a registered test model)."""
    try:
        return MODELS[model_id.lower()]
    except KeyError:
        raise ConfigError(f"unknown model {model_id!r}; choose from {sorted(MODELS)}") from None


def register_model(spec: ModelSpec) -> ModelSpec:
    """Add a model to the catalog (used for test systems)."""
    MODELS[spec.id] = spec
    return spec


def regimes_for(model_id: str):
    return [name for name, (mid, _) in PRESETS.items() if mid == model_id]


def load_preset(name: str, model_id: Optional[str] = None) -> ModelParams:
    """
    Ground-truth parameters of a named regime.

    Args:
        name: Preset name (e.g. "hopf", "square-wave", "pbc-default")
        model_id: If given, the preset must belong to this model

    Returns:
        Complete ModelParams of the preset's model
    """
    try:
        owner, values = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown regime {name!r}; choose from {sorted(PRESETS)}") from None
    if model_id is not None and owner != model_id:
        raise ConfigError(f"regime {name!r} belongs to model {owner!r}, not {model_id!r}")
    spec = MODELS[owner]
    return spec.make_params(values)


__all__ = [
    "MODELS",
    "PRESETS",
    "ModelParams",
    "ModelSpec",
    "ParamMeta",
    "eval_jacobian",
    "eval_vector_field",
    "get_model",
    "load_preset",
    "param_from_vector",
    "param_vector",
    "register_model",
    "regimes_for",
]
