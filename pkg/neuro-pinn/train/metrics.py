"""Error metrics for reconstructed states and estimated parameters."""

from typing import Dict, Iterable, Mapping, Union

import numpy as np

from errors import ContractViolation, UndefinedMetric
from sim import TimeSeries

Signal = Union[TimeSeries, np.ndarray]


def _samples(x: Signal) -> np.ndarray:
    return x.values if isinstance(x, TimeSeries) else np.asarray(x, dtype=float)


def normalized_l2(reference: Signal, prediction: Signal) -> float:
    """||x - x_hat||_2 / ||x||_2 over a shared sampling grid."""
    if isinstance(reference, TimeSeries) and isinstance(prediction, TimeSeries):
        if (reference.t0, reference.dt) != (prediction.t0, prediction.dt):
            raise ContractViolation("reference and prediction are on different grids")
    ref, pred = _samples(reference), _samples(prediction)
    if ref.shape != pred.shape:
        raise ContractViolation(f"length mismatch: {ref.shape} vs {pred.shape}")
    denom = np.linalg.norm(ref)
    if denom == 0:
        raise UndefinedMetric("reference signal has zero norm")
    return float(np.linalg.norm(ref - pred) / denom)


def param_rel_error(true: float, est: float) -> float:
    """|est - true| / |true|."""
    if true == 0:
        raise UndefinedMetric("relative error undefined for a zero true value")
    return abs(float(est) - float(true)) / abs(float(true))


def param_rel_errors(
    truth: Mapping[str, float], estimate: Mapping[str, float], names: Iterable[str]
) -> Dict[str, float]:
    return {name: param_rel_error(truth[name], estimate[name]) for name in names}
