"""Spiking Morris-Lecar model (V, n)."""

from typing import Any, List, Mapping, Sequence

import numpy as np

from models.base import ModelSpec, ParamMeta

# Ground-truth values for the three spiking regimes; fixed parameters are shared.
REGIMES = {
    "hopf": {
        "phi": 0.04, "g_Ca": 4.0, "V3": 2.0, "V4": 30.0,
        "g_K": 8.0, "g_L": 2.0, "V1": -1.2, "V2": 18.0,
    },
    "snic": {
        "phi": 0.067, "g_Ca": 4.0, "V3": 12.0, "V4": 17.4,
        "g_K": 8.0, "g_L": 2.0, "V1": -1.2, "V2": 18.0,
    },
    "homoclinic": {
        "phi": 0.23, "g_Ca": 4.0, "V3": 12.0, "V4": 17.4,
        "g_K": 8.0, "g_L": 2.0, "V1": -1.2, "V2": 18.0,
    },
}

SML_PARAMS = (
    ParamMeta("g_L", 2.0, "positive", "estimated", "model conductance"),
    ParamMeta("g_K", 8.0, "positive", "estimated", "model conductance"),
    ParamMeta("g_Ca", 4.0, "positive", "estimated", "model conductance"),
    ParamMeta("phi", 0.04, "positive", "estimated", "dimensionless"),
    ParamMeta("V1", -1.2, "negative", "estimated", "mV"),
    ParamMeta("V2", 18.0, "positive", "estimated", "mV"),
    ParamMeta("V3", 2.0, "positive", "estimated", "mV"),
    ParamMeta("V4", 30.0, "positive", "estimated", "mV"),
    ParamMeta("C_m", 20.0, "positive", "fixed", "model capacitance"),
    ParamMeta("E_L", -60.0, "free", "fixed", "mV"),
    ParamMeta("E_K", -84.0, "free", "fixed", "mV"),
    ParamMeta("E_Ca", 120.0, "free", "fixed", "mV"),
    ParamMeta("I_app", 100.0, "free", "fixed", "model current"),
)


class SpikingMorrisLecar(ModelSpec):
    """Two-dimensional Morris-Lecar model with instantaneous Ca activation."""

    id = "sml"
    state_names = ("V", "n")
    param_meta = SML_PARAMS
    output_maps = {"V": "identity", "n": "sigmoid"}
    state_scales = (100.0, 1.0)
    state_bounds = ((-100.0, 60.0), (0.0, 1.0))

    # auxiliary functions

    def m_inf(self, V: Any, p: Mapping[str, Any]) -> Any:
        return 0.5 * (1.0 + np.tanh((V - p["V1"]) / p["V2"]))

    def n_inf(self, V: Any, p: Mapping[str, Any]) -> Any:
        return 0.5 * (1.0 + np.tanh((V - p["V3"]) / p["V4"]))

    def tau_n(self, V: Any, p: Mapping[str, Any]) -> Any:
        return 1.0 / np.cosh((V - p["V3"]) / (2.0 * p["V4"]))

    def i_ca(self, V: Any, p: Mapping[str, Any]) -> Any:
        return p["g_Ca"] * self.m_inf(V, p) * (V - p["E_Ca"])

    def ionic_current(self, V: Any, n: Any, p: Mapping[str, Any]) -> Any:
        """Leak + delayed-rectifier K + Ca currents."""
        return (
            p["g_L"] * (V - p["E_L"])
            + p["g_K"] * n * (V - p["E_K"])
            + self.i_ca(V, p)
        )

    def dn_dt(self, V: Any, n: Any, p: Mapping[str, Any]) -> Any:
        return p["phi"] * (self.n_inf(V, p) - n) / self.tau_n(V, p)

    def _rhs(self, state: Sequence[Any], p: Mapping[str, Any]) -> List[Any]:
        V, n = state
        dV = (p["I_app"] - self.ionic_current(V, n, p)) / p["C_m"]
        return [dV, self.dn_dt(V, n, p)]

    def quasi_steady_state(self, V: Any, p: Mapping[str, Any]) -> List[Any]:
        return [V, self.n_inf(V, p)]
