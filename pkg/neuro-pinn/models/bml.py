"""Bursting Morris-Lecar model (V, n, Ca)."""

from typing import Any, List, Mapping, Sequence

import numpy as np

from config import CA_INIT
from models.base import ModelParams, ParamMeta
from models.sml import SML_PARAMS, SpikingMorrisLecar

REGIMES = {
    "square-wave": {
        "phi": 0.23, "g_Ca": 4.0, "V3": 12.0, "V4": 17.4,
        "g_K": 8.0, "g_L": 2.0, "V1": -1.2, "V2": 18.0,
        "g_KCa": 0.25, "I_app": 45.0,
    },
    "elliptic": {
        "phi": 0.04, "g_Ca": 4.4, "V3": 2.0, "V4": 30.0,
        "g_K": 8.0, "g_L": 2.0, "V1": -1.2, "V2": 18.0,
        "g_KCa": 0.75, "I_app": 120.0,
    },
}

_ESTIMATED = tuple(m for m in SML_PARAMS if m.role == "estimated")
_FIXED = tuple(m for m in SML_PARAMS if m.role == "fixed")

BML_PARAMS = _ESTIMATED + (
    ParamMeta("g_KCa", 0.25, "positive", "estimated", "model conductance"),
) + _FIXED + (
    ParamMeta("eps", 0.005, "positive", "fixed", "dimensionless"),
    ParamMeta("mu", 0.02, "positive", "fixed", "dimensionless"),
)


class BurstingMorrisLecar(SpikingMorrisLecar):
    """Morris-Lecar with slow calcium and a Ca-activated K current."""

    id = "bml"
    state_names = ("V", "n", "Ca")
    param_meta = BML_PARAMS
    output_maps = {"V": "identity", "n": "sigmoid", "Ca": "softplus"}
    state_scales = (100.0, 1.0, 1.0)
    state_bounds = ((-100.0, 60.0), (0.0, 1.0), (0.0, 10.0))

    def z(self, Ca: Any) -> Any:
        """Saturating K_Ca activation Ca / (Ca + 1)."""
        return Ca / (Ca + 1.0)

    def _rhs(self, state: Sequence[Any], p: Mapping[str, Any]) -> List[Any]:
        V, n, Ca = state
        i_kca = p["g_KCa"] * self.z(Ca) * (V - p["E_K"])
        dV = (p["I_app"] - self.ionic_current(V, n, p) - i_kca) / p["C_m"]
        dCa = p["eps"] * (-p["mu"] * self.i_ca(V, p) - Ca)
        return [dV, self.dn_dt(V, n, p), dCa]

    def quasi_steady_state(self, V: Any, p: Mapping[str, Any]) -> List[Any]:
        return [V, self.n_inf(V, p), -p["mu"] * self.i_ca(V, p)]

    def initial_state(self, params: ModelParams) -> np.ndarray:
        state = super().initial_state(params)
        state[2] = CA_INIT
        return state
