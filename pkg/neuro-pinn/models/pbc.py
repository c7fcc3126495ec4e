"""Pre-Botzinger complex respiratory neuron model (V, n, h)."""

from typing import Any, List, Mapping, Sequence

import numpy as np

from models.base import ModelSpec, ParamMeta

REGIMES = {
    "pbc-default": {
        "g_Na": 28.0, "g_K": 11.2, "g_L": 2.3, "g_NaP": 2.0,
        "V_Na": 50.0, "V_K": -85.0, "V_L": -58.0,
    },
}

PBC_PARAMS = (
    ParamMeta("g_NaP", 2.0, "positive", "estimated", "nS"),
    ParamMeta("g_L", 2.3, "positive", "estimated", "nS"),
    ParamMeta("g_K", 11.2, "positive", "estimated", "nS"),
    ParamMeta("g_Na", 28.0, "positive", "estimated", "nS"),
    ParamMeta("V_L", -58.0, "negative", "estimated", "mV"),
    ParamMeta("V_K", -85.0, "negative", "estimated", "mV"),
    ParamMeta("V_Na", 50.0, "positive", "estimated", "mV"),
    ParamMeta("C_m", 21.0, "positive", "fixed", "pF"),
    ParamMeta("I_app", 0.0, "free", "fixed", "pA"),
    ParamMeta("theta_m", -34.0, "free", "fixed", "mV"),
    ParamMeta("sigma_m", -5.0, "free", "fixed", "mV"),
    ParamMeta("theta_mp", -40.0, "free", "fixed", "mV"),
    ParamMeta("sigma_mp", -6.0, "free", "fixed", "mV"),
    ParamMeta("theta_n", -29.0, "free", "fixed", "mV"),
    ParamMeta("sigma_n", -4.0, "free", "fixed", "mV"),
    ParamMeta("theta_h", -48.0, "free", "fixed", "mV"),
    ParamMeta("sigma_h", 5.0, "free", "fixed", "mV"),
    ParamMeta("tau_n_bar", 10.0, "positive", "fixed", "ms"),
    ParamMeta("tau_h_bar", 10_000.0, "positive", "fixed", "ms"),
)


def x_inf(V: Any, theta: Any, sigma: Any) -> Any:
    """Logistic steady-state activation."""
    return 1.0 / (1.0 + np.exp((V - theta) / sigma))


def tau_x(V: Any, tau_bar: Any, theta: Any, sigma: Any) -> Any:
    return tau_bar / np.cosh((V - theta) / (2.0 * sigma))


class PreBotzinger(ModelSpec):
    """Butera-type pBC neuron: fast Na/K spiking, slow NaP inactivation h."""

    id = "pbc"
    state_names = ("V", "n", "h")
    param_meta = PBC_PARAMS
    output_maps = {"V": "identity", "n": "sigmoid", "h": "sigmoid"}
    state_scales = (100.0, 1.0, 1.0)
    state_bounds = ((-100.0, 60.0), (0.0, 1.0), (0.0, 1.0))

    def m_inf(self, V: Any, p: Mapping[str, Any]) -> Any:
        return x_inf(V, p["theta_m"], p["sigma_m"])

    def mp_inf(self, V: Any, p: Mapping[str, Any]) -> Any:
        return x_inf(V, p["theta_mp"], p["sigma_mp"])

    def n_inf(self, V: Any, p: Mapping[str, Any]) -> Any:
        return x_inf(V, p["theta_n"], p["sigma_n"])

    def h_inf(self, V: Any, p: Mapping[str, Any]) -> Any:
        return x_inf(V, p["theta_h"], p["sigma_h"])

    def tau_n(self, V: Any, p: Mapping[str, Any]) -> Any:
        return tau_x(V, p["tau_n_bar"], p["theta_n"], p["sigma_n"])

    def tau_h(self, V: Any, p: Mapping[str, Any]) -> Any:
        return tau_x(V, p["tau_h_bar"], p["theta_h"], p["sigma_h"])

    def _rhs(self, state: Sequence[Any], p: Mapping[str, Any]) -> List[Any]:
        V, n, h = state
        i_l = p["g_L"] * (V - p["V_L"])
        i_k = p["g_K"] * n ** 4 * (V - p["V_K"])
        i_na = p["g_Na"] * self.m_inf(V, p) ** 3 * (1.0 - n) * (V - p["V_Na"])
        i_nap = p["g_NaP"] * self.mp_inf(V, p) * h * (V - p["V_Na"])
        dV = (p["I_app"] - i_l - i_k - i_na - i_nap) / p["C_m"]
        dn = (self.n_inf(V, p) - n) / self.tau_n(V, p)
        dh = (self.h_inf(V, p) - h) / self.tau_h(V, p)
        return [dV, dn, dh]

    def quasi_steady_state(self, V: Any, p: Mapping[str, Any]) -> List[Any]:
        return [V, self.n_inf(V, p), self.h_inf(V, p)]
