"""Sign-constrained reparameterization of the estimated parameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

import numpy as np

from errors import ContractViolation
from models import ModelParams, ModelSpec, load_preset


@dataclass
class ConstrainedParams:
    """
    Unconstrained z mapped to lambda_j = sign_j * exp(z_j).

    The mapping is a smooth bijection onto the open orthant given by the
    declared signs, so |lambda_j| > 0 at every iteration.
    """

    names: Tuple[str, ...]
    signs: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        self.signs = np.asarray(self.signs, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        if not (len(self.names) == self.signs.size == self.z.size):
            raise ContractViolation("names, signs and z must have equal length")
        if not np.all(np.abs(self.signs) == 1.0):
            raise ContractViolation("signs must be +1 or -1")

    @property
    def lam(self) -> np.ndarray:
        return self.signs * np.exp(self.z)

    def dlam_dz(self) -> np.ndarray:
        """d lambda_j / d z_j (equal to lambda_j)."""
        return self.lam

    def values(self) -> dict:
        return dict(zip(self.names, self.lam.tolist()))

    def to_params(self, spec: ModelSpec, base: Optional[ModelParams] = None) -> ModelParams:
        """Estimated values laid over ``base`` (fixed parameters)."""
        return spec.make_params(self.values(), base=base)

    def copy(self) -> "ConstrainedParams":
        return ConstrainedParams(self.names, self.signs.copy(), self.z.copy())

    @classmethod
    def from_values(cls, spec: ModelSpec, values: Mapping[str, float]) -> "ConstrainedParams":
        """z_j = ln|lambda_j| with each sign taken from the declaration."""
        names = tuple(spec.param_names("estimated"))
        signs, z = [], []
        for name in names:
            v = float(values[name])
            if v == 0 or not np.isfinite(v):
                raise ContractViolation(f"initial value of {name} must be finite and non-zero")
            declared = spec.meta(name).sign
            sign = {"positive": 1.0, "negative": -1.0}.get(declared, np.sign(v))
            if np.sign(v) != sign:
                raise ContractViolation(f"initial value of {name} violates its {declared} sign")
            signs.append(sign)
            z.append(np.log(abs(v)))
        return cls(names, np.array(signs), np.array(z))

    @classmethod
    def ones(cls, spec: ModelSpec) -> "ConstrainedParams":
        """Non-informative start: every |lambda_j| = 1 with the declared sign."""
        values = {}
        for name in spec.param_names("estimated"):
            values[name] = -1.0 if spec.meta(name).sign == "negative" else 1.0
        return cls.from_values(spec, values)


def initial_guess(spec: ModelSpec, init: str) -> ConstrainedParams:
    """Starting point: "ones" or the values of a regime preset of this model."""
    if init == "ones":
        return ConstrainedParams.ones(spec)
    return ConstrainedParams.from_values(spec, load_preset(init, spec.id))
