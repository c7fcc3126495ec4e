"""Base class for conductance-based model specifications."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import JACOBIAN_REL_STEP, V_INIT
from errors import ContractViolation, NonFiniteInput

log = logging.getLogger(__name__)

ROLE_FILTERS = ("estimated", "fixed", "all")
SIGNS = ("positive", "negative", "free")


@dataclass(frozen=True)
class ParamMeta:
    """Declared metadata of one model parameter."""

    name: str
    default: float
    sign: str = "free"          # positive | negative | free
    role: str = "fixed"         # estimated | fixed
    unit: str = ""


class ModelParams(Mapping[str, float]):
    """
    Immutable, validated parameter set for one ModelSpec.

    Every declared name is present exactly once and sign-constrained
    parameters respect their declared sign.
    """

    __slots__ = ("_spec_id", "_values")

    def __init__(self, spec: "ModelSpec", values: Mapping[str, float]):
        declared = spec.param_names("all")
        unknown = sorted(set(values) - set(declared))
        if unknown:
            raise ContractViolation(f"{spec.id}: unknown parameter(s) {unknown}")
        missing = [name for name in declared if name not in values]
        if missing:
            raise ContractViolation(f"{spec.id}: missing parameter(s) {missing}")

        clean = {}
        for meta in spec.param_meta:
            v = float(values[meta.name])
            if not np.isfinite(v):
                raise NonFiniteInput(f"{spec.id}: parameter {meta.name} is {v}")
            if meta.sign == "positive" and not v > 0:
                raise ContractViolation(f"{spec.id}: {meta.name} must be > 0, got {v}")
            if meta.sign == "negative" and not v < 0:
                raise ContractViolation(f"{spec.id}: {meta.name} must be < 0, got {v}")
            clean[meta.name] = v

        self._spec_id = spec.id
        self._values = clean

    @property
    def spec_id(self) -> str:
        return self._spec_id

    def __getitem__(self, key: str) -> float:
        return self._values[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __repr__(self):
        body = ", ".join(f"{k}={v!r}" for k, v in self._values.items())
        return f"ModelParams({self._spec_id}: {body})"

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return self._spec_id == other._spec_id and self._values == other._values

    def __hash__(self):
        return hash((self._spec_id, tuple(self._values.items())))

    def as_dict(self) -> Dict[str, float]:
        return dict(self._values)

    def replace(self, spec: "ModelSpec", **changes: float) -> "ModelParams":
        """Return a copy with some values changed."""
        values = dict(self._values)
        values.update(changes)
        return ModelParams(spec, values)


class ModelSpec:
    """
    Base class for a neuron model's vector field and metadata.

    Subclasses declare ``id``, ``state_names``, ``param_meta`` and
    ``output_maps`` and implement ``_rhs``. The vector field must accept
    state components that are floats, numpy arrays or Dual numbers, so
    one definition serves simulation, batched training residuals and
    exact parameter derivatives.
    """

    id: str = ""
    state_names: Tuple[str, ...] = ()
    param_meta: Tuple[ParamMeta, ...] = ()
    observed_index: int = 0
    output_maps: Mapping[str, str] = {}
    state_scales: Tuple[float, ...] = ()
    state_bounds: Tuple[Tuple[float, float], ...] = ()

    @property
    def dim(self) -> int:
        return len(self.state_names)

    def param_names(self, role_filter: str = "all") -> List[str]:
        """Parameter names in declaration order, filtered by role."""
        if role_filter not in ROLE_FILTERS:
            raise ContractViolation(f"unknown role filter {role_filter!r}")
        return [
            m.name for m in self.param_meta
            if role_filter == "all" or m.role == role_filter
        ]

    def meta(self, name: str) -> ParamMeta:
        for m in self.param_meta:
            if m.name == name:
                return m
        raise ContractViolation(f"{self.id}: unknown parameter {name!r}")

    def default_params(self) -> ModelParams:
        return ModelParams(self, {m.name: m.default for m in self.param_meta})

    def make_params(self, values: Mapping[str, float], base: Optional[ModelParams] = None) -> ModelParams:
        """Build params from a partial mapping laid over ``base`` (or the defaults)."""
        merged = (base or self.default_params()).as_dict()
        merged.update(values)
        return ModelParams(self, merged)

    def rhs(self, state: Sequence[Any], p: Mapping[str, Any]) -> List[Any]:
        """Vector field on raw components; no validation."""
        return self._rhs(state, p)

    def _rhs(self, state: Sequence[Any], p: Mapping[str, Any]) -> List[Any]:
        """
        Compute dX/dt component-wise.

        Must be implemented by subclasses.

        Args:
            state: One entry per state variable (float, ndarray or Dual)
            p: Parameter mapping (float, ndarray or Dual values)

        Returns:
            List of derivatives, one per state variable
        """
        raise NotImplementedError("Subclasses must implement _rhs()")

    def quasi_steady_state(self, V: Any, p: Mapping[str, Any]) -> List[Any]:
        """
        State with every non-voltage variable at its V-conditional rest value.

        Used to seed equilibrium searches; the default keeps only V.
        """
        return [V]

    def initial_state(self, params: ModelParams) -> np.ndarray:
        """Standard initial condition: V = V_INIT, gating at steady state."""
        return np.array(self.quasi_steady_state(V_INIT, params), dtype=float)


def _check_state(spec: ModelSpec, state: Any) -> np.ndarray:
    x = np.asarray(state, dtype=float)
    if x.shape != (spec.dim,):
        raise ContractViolation(
            f"{spec.id}: state must have shape ({spec.dim},), got {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput(f"{spec.id}: non-finite state {x}")
    return x


def _check_params(spec: ModelSpec, params: ModelParams) -> None:
    if not isinstance(params, ModelParams) or params.spec_id != spec.id:
        raise ContractViolation(f"{spec.id}: params belong to another model")


def eval_vector_field(spec: ModelSpec, state: Any, params: ModelParams) -> np.ndarray:
    """
    Evaluate dX/dt at one state.

    Args:
        spec: Model specification
        state: State vector of length spec.dim
        params: Complete parameter set of this model

    Returns:
        dX/dt as a float array
    """
    x = _check_state(spec, state)
    _check_params(spec, params)
    return np.array(spec.rhs(list(x), params), dtype=float)


def eval_jacobian(spec: ModelSpec, state: Any, params: ModelParams) -> np.ndarray:
    """
    Jacobian dF_i/dX_j by central differences.

    Step for column j is JACOBIAN_REL_STEP * max(1, |X_j|).
    """
    x = _check_state(spec, state)
    _check_params(spec, params)
    d = spec.dim
    jac = np.empty((d, d))
    for j in range(d):
        h = JACOBIAN_REL_STEP * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        fp = np.array(spec.rhs(list(xp), params), dtype=float)
        fm = np.array(spec.rhs(list(xm), params), dtype=float)
        jac[:, j] = (fp - fm) / (2.0 * h)
    return jac


def param_vector(spec: ModelSpec, params: ModelParams, role_filter: str = "estimated") -> np.ndarray:
    """Flatten params in declaration order."""
    _check_params(spec, params)
    return np.array([params[name] for name in spec.param_names(role_filter)], dtype=float)


def param_from_vector(
    spec: ModelSpec,
    vector: Sequence[float],
    role_filter: str = "estimated",
    base: Optional[ModelParams] = None,
) -> ModelParams:
    """Inverse of param_vector; names not covered by the filter come from ``base``."""
    names = spec.param_names(role_filter)
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (len(names),):
        raise ContractViolation(
            f"{spec.id}: expected {len(names)} values for role {role_filter!r}, got {vector.shape}"
        )
    return spec.make_params(dict(zip(names, vector.tolist())), base=base)
