"""Exception hierarchy shared by every module.

Each class carries the process exit code main.py maps it to.
"""

from typing import Optional


class PinnError(Exception):
    """Base class for all neuro-pinn failures."""

    exit_code = 1


class ConfigError(PinnError):
    """Bad config document, unknown model/regime, or invalid flag value."""

    exit_code = 2


class ContractViolation(PinnError, ValueError):
    """A caller broke an operation's precondition (shape, range, name)."""

    exit_code = 2


class NumericError(PinnError):
    """Base for numeric failures."""

    exit_code = 3


class NonFiniteInput(NumericError):
    """NaN or inf handed to a model evaluation."""


class IntegrationBlowup(NumericError):
    """The integrator produced a non-finite state."""

    def __init__(self, step: int, message: Optional[str] = None):
        self.step = step
        super().__init__(message or f"non-finite state at integration step {step}")


class NonFiniteResidual(NumericError):
    """An ODE residual evaluated to NaN or inf."""

    def __init__(self, equation: str, t: float):
        self.equation = equation
        self.t = t
        super().__init__(f"non-finite residual of d{equation}/dt at t={t:g} ms")


class NoSignal(NumericError):
    """Spectrum carries no energy outside the DC bin."""


class UndefinedMetric(NumericError):
    """Metric denominator is zero."""


class ContinuationFailure(NumericError):
    """No equilibrium could be located anywhere in the requested range."""


class TrainingDiverged(PinnError):
    """Loss or residual became non-finite during training."""

    exit_code = 4

    def __init__(
        self,
        stage: str,
        iteration: int,
        equation: Optional[str] = None,
        t: Optional[float] = None,
    ):
        self.stage = stage
        self.iteration = iteration
        self.equation = equation
        self.t = t
        where = f"{stage} iteration {iteration}"
        if equation is not None:
            where += f", equation d{equation}/dt"
        if t is not None:
            where += f" at t={t:g} ms"
        super().__init__(f"training diverged: non-finite loss ({where})")
