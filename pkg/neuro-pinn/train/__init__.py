"""Two-stage parameter estimation and its building blocks."""

from train.balance import BalanceState, update_balance
from train.checkpoint import load_checkpoint, save_checkpoint
from train.metrics import normalized_l2, param_rel_error, param_rel_errors
from train.optim import AdamState, LrSchedule, adam_step
from train.params import ConstrainedParams, initial_guess
from train.residual import GradLayout, ResidualEval, residual_losses, residual_values
from train.stages import (
    EstimationProblem,
    EstimationResult,
    LossHistory,
    Stage1Settings,
    Stage2Settings,
    TrainHooks,
    assess,
    build_nets,
    pretrain_voltage,
    reconstruct,
    run_estimation,
    run_physics_stage,
)

__all__ = [
    "AdamState",
    "BalanceState",
    "ConstrainedParams",
    "EstimationProblem",
    "EstimationResult",
    "GradLayout",
    "LossHistory",
    "LrSchedule",
    "ResidualEval",
    "Stage1Settings",
    "Stage2Settings",
    "TrainHooks",
    "adam_step",
    "assess",
    "build_nets",
    "initial_guess",
    "load_checkpoint",
    "normalized_l2",
    "param_rel_error",
    "param_rel_errors",
    "pretrain_voltage",
    "reconstruct",
    "residual_losses",
    "residual_values",
    "run_estimation",
    "run_physics_stage",
    "save_checkpoint",
    "update_balance",
]
