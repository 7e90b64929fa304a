"""Adaptive knowledge distillation at desk scale.

A small, verifiable stack: a reverse-mode autodiff core over dense 2-D
tensors, the distillation loss family with fixed/learnable/dynamic weighting,
class-wise attention reweighting of the teacher distribution, MLP models with
SGD/Adam, synthetic datasets, and a config-driven experiment harness.
"""

from .alpha import (
    AlphaTrace,
    DynamicPolicy,
    FixedPolicy,
    LearnablePolicy,
    dynamic_alpha,
    fixed_alpha,
    learnable_alpha,
    prob_discrepancy,
)
from .cam import CamOutput, CamParams, cam_apply, cam_attention, cam_kd_loss, cam_reweight, init_cam
from .config import ExperimentConfig, load_config, parse_config
from .data import Dataset, load_delimited, make_blobs, make_rings, standardize
from .errors import (
    AkdError,
    CheckpointError,
    ConfigError,
    ContractError,
    DataError,
    NumericError,
    ParameterError,
    ParseError,
    ShapeError,
)
from .gradcheck import run_gradient_suite
from .harness import ComparisonReport, RunResult, compare_methods, run_experiment
from .losses import LossBreakdown, combine, cross_entropy, kd_kl, log_softmax
from .metrics import MetricsRow, read_metrics
from .models import AdamOptimizer, MlpModel, SgdOptimizer, accuracy, make_optimizer, train_teacher
from .plots import emit_plots
from .tensor import Graph, ProbBatch, Tensor, grad_check, sigmoid_values, softmax_values

__version__ = "0.1.0"

__all__ = [
    "AdamOptimizer",
    "AkdError",
    "AlphaTrace",
    "CamOutput",
    "CamParams",
    "CheckpointError",
    "ComparisonReport",
    "ConfigError",
    "ContractError",
    "DataError",
    "Dataset",
    "DynamicPolicy",
    "ExperimentConfig",
    "FixedPolicy",
    "Graph",
    "LearnablePolicy",
    "LossBreakdown",
    "MetricsRow",
    "MlpModel",
    "NumericError",
    "ParameterError",
    "ParseError",
    "ProbBatch",
    "RunResult",
    "SgdOptimizer",
    "ShapeError",
    "Tensor",
    "accuracy",
    "cam_apply",
    "cam_attention",
    "cam_kd_loss",
    "cam_reweight",
    "combine",
    "compare_methods",
    "cross_entropy",
    "dynamic_alpha",
    "emit_plots",
    "fixed_alpha",
    "grad_check",
    "init_cam",
    "kd_kl",
    "learnable_alpha",
    "load_config",
    "load_delimited",
    "log_softmax",
    "make_blobs",
    "make_optimizer",
    "make_rings",
    "parse_config",
    "prob_discrepancy",
    "read_metrics",
    "run_experiment",
    "run_gradient_suite",
    "sigmoid_values",
    "softmax_values",
    "standardize",
    "train_teacher",
]
