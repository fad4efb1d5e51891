"""Pathwise, Malliavin (score-function) and variance-optimal hybrid gradient
estimators for Gaussian parametric expectations."""

from mhgrad.errors import InvalidInputError, OracleConsistencyError
from mhgrad.estimators import (
    BatchEstimate,
    GradPair,
    Mode,
    estimate_batch,
    malliavin_sample,
    pathwise_sample,
    sample_grad_pair,
)
from mhgrad.losses import LossFn, loss_grad, loss_value
from mhgrad.mixing import (
    LambdaBound,
    MixingStats,
    empirical_moments,
    hybrid_variance,
    lambda_bound,
    lambda_star,
    mixing_stats,
)
from mhgrad.models import (
    CoupledGaussian1D,
    DiagGaussian,
    Sample1D,
    log_density_1d,
    malliavin_weight_diag,
    normalized_weight_1d,
    path_jacobian_1d,
    sample_1d,
    score_1d,
)

__version__ = "0.1.0"

__all__ = [
    "BatchEstimate",
    "CoupledGaussian1D",
    "DiagGaussian",
    "GradPair",
    "InvalidInputError",
    "LambdaBound",
    "LossFn",
    "MixingStats",
    "Mode",
    "OracleConsistencyError",
    "Sample1D",
    "empirical_moments",
    "estimate_batch",
    "hybrid_variance",
    "lambda_bound",
    "lambda_star",
    "log_density_1d",
    "loss_grad",
    "loss_value",
    "malliavin_sample",
    "malliavin_weight_diag",
    "mixing_stats",
    "normalized_weight_1d",
    "path_jacobian_1d",
    "pathwise_sample",
    "sample_1d",
    "sample_grad_pair",
    "score_1d",
]
