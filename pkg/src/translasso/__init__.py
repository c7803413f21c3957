"""Lasso, Adaptive Lasso, Transfer Lasso and Adaptive Transfer Lasso.

One coordinate-descent solver covers the whole anchored weighted-L1 family
``(1/n)||y - Xb||^2 + (lam/n) sum v_j|b_j| + (eta/n) sum w_j|b_j - b~_j|``.
"""

from .datagen import (
    ParameterError,
    RegressionProblem,
    SourceSummary,
    TrueModel,
    default_truth,
    make_source_target,
    sample_problem,
    sample_source_summary,
)
from .initial import InitialEstimatorSpec, estimate_initial
from .metrics import evaluate, invariant_ratio, loglog_slope, selection_scores
from .selection import MethodConfig, build_penalty, cross_validate, search_space
from .solver import FitResult, PenaltySpec, fit, kkt_certificate, lambda_max, prox_two_kink

__version__ = "0.1.0"

__all__ = [
    "FitResult", "InitialEstimatorSpec", "MethodConfig", "ParameterError", "PenaltySpec",
    "RegressionProblem", "SourceSummary", "TrueModel", "build_penalty", "cross_validate",
    "default_truth", "estimate_initial", "evaluate", "fit", "invariant_ratio", "kkt_certificate",
    "lambda_max", "loglog_slope", "make_source_target", "prox_two_kink", "sample_problem",
    "sample_source_summary", "search_space", "selection_scores",
]
