"""Estimators: fixed-effects OLS, heteroskedastic and two-threshold probit,
decision-based split effects with leave-one-out classification, and
threshold-difference curves."""

from .ols import (
    FitResult,
    FixedEffectsOLS,
    RankDeficiencyError,
    cluster_vcov,
    ivy_scaled_ratio,
    robust_vcov,
    write_fit,
)
from .hetprobit import (
    ConvergenceError,
    HeteroskedasticProbit,
    IdentificationError,
    het_probit_loglik,
    het_probit_score,
    marginal_decomposition,
)
from .twothreshold import TwoThresholdProbit, two_threshold_loglik
from .loo import LeaveOneOutEffects, LooResult, decision_slopes
from .curve import CdfDifferenceCurve, CurveResult, write_curve

__all__ = [
    "FitResult",
    "FixedEffectsOLS",
    "RankDeficiencyError",
    "cluster_vcov",
    "ivy_scaled_ratio",
    "robust_vcov",
    "write_fit",
    "ConvergenceError",
    "HeteroskedasticProbit",
    "IdentificationError",
    "het_probit_loglik",
    "het_probit_score",
    "marginal_decomposition",
    "TwoThresholdProbit",
    "two_threshold_loglik",
    "LeaveOneOutEffects",
    "LooResult",
    "decision_slopes",
    "CdfDifferenceCurve",
    "CurveResult",
    "write_curve",
]
