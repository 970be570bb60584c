"""Estimate checks, constant formulas and interpolation-constant estimation."""

from ..stencils import sobolev_norm
from .checks import (
    CheckResult,
    DependenceReport,
    continuous_dependence,
    estimate_checks,
    make_check,
    sup_bound_check,
)
from .constants import (
    ConstantsReport,
    derivative_exponent,
    estimate_c_star,
    estimate_k_constants,
    gn_ratio,
)
from .formulas import (
    DEFAULT_SAFETY,
    EstimateReport,
    Threshold,
    ThresholdUndefined,
    beta,
    c1_constant,
    c2_constant,
    c3_constant,
    critical_threshold,
    estimate_report,
    gamma_l,
    lipschitz_constant,
    threshold_case,
    uniqueness_threshold,
)

__all__ = [
    "CheckResult",
    "ConstantsReport",
    "DEFAULT_SAFETY",
    "DependenceReport",
    "EstimateReport",
    "Threshold",
    "ThresholdUndefined",
    "beta",
    "c1_constant",
    "c2_constant",
    "c3_constant",
    "continuous_dependence",
    "critical_threshold",
    "derivative_exponent",
    "estimate_c_star",
    "estimate_checks",
    "estimate_k_constants",
    "estimate_report",
    "gamma_l",
    "gn_ratio",
    "lipschitz_constant",
    "make_check",
    "sobolev_norm",
    "sup_bound_check",
    "threshold_case",
    "uniqueness_threshold",
]
