"""Heat traces, diagonal kernels, power-law fits and checks of eigenvalue bounds."""

from .checks import (
    ANCHORS,
    CheckRecord,
    ConditionARefused,
    VerificationReport,
    check_thm1_uniform_bound,
    check_thm2,
    check_thm4,
    check_thm5,
    growth_check,
    grushin_log_bound,
    hansson_laptev_bound,
    heisenberg_explicit_lower,
    kernel_slope_check,
    stabilizes,
    supnorm_growth,
    tauberian_consistency,
    trace_check,
    weyl_check,
)
from .heat import (
    HeatTrace,
    KernelSamples,
    WeylFit,
    WindowError,
    diagonal_kernel,
    growth_exponent,
    heat_sum,
    heat_trace,
    kernel_exponent_fit,
    kernel_trace_identity,
    normalized_modes,
    trace_exponent_fit,
    trace_window,
    weyl_coefficient_fixed,
    weyl_fit,
)
from .heisenberg import alpha_n, c_n, explicit_sum_constant, hansson_laptev_constant
from .quadrature import QuadratureError, gauss_kronrod

__all__ = [
    "ANCHORS",
    "CheckRecord",
    "ConditionARefused",
    "HeatTrace",
    "KernelSamples",
    "QuadratureError",
    "VerificationReport",
    "WeylFit",
    "WindowError",
    "alpha_n",
    "c_n",
    "check_thm1_uniform_bound",
    "check_thm2",
    "check_thm4",
    "check_thm5",
    "diagonal_kernel",
    "explicit_sum_constant",
    "gauss_kronrod",
    "growth_check",
    "growth_exponent",
    "grushin_log_bound",
    "hansson_laptev_bound",
    "hansson_laptev_constant",
    "heat_sum",
    "heat_trace",
    "heisenberg_explicit_lower",
    "kernel_exponent_fit",
    "kernel_slope_check",
    "kernel_trace_identity",
    "normalized_modes",
    "stabilizes",
    "supnorm_growth",
    "tauberian_consistency",
    "trace_check",
    "trace_exponent_fit",
    "trace_window",
    "weyl_check",
    "weyl_coefficient_fixed",
    "weyl_fit",
]
