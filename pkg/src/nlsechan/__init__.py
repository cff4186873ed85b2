"""Spectral efficiency of the nonlinear Schrodinger fiber channel.

Analytic large-SNR results (Shannon baseline, leading nonlinear correction
with dispersion, exact nondispersive per-sample result), the special
function behind the dispersion penalty, a stochastic split-step simulator,
and Monte-Carlo mutual-information estimators that cross-validate the
analytics.
"""

from ._kernels import BACKEND
from .channels import (
    NoBracketError,
    QuadratureError,
    SEPoint,
    SnrPoint,
    applicability_bound,
    crossover_snr,
    dispersive_se,
    evaluate_se,
    nondispersive_penalty,
    nondispersive_se_exact,
    nondispersive_se_expansion,
    shannon_se,
)
from .mi_mc import (
    DegenerateProposalWarning,
    MCEstimate,
    PerSampleChannel,
    conditional_pdf,
    estimate_mi,
    exact_map,
    information_density,
    log_conditional_pdf,
    sample_conditional,
    simulate_sample,
)
from .nlse import (
    ComplexField,
    NoiseStats,
    PropagationConfig,
    SpectralGrid,
    StepInstabilityError,
    ensemble_noise_stats,
    make_grid,
    phase_mismatch_kernel,
    phi_perturbative,
    propagate,
    sample_gaussian_input,
)
from .params import (
    ConfigError,
    DimensionlessChannel,
    ParameterError,
    PhysicalChannel,
    derive_dimensionless,
    gamma_tilde_of_snr,
    load_config,
    standard_link,
)
from .specfun import (
    DomainError,
    EvaluationBudgetError,
    GEval,
    OracleError,
    PrecisionOverflowError,
    f_kernel,
    f_kernel_oracle,
    g_asymptotic,
    g_cubature,
    g_discrete,
    g_eval,
    g_series,
    green0,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ComplexField",
    "ConfigError",
    "DegenerateProposalWarning",
    "DimensionlessChannel",
    "DomainError",
    "EvaluationBudgetError",
    "GEval",
    "MCEstimate",
    "NoBracketError",
    "NoiseStats",
    "OracleError",
    "ParameterError",
    "PerSampleChannel",
    "PhysicalChannel",
    "PrecisionOverflowError",
    "PropagationConfig",
    "QuadratureError",
    "SEPoint",
    "SnrPoint",
    "SpectralGrid",
    "StepInstabilityError",
    "applicability_bound",
    "conditional_pdf",
    "crossover_snr",
    "derive_dimensionless",
    "dispersive_se",
    "ensemble_noise_stats",
    "estimate_mi",
    "evaluate_se",
    "exact_map",
    "f_kernel",
    "f_kernel_oracle",
    "g_asymptotic",
    "g_cubature",
    "g_discrete",
    "g_eval",
    "g_series",
    "gamma_tilde_of_snr",
    "green0",
    "information_density",
    "load_config",
    "log_conditional_pdf",
    "make_grid",
    "nondispersive_penalty",
    "nondispersive_se_exact",
    "nondispersive_se_expansion",
    "phase_mismatch_kernel",
    "phi_perturbative",
    "propagate",
    "sample_conditional",
    "sample_gaussian_input",
    "shannon_se",
    "simulate_sample",
    "standard_link",
]
