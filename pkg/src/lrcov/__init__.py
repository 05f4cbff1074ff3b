"""Long-run covariance estimation for stationary functional time series.

The pipeline: curves observed on a shared uniform midpoint grid go through a
kernel lag-window estimator of the long-run covariance surface, bandwidth can
be chosen by a plug-in rule minimizing the asymptotic mean squared error, the
estimated surface is eigendecomposed into functional principal components
with normal-approximation confidence intervals, and a seeded Monte Carlo
harness checks the distributional approximations on processes whose long-run
covariance is known exactly.
"""

from .errors import (
    ConfigError,
    ContractViolationError,
    DataFormatError,
    DimensionError,
    KernelSpecError,
    LrcovError,
    SeparationError,
)
from .grid import (
    Curve,
    Grid,
    Quartic,
    Surface,
    apply_operator,
    curve_integral,
    fourier_basis,
    inner_product,
    l2_norm_curve,
    l2_norm_surface,
    surface_integral,
)
from .kernels import KERNEL_NAMES, KernelSpec, char_exponent_check, kernel_value, make_kernel
from .normal import normal_cdf, normal_pdf, normal_quantile
from .estimator import (
    AutocovSet,
    Bandwidth,
    BandwidthSelection,
    BiasKernel,
    CurveSample,
    LrcovEstimate,
    SpectralDensityEstimate,
    amse,
    asymptotic_covariance_L,
    autocov,
    bias_kernel,
    compute_autocov_set,
    estimate_lrcov,
    estimate_lrcov_naive,
    estimate_spectral_density,
    gamma1_norm_sq,
    optimal_bandwidth,
    plugin_bandwidth,
    project_psd,
)
from .fpca import (
    SEPARATION_RTOL,
    ConfidenceInterval,
    DeviationMsd,
    EigenSystem,
    EigenvalueLimit,
    align_sign,
    eigendecompose,
    eigenfunction_deviation_msd,
    eigenvalue_ci,
    eigenvalue_clt_params,
)
from .simulate import DgpSpec, GaussianNoiseSpec, TruthSet, generate, replication_rng, truth
from .mc import (
    BandwidthRule,
    BiasRateReport,
    ExperimentSpec,
    McReport,
    bias_rate_check,
    ks_distance,
    mse_curve,
    predicted_projection_variance,
    run_experiment,
    sample_moments,
)

__version__ = "0.1.0"

__all__ = [
    "LrcovError",
    "DataFormatError",
    "ConfigError",
    "DimensionError",
    "ContractViolationError",
    "KernelSpecError",
    "SeparationError",
    "Grid",
    "Curve",
    "Surface",
    "Quartic",
    "inner_product",
    "l2_norm_curve",
    "l2_norm_surface",
    "curve_integral",
    "surface_integral",
    "apply_operator",
    "fourier_basis",
    "KernelSpec",
    "KERNEL_NAMES",
    "make_kernel",
    "kernel_value",
    "char_exponent_check",
    "normal_pdf",
    "normal_cdf",
    "normal_quantile",
    "CurveSample",
    "Bandwidth",
    "AutocovSet",
    "LrcovEstimate",
    "SpectralDensityEstimate",
    "BiasKernel",
    "BandwidthSelection",
    "autocov",
    "compute_autocov_set",
    "estimate_lrcov",
    "estimate_lrcov_naive",
    "estimate_spectral_density",
    "bias_kernel",
    "asymptotic_covariance_L",
    "gamma1_norm_sq",
    "amse",
    "optimal_bandwidth",
    "plugin_bandwidth",
    "project_psd",
    "SEPARATION_RTOL",
    "EigenSystem",
    "EigenvalueLimit",
    "DeviationMsd",
    "ConfidenceInterval",
    "eigendecompose",
    "align_sign",
    "eigenvalue_clt_params",
    "eigenfunction_deviation_msd",
    "eigenvalue_ci",
    "GaussianNoiseSpec",
    "DgpSpec",
    "TruthSet",
    "generate",
    "truth",
    "replication_rng",
    "BandwidthRule",
    "ExperimentSpec",
    "McReport",
    "BiasRateReport",
    "run_experiment",
    "predicted_projection_variance",
    "bias_rate_check",
    "mse_curve",
    "ks_distance",
    "sample_moments",
    "__version__",
]
