"""Spectral estimation of Levy densities with bootstrap uniform confidence bands."""

from .bandwidth import (
    BandwidthSelection,
    SelectionConfig,
    SelectionFailed,
    distance_profile,
    select_bandwidth,
)
from .bootstrap import (
    BandResult,
    ConfidenceBand,
    WeightMatrix,
    build_band,
    compute_band,
    critical_value,
    eb_critical_value,
    khat_eval,
    mb_critical_value,
    sup_statistic,
    variance_fn,
)
from .char_fn import CfEvaluation, analytic_cf, ecf_eval, frequency_grid
from .errors import (
    CharFnTooSmall,
    LevyBandError,
    ParameterError,
    QuadratureResidual,
    QuadratureResolution,
    ZeroVariance,
)
from .estimator import (
    DensityEstimate,
    EstimatorConfig,
    Sigma2Mode,
    direct_kernel_estimate,
    jr_sigma2,
    pv_sigma2,
    spectral_estimate,
    trv_sigma2,
)
from .harness import (
    CoverageReport,
    ExperimentConfig,
    emit_figure_data,
    mean_width,
    run_coverage_experiment,
)
from .kernel import DEFAULT_KERNEL, KernelSpec, kernel_w, phi_w
from .levy_models import IncrementSample, LevyModel, parse_model, simulate_increments, true_density

__version__ = "0.1.0"
