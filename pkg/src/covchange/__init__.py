"""Detection of abrupt changes in multi-antenna channel covariance matrices.

The package provides the genie-aided LLR change detector with its exact
error analysis (generalized chi-squared), a condition-number-constrained ML
covariance estimator and shrinkage benchmark for unknown post-change
covariances, a one-ring channel simulator, and a reproducible Monte Carlo
experiment harness with a CLI.
"""

__version__ = "0.1.0"

from .channel import (
    ObservationSet,
    OneRingParams,
    PilotSet,
    SystemParams,
    make_dft_pilots,
    observe_and_estimate,
    one_ring_covariance,
    sample_channels,
    sample_observations,
)
from .detection import (
    Decision,
    LlrStatistic,
    decide,
    effective_covariance,
    llr_statistic,
    llr_statistic_from_observations,
    log_likelihood_sum,
    per_block_llrs,
    sample_covariance,
)
from .error_analysis import (
    DiscriminationPair,
    GchiSqSpec,
    calibrate_equal_error_threshold,
    discrimination,
    error_probabilities,
    gchi2_cdf,
    gchi2_sf,
)
from .estimation import (
    EigenSystem,
    MlEstimatorConfig,
    detect_unknown,
    estimate_covariance,
    ml_covariance,
    ml_objective,
    shrinkage_covariance,
    shrinkage_weight,
)
from .estimators import (
    ConditionConstrainedCovariance,
    CovarianceChangeDetector,
    ShrinkageCovariance,
)
from .exceptions import (
    CalibrationError,
    ConfigurationError,
    CovChangeError,
    DegenerateHypothesesError,
    DegenerateHypothesesWarning,
    ModelFidelityError,
    NumericalDomainError,
)
from .harness import (
    DetectorSpec,
    ExperimentConfig,
    FrameRecord,
    ResultRow,
    ThresholdPolicy,
    emit_results,
    read_results,
    run_genie_experiment,
    run_roc_experiment,
    simulate_frames,
)

__all__ = [
    "__version__",
    # channel
    "SystemParams",
    "OneRingParams",
    "PilotSet",
    "ObservationSet",
    "one_ring_covariance",
    "make_dft_pilots",
    "sample_channels",
    "observe_and_estimate",
    "sample_observations",
    # detection
    "LlrStatistic",
    "Decision",
    "sample_covariance",
    "effective_covariance",
    "log_likelihood_sum",
    "per_block_llrs",
    "llr_statistic",
    "llr_statistic_from_observations",
    "decide",
    # error analysis
    "DiscriminationPair",
    "GchiSqSpec",
    "discrimination",
    "gchi2_cdf",
    "gchi2_sf",
    "error_probabilities",
    "calibrate_equal_error_threshold",
    # estimation
    "MlEstimatorConfig",
    "EigenSystem",
    "ml_covariance",
    "ml_objective",
    "shrinkage_covariance",
    "shrinkage_weight",
    "estimate_covariance",
    "detect_unknown",
    # sklearn-style facade
    "ConditionConstrainedCovariance",
    "ShrinkageCovariance",
    "CovarianceChangeDetector",
    # harness
    "ThresholdPolicy",
    "DetectorSpec",
    "ExperimentConfig",
    "ResultRow",
    "FrameRecord",
    "run_genie_experiment",
    "run_roc_experiment",
    "simulate_frames",
    "emit_results",
    "read_results",
    # exceptions
    "CovChangeError",
    "ConfigurationError",
    "NumericalDomainError",
    "ModelFidelityError",
    "CalibrationError",
    "DegenerateHypothesesError",
    "DegenerateHypothesesWarning",
]
