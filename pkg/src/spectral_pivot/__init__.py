"""Inference for PCA spectral projectors at high effective rank.

The library implements the sample-split toolchain around empirical spectral
projectors of Gaussian sample covariance operators -- perturbation splits of
the projector error, cross-sample bias estimators, studentized pivots with
Cauchy-mixture limit laws, and confidence intervals -- together with a
reproducible Monte Carlo harness that verifies the limit laws at desk scale.
"""

from .estimators import (
    ConfidenceInterval,
    PivotSet,
    TripleSample,
    bias_estimate,
    ci_bias,
    ci_proj_error,
    corrected_vector,
    pivots,
    sample_covariance,
    second_bias_estimate,
    variance_estimate,
)
from .limits import (
    BIAS_PIVOT_LIMIT,
    PROJ_PIVOT_LIMIT,
    CauchyMixture,
    std_normal_cdf,
)
from .operators import (
    DistinctEigenvalue,
    SpectralData,
    SymOperator,
    a_r,
    b_r_normalizer,
    c_operator,
    effective_rank,
    hs_inner,
    hs_norm,
    nuclear_norm,
    op_norm,
    spectral_decompose,
    trace,
)
from .perturbation import (
    ConvergenceError,
    EmpiricalProjector,
    PerturbationSplit,
    SeriesConfig,
    align_sign,
    empirical_eigenvector,
    empirical_projector,
    linear_term,
    remainder_series,
)
from .simulation import (
    CheckRecord,
    CovarianceModel,
    MonteCarloReport,
    OracleBias,
    Thresholds,
    TrialConfig,
    TrialOutcome,
    build_covariance,
    ks_distance,
    oracle_bias,
    run_trials,
    sample_gaussian,
    spectral_sqrt,
    verify,
)

__version__ = "0.1.0"
