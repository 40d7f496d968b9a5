"""Empirical Bayes posterior inference for sparse normal means.

Exact Gibbs sampling of a data-dependent two-groups posterior, the posterior
mean and inclusion probabilities it yields, hard-thresholding baselines, and
a seeded harness for replicated mean-squared-error studies.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConfigError,
    DegenerateEstimateError,
    EBSparseError,
    InputError,
    NumericError,
    UsageError,
)
from .model import (  # noqa: E402
    FeasibilityQuery,
    ModelConfig,
    default_alpha,
    feasible_margin,
    slab_logweight,
    spike_logweight,
    spike_probability,
)
from .sampler import GibbsState, PosteriorChain, SamplerConfig, run_chain, update_omega, update_theta  # noqa: E402
from .estimators import (  # noqa: E402
    EstimateReport,
    hard_threshold,
    inclusion_probabilities,
    mom_alpha,
    oracle_hard_threshold,
    posterior_mean,
    universal_threshold,
)
from .simulation import (  # noqa: E402
    StudyResult,
    StudySpec,
    TruthSpec,
    generate_data,
    make_theta_star,
    run_study,
    squared_error,
)
from .diagnostics import (  # noqa: E402
    DiagnosticsReport,
    concentration_ratio,
    diagnose,
    dimension_tail,
    epsilon_n,
    ew_identity_residual,
    omega_concentration,
)

__all__ = [
    "ConfigError", "DegenerateEstimateError", "EBSparseError", "InputError", "NumericError",
    "UsageError", "FeasibilityQuery", "ModelConfig", "default_alpha", "feasible_margin",
    "slab_logweight", "spike_logweight", "spike_probability", "GibbsState", "PosteriorChain",
    "SamplerConfig", "run_chain", "update_omega", "update_theta", "EstimateReport",
    "hard_threshold", "inclusion_probabilities", "mom_alpha", "oracle_hard_threshold",
    "posterior_mean", "universal_threshold", "StudyResult", "StudySpec", "TruthSpec",
    "generate_data", "make_theta_star", "run_study", "squared_error", "DiagnosticsReport",
    "concentration_ratio", "diagnose", "dimension_tail", "epsilon_n", "ew_identity_residual",
    "omega_concentration",
]
