"""Survey-adjusted weighted likelihood bootstrap.

Model-based inference under informative sampling: pseudo-maximum-
likelihood estimation with sandwich covariance, the classical weighted
likelihood bootstrap, and the survey-adjusted variant whose random
weights match both the mean and variance of the scaled sampling weights.
"""

from .bootstrap_engine import (
    BootstrapConfig,
    BootstrapResult,
    Failures,
    percentile_interval,
    run_bootstrap,
    summarize,
)
from .errors import (
    ConfigError,
    DegenerateDraw,
    DegenerateVariance,
    DomainError,
    InputError,
    MissingColumn,
    NonConvergence,
    NonPositiveWeight,
    NumericalError,
    ParseError,
    Separation,
    SingularInformation,
    SwlbError,
    TooFewDraws,
    TooFewObservations,
    TooManyFailures,
)
from .estimators import (
    IntervalEstimate,
    PmleFit,
    fit_pmle,
    fit_unweighted,
    normal_quantile,
    wald_interval,
)
from .models import (
    GaussianMeanModel,
    LikelihoodModel,
    ProbitRegressionModel,
    newton_mle,
    weighted_log_likelihood,
    weighted_mle,
)
from .rng import derive_seed, substream
from .sim_harness import (
    FinitePopulation,
    MethodSummary,
    ReplicationReport,
    Sim1Config,
    Sim2Config,
    draw_informative_sample,
    generate_population_sim1,
    generate_population_sim2,
    inclusion_probabilities,
    run_monte_carlo,
)
from .survey_data import (
    ColumnSchema,
    ScaledWeights,
    SurveyDataset,
    load_csv,
    scale_weights,
)
from .weight_resampler import (
    NormalizedWeights,
    ResampleScheme,
    UnnormalizedWeights,
    draw_unnormalized,
    draw_weights,
    moment_diagnostic,
    normalize,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "BootstrapResult",
    "ColumnSchema",
    "ConfigError",
    "DegenerateDraw",
    "DegenerateVariance",
    "DomainError",
    "Failures",
    "FinitePopulation",
    "GaussianMeanModel",
    "InputError",
    "IntervalEstimate",
    "LikelihoodModel",
    "MethodSummary",
    "MissingColumn",
    "NonConvergence",
    "NonPositiveWeight",
    "NormalizedWeights",
    "NumericalError",
    "ParseError",
    "PmleFit",
    "ProbitRegressionModel",
    "ReplicationReport",
    "ResampleScheme",
    "ScaledWeights",
    "Separation",
    "Sim1Config",
    "Sim2Config",
    "SingularInformation",
    "SurveyDataset",
    "SwlbError",
    "TooFewDraws",
    "TooFewObservations",
    "TooManyFailures",
    "UnnormalizedWeights",
    "derive_seed",
    "draw_informative_sample",
    "draw_unnormalized",
    "draw_weights",
    "fit_pmle",
    "fit_unweighted",
    "generate_population_sim1",
    "generate_population_sim2",
    "inclusion_probabilities",
    "load_csv",
    "moment_diagnostic",
    "newton_mle",
    "normal_quantile",
    "normalize",
    "percentile_interval",
    "run_bootstrap",
    "run_monte_carlo",
    "scale_weights",
    "substream",
    "summarize",
    "wald_interval",
    "weighted_log_likelihood",
    "weighted_mle",
]
