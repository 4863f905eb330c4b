"""Monte Carlo harness for the two simulation studies.

Simulation 1 draws a Gaussian variable of interest jointly with a
selection variable from a bivariate normal; Simulation 2 drives a binary
response through a latent Gaussian regression whose noise is coupled to
the selection variable.  In both cases unit ``l`` enters the sample with
probability proportional to ``Phi(b0 + b1 * Z_l)``, and selected units
carry raw weight ``1 / pi_l``.

Each Monte Carlo replication regenerates the finite population, draws a
fresh sample, fits the requested methods, and records squared error and
interval coverage against the superpopulation truth.  Replications run
in parallel over deterministic substreams keyed
``(master_seed, replication, stage)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import special

from .bootstrap_engine import BootstrapConfig, percentile_interval, run_bootstrap
from .errors import ConfigError, NumericalError, TooManyFailures
from .estimators import fit_pmle, fit_unweighted, wald_interval
from .models import GaussianMeanModel, ProbitRegressionModel
from .rng import derive_seed, substream
from .survey_data import SurveyDataset, scale_weights
from .weight_resampler import ResampleScheme

# Canonical method order; per-method random streams are keyed by position
# here, so a method's draws do not depend on which other methods run.
METHOD_ORDER = ("pmle", "swlb", "wlb-naive", "unweighted")
_BOOTSTRAP_SCHEMES = {
    "swlb": ResampleScheme.SURVEY_ADJUSTED,
    "wlb-naive": ResampleScheme.DIRICHLET_CENTERED,
}

_STAGE_POPULATION = 0
_STAGE_SAMPLE = 1
_STAGE_METHOD_BASE = 2

# A method is fatal once more than this fraction of replications fail.
MAX_REPLICATION_FAILURE_FRACTION = 0.05


@dataclass(frozen=True)
class Sim1Config:
    """Gaussian mean estimation (Simulation 1)."""

    population_size: int
    sample_size: int
    replications: int
    rho: float
    b1: float
    mu_x: float = 10.0
    mu_z: float = 0.0
    sigma_x: float = 4.0
    sigma_z: float = 3.0
    b0: float = -1.8

    def __post_init__(self):
        _validate_common(self)
        if self.sigma_x <= 0 or self.sigma_z <= 0:
            raise ConfigError("sigma_x and sigma_z must be positive")


@dataclass(frozen=True)
class Sim2Config:
    """Probit regression (Simulation 2)."""

    population_size: int
    sample_size: int
    replications: int
    rho: float
    b1: float
    beta: float = 0.1
    mu_x: float = 1.0
    mu_z: float = 0.0
    sigma_x2: float = 0.01
    sigma_v2: float = 1.0
    sigma_z2: float = 1.0
    b0: float = -1.8

    def __post_init__(self):
        _validate_common(self)
        if self.sigma_x2 <= 0 or self.sigma_v2 <= 0 or self.sigma_z2 <= 0:
            raise ConfigError("sigma_x2, sigma_v2 and sigma_z2 must be positive")


ScenarioConfig = Union[Sim1Config, Sim2Config]


def _validate_common(config) -> None:
    if config.sample_size < 2:
        raise ConfigError("sample_size must be at least 2")
    if config.sample_size > config.population_size:
        raise ConfigError("sample_size cannot exceed population_size")
    if not abs(config.rho) < 1:
        raise ConfigError("rho must lie in (-1, 1)")
    if config.replications < 1:
        raise ConfigError("replications must be positive")


@dataclass(frozen=True)
class FinitePopulation:
    """Generated population variables with attached inclusion probabilities."""

    variables: np.ndarray  # (N, d)
    inclusion_probs: np.ndarray  # (N,), in (0, 1]
    response_column: int | None
    covariate_columns: tuple = ()

    @property
    def size(self) -> int:
        return self.variables.shape[0]


def inclusion_probabilities(z, b0: float, b1: float) -> np.ndarray:
    """Probit-link inclusion probabilities ``Phi(b0 + b1 * z)``."""
    p = special.ndtr(b0 + b1 * np.asarray(z, dtype=np.float64))
    return np.clip(p, 1e-300, 1.0)


def _bivariate_cholesky(s1: float, s2: float, rho: float) -> np.ndarray:
    cov = np.array([[s1**2, rho * s1 * s2], [rho * s1 * s2, s2**2]])
    return np.linalg.cholesky(cov)


def generate_population_sim1(config: Sim1Config, rng: np.random.Generator) -> FinitePopulation:
    """Draw ``(X*, Z)`` i.i.d. bivariate normal and attach inclusion probabilities."""
    chol = _bivariate_cholesky(config.sigma_x, config.sigma_z, config.rho)
    xz = rng.standard_normal((config.population_size, 2)) @ chol.T
    xz += np.array([config.mu_x, config.mu_z])
    pi = inclusion_probabilities(xz[:, 1], config.b0, config.b1)
    return FinitePopulation(variables=xz, inclusion_probs=pi, response_column=0)


def generate_population_sim2(config: Sim2Config, rng: np.random.Generator) -> FinitePopulation:
    """Draw ``X*``, the latent ``(V, Z)`` pair, and ``Y* = 1(V > 0)``."""
    n_pop = config.population_size
    x = config.mu_x + math.sqrt(config.sigma_x2) * rng.standard_normal(n_pop)
    chol = _bivariate_cholesky(math.sqrt(config.sigma_v2), math.sqrt(config.sigma_z2), config.rho)
    noise = rng.standard_normal((n_pop, 2)) @ chol.T
    v = x * config.beta + noise[:, 0]
    z = config.mu_z + noise[:, 1]
    y = (v > 0.0).astype(np.float64)
    variables = np.column_stack([x, y, z])
    pi = inclusion_probabilities(z, config.b0, config.b1)
    return FinitePopulation(
        variables=variables, inclusion_probs=pi, response_column=1, covariate_columns=(0,)
    )


def generate_population(config: ScenarioConfig, rng: np.random.Generator) -> FinitePopulation:
    if isinstance(config, Sim1Config):
        return generate_population_sim1(config, rng)
    if isinstance(config, Sim2Config):
        return generate_population_sim2(config, rng)
    raise ConfigError(f"unknown scenario config {type(config).__name__}")


def draw_informative_sample(
    pop: FinitePopulation, n: int, rng: np.random.Generator
) -> SurveyDataset:
    """Successive unequal-probability sampling without replacement.

    Implemented through the exponential race: unit ``l`` receives key
    ``E_l / pi_l`` with ``E_l`` standard exponential, and the ``n``
    smallest keys form the sample, in key order.  This reproduces
    drawing units one at a time with probability proportional to ``pi``
    among the remaining units.  Selected unit ``i`` carries raw weight
    ``1 / pi_i``.
    """
    if not 1 <= n <= pop.size:
        raise ConfigError(f"sample size {n} must lie in [1, {pop.size}]")
    keys = rng.standard_exponential(pop.size) / pop.inclusion_probs
    chosen = np.argpartition(keys, n - 1)[:n]
    chosen = chosen[np.argsort(keys[chosen], kind="stable")]

    variables = pop.variables[chosen]
    covariates = variables[:, list(pop.covariate_columns)].reshape(n, len(pop.covariate_columns))
    response = variables[:, pop.response_column] if pop.response_column is not None else None
    return SurveyDataset(
        covariates=covariates,
        response=response,
        raw_weights=1.0 / pop.inclusion_probs[chosen],
    )


def coverage_fraction(lower, upper, truth: float) -> float:
    """Fraction of intervals containing ``truth``.

    An interval with ``lower > upper`` (empty) never contains it;
    infinite bounds always do.
    """
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    return float(np.mean((lower <= truth) & (truth <= upper)))


@dataclass(frozen=True)
class MethodSummary:
    """Monte Carlo performance of one method over all replications."""

    method: str
    mse: float
    coverage: float
    mean_interval_width: float
    replications: int
    failures: int


@dataclass(frozen=True)
class ReplicationReport:
    """Per-method MSE and coverage for one scenario."""

    simulation: int
    scenario: ScenarioConfig
    estimand: str
    truth: float
    level: float
    b: int
    master_seed: int
    replications: int
    methods: dict = field(default_factory=dict)  # method -> MethodSummary


def _scenario_target(scenario: ScenarioConfig):
    if isinstance(scenario, Sim1Config):
        return 1, "mu", scenario.mu_x, GaussianMeanModel()
    # The probit fit matches the generating model exactly: a single
    # coefficient on X with no intercept.
    return 2, "beta", scenario.beta, ProbitRegressionModel(intercept=False)


def _run_one_replication(scenario, methods, level, master_seed, b, r):
    """One replication: fresh population, fresh sample, every method fit."""
    _, _, _, model = _scenario_target(scenario)
    pop = generate_population(scenario, substream(master_seed, r, _STAGE_POPULATION))
    sample = draw_informative_sample(
        pop, scenario.sample_size, substream(master_seed, r, _STAGE_SAMPLE)
    )
    scaled = scale_weights(sample.raw_weights)

    records = {}
    for method in methods:
        stage = _STAGE_METHOD_BASE + METHOD_ORDER.index(method)
        try:
            if method == "pmle":
                fit = fit_pmle(model, sample, scaled)
                interval = wald_interval(fit, level)
                estimate = float(fit.theta_hat[0])
            elif method == "unweighted":
                fit = fit_unweighted(model, sample)
                interval = wald_interval(fit, level)
                estimate = float(fit.theta_hat[0])
            else:
                config = BootstrapConfig(
                    b=b,
                    seed=derive_seed(master_seed, r, stage),
                    scheme=_BOOTSTRAP_SCHEMES[method],
                )
                result = run_bootstrap(model, sample, scaled, config)
                interval = percentile_interval(result, level)
                estimate = float(result.point_estimate[0])
            records[method] = (
                estimate,
                float(interval.lower[0]),
                float(interval.upper[0]),
                None,
            )
        except NumericalError as exc:
            records[method] = (np.nan, np.nan, np.nan, type(exc).__name__)
    return records


def _replication_worker(payload):
    scenario, methods, level, master_seed, b, indices = payload
    return [
        (r, _run_one_replication(scenario, methods, level, master_seed, b, r))
        for r in indices
    ]


def run_monte_carlo(
    scenario: ScenarioConfig,
    methods: Sequence[str],
    level: float,
    master_seed: int,
    b: int = 2000,
    workers: int = 1,
) -> ReplicationReport:
    """Monte Carlo evaluation of the requested methods on one scenario.

    Every replication draws a fresh finite population and a fresh
    informative sample from substreams keyed by the replication index,
    so the report is bit-identical across runs and worker counts.

    Raises
    ------
    TooManyFailures
        If any method fails in more than 5% of replications.
    """
    methods = list(methods)
    if not methods:
        raise ConfigError("at least one method is required")
    for method in methods:
        if method not in METHOD_ORDER:
            raise ConfigError(f"unknown method {method!r}; expected any of {METHOD_ORDER}")
    if len(set(methods)) != len(methods):
        raise ConfigError("methods must not repeat")
    if not 0.0 < level < 1.0:
        raise ConfigError(f"level must be in (0, 1), got {level!r}")
    if scenario.replications < 2:
        raise ConfigError("replications must be at least 2")

    simulation, estimand, truth, _ = _scenario_target(scenario)
    reps = scenario.replications
    workers = max(1, int(workers))

    if workers == 1:
        rows = _replication_worker((scenario, methods, level, master_seed, b, range(reps)))
    else:
        chunks = np.array_split(np.arange(reps), workers * 2)
        payloads = [
            (scenario, methods, level, master_seed, b, chunk.tolist())
            for chunk in chunks
            if chunk.size
        ]
        rows = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_replication_worker, payloads):
                rows.extend(part)
    rows.sort(key=lambda item: item[0])

    summaries = {}
    for method in methods:
        est = np.array([rec[method][0] for _, rec in rows])
        lo = np.array([rec[method][1] for _, rec in rows])
        hi = np.array([rec[method][2] for _, rec in rows])
        ok = np.array([rec[method][3] is None for _, rec in rows])
        failures = int((~ok).sum())
        if failures > MAX_REPLICATION_FAILURE_FRACTION * reps:
            reasons = sorted({rec[method][3] for _, rec in rows if rec[method][3]})
            raise TooManyFailures(
                f"method {method!r} failed in {failures}/{reps} replications: {reasons}"
            )
        summaries[method] = MethodSummary(
            method=method,
            mse=float(np.mean((est[ok] - truth) ** 2)),
            coverage=coverage_fraction(lo[ok], hi[ok], truth),
            mean_interval_width=float(np.mean(hi[ok] - lo[ok])),
            replications=reps,
            failures=failures,
        )

    return ReplicationReport(
        simulation=simulation,
        scenario=scenario,
        estimand=estimand,
        truth=truth,
        level=level,
        b=b,
        master_seed=master_seed,
        replications=reps,
        methods=summaries,
    )
