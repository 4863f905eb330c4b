"""Weighted likelihood bootstrap engine.

Each replicate ``j`` draws a weight vector from its own counter-based
random stream keyed ``(seed, j)``, maximizes the weighted log likelihood,
and stores the result in slot ``j``.  Replicates are embarrassingly
parallel and the output is bit-identical for any worker count.

Replicates whose inner optimization fails (separation, non-convergence,
degenerate variance, degenerate draw) are excluded and tallied; the run
is rejected when the excluded fraction exceeds a configurable ceiling.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError, TooFewDraws, TooManyFailures
from .estimators import IntervalEstimate
from .models import LikelihoodModel, weighted_mle
from .rng import substream
from .survey_data import ScaledWeights, SurveyDataset
from .weight_resampler import ResampleScheme, draw_weights

DEFAULT_MAX_FAILURES_FRACTION = 0.01
# Minimum successful draws for a percentile interval.
MIN_DRAWS_FOR_INTERVAL = 20


@dataclass(frozen=True)
class BootstrapConfig:
    """Replicate count, master seed, weight scheme, and failure ceiling."""

    b: int
    seed: int
    scheme: ResampleScheme
    max_failures_fraction: float = DEFAULT_MAX_FAILURES_FRACTION

    def __post_init__(self):
        if self.b < 2:
            raise ConfigError(f"b must be at least 2, got {self.b}")
        if not 0.0 <= self.max_failures_fraction < 1.0:
            raise ConfigError("max_failures_fraction must lie in [0, 1)")
        if not isinstance(self.scheme, ResampleScheme):
            raise ConfigError(f"scheme must be a ResampleScheme, got {self.scheme!r}")


@dataclass(frozen=True)
class Failures:
    """Tally of excluded replicates, by error class."""

    total: int = 0
    reasons: dict = field(default_factory=dict)
    indices: tuple = ()


@dataclass(frozen=True)
class BootstrapResult:
    """Successful parameter draws plus exclusion bookkeeping."""

    draws: np.ndarray  # (B', K)
    failures: Failures
    point_estimate: np.ndarray  # coordinatewise mean of the draws
    config_echo: BootstrapConfig

    @property
    def b_effective(self) -> int:
        return self.draws.shape[0]


def _run_replicates(model, data, scaled, config, indices):
    out = []
    for j in indices:
        rng = substream(config.seed, j)
        try:
            g = draw_weights(config.scheme, scaled, rng)
            theta = weighted_mle(model, data, g.values)
            out.append((j, theta, None))
        except NumericalError as exc:
            out.append((j, None, type(exc).__name__))
    return out


def _worker(payload):
    return _run_replicates(*payload)


def run_bootstrap(
    model: LikelihoodModel,
    data: SurveyDataset,
    scaled: ScaledWeights,
    config: BootstrapConfig,
    workers: int = 1,
) -> BootstrapResult:
    """Run ``config.b`` bootstrap replicates.

    Replicate ``j`` draws its weights from the stream keyed
    ``(config.seed, j)``; results are collected into replicate-indexed
    slots, so draws, failures, and the point estimate are identical for
    any ``workers`` value.

    Raises
    ------
    TooManyFailures
        If the excluded fraction exceeds ``config.max_failures_fraction``.
    """
    if scaled.n != data.n:
        raise ConfigError("scaled weights and dataset have different lengths")
    workers = max(1, int(workers))

    if workers == 1:
        results = _run_replicates(model, data, scaled, config, range(config.b))
    else:
        chunks = np.array_split(np.arange(config.b), workers * 4)
        payloads = [
            (model, data, scaled, config, chunk.tolist())
            for chunk in chunks
            if chunk.size
        ]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_worker, payloads):
                results.extend(part)

    results.sort(key=lambda item: item[0])
    thetas = [theta for _, theta, reason in results if reason is None]
    failed = [(j, reason) for j, _, reason in results if reason is not None]

    reasons: dict[str, int] = {}
    for _, reason in failed:
        reasons[reason] = reasons.get(reason, 0) + 1
    failures = Failures(
        total=len(failed),
        reasons=dict(sorted(reasons.items())),
        indices=tuple(j for j, _ in failed),
    )

    if failures.total > config.max_failures_fraction * config.b or not thetas:
        raise TooManyFailures(
            f"{failures.total} of {config.b} replicates failed "
            f"(ceiling {config.max_failures_fraction:.2%}): {failures.reasons}"
        )

    draws = np.vstack(thetas)
    return BootstrapResult(
        draws=draws,
        failures=failures,
        point_estimate=draws.mean(axis=0),
        config_echo=config,
    )


def percentile_interval(result: BootstrapResult, level: float) -> IntervalEstimate:
    """Equal-tailed percentile interval of the bootstrap draws.

    Quantiles interpolate linearly between order statistics at
    ``h = (B' - 1) p + 1`` (the type-7 convention), pinned here so that
    reports are bit-stable.
    """
    if not 0.0 < level < 1.0:
        raise ConfigError(f"level must be in (0, 1), got {level!r}")
    if result.b_effective < MIN_DRAWS_FOR_INTERVAL:
        raise TooFewDraws(
            f"{result.b_effective} draws available, need {MIN_DRAWS_FOR_INTERVAL}"
        )
    alpha = 0.5 * (1.0 - level)
    lower, upper = np.quantile(result.draws, [alpha, 1.0 - alpha], axis=0, method="linear")
    return IntervalEstimate(lower=lower, upper=upper, level=level, method="percentile")


def summarize(result: BootstrapResult) -> tuple[np.ndarray, np.ndarray]:
    """Coordinatewise mean and unbiased standard deviation of the draws."""
    if result.b_effective < 2:
        raise TooFewDraws("need at least 2 draws to summarize")
    return result.draws.mean(axis=0), result.draws.std(axis=0, ddof=1)
