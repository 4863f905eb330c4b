"""Random weight vectors that drive each bootstrap replicate.

Three schemes are supported:

* ``SURVEY_ADJUSTED`` draws un-normalized weights ``Y_i`` independently
  from Gamma(shape 1, scale ``s_i``) where ``s`` is the scaled sampling
  weight vector, then normalizes to sum one.  The un-normalized draws
  satisfy ``E(Y_i) = s_i`` and ``Var(Y_i) = s_i**2``, and the normalized
  vector follows a scaled Dirichlet law with unit shape parameters and
  rates ``1/s_i``.
* ``UNIFORM_DIRICHLET`` draws a flat Dirichlet(1, ..., 1) vector and
  ignores the sampling weights entirely.
* ``DIRICHLET_CENTERED`` draws Dirichlet(s_1, ..., s_n).  Its entries
  have the right means but the wrong variances; it is kept as a
  negative control.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateDraw
from .rng import substream
from .survey_data import ScaledWeights

# Uniform draws are clamped away from 0 so -log(u) stays finite.
_MIN_UNIFORM = 1e-300
# Normalized weights must sum to one within this tolerance.
_SUM_TOLERANCE = 1e-12
# Retries before a degenerate draw is surfaced to the caller.
_MAX_RETRIES = 3


class ResampleScheme(enum.Enum):
    """Law of the random weight vector used by the bootstrap."""

    SURVEY_ADJUSTED = "survey-adjusted"
    UNIFORM_DIRICHLET = "uniform-dirichlet"
    DIRICHLET_CENTERED = "dirichlet-centered"

    @classmethod
    def from_label(cls, label: str) -> "ResampleScheme":
        for scheme in cls:
            if scheme.value == label:
                return scheme
        raise ConfigError(
            f"unknown resample scheme {label!r}; expected one of "
            f"{[s.value for s in cls]}"
        )


@dataclass(frozen=True)
class UnnormalizedWeights:
    """Strictly positive un-normalized draws ``Y_i``."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if np.any(values <= 0.0):
            raise DegenerateDraw("un-normalized weights must be strictly positive")


@dataclass(frozen=True)
class NormalizedWeights:
    """Nonnegative weights ``g_i`` summing to one."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if np.any(values < 0.0):
            raise DegenerateDraw("normalized weights must be nonnegative")
        if abs(values.sum() - 1.0) > _SUM_TOLERANCE:
            raise DegenerateDraw(f"normalized weights sum to {values.sum()!r}, not 1")

    @property
    def n(self) -> int:
        return self.values.size


def _exponential_draws(scale: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # Gamma(shape 1, scale s) sampled by inversion: -s * log(U).
    u = rng.random(scale.shape)
    y = -scale * np.log(np.maximum(u, _MIN_UNIFORM))
    while np.any(y <= 0.0):  # underflow to exact zero; resample those entries
        redo = y <= 0.0
        u = rng.random(int(redo.sum()))
        y[redo] = -scale[redo] * np.log(np.maximum(u, _MIN_UNIFORM))
    return y


def _gamma_draws(shape: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # Gamma(shape s_i, scale 1); numpy's rejection sampler covers shape < 1.
    y = rng.standard_gamma(shape)
    while np.any(y <= 0.0):
        redo = y <= 0.0
        y[redo] = rng.standard_gamma(shape[redo])
    return y


def draw_unnormalized(scaled: ScaledWeights, rng: np.random.Generator) -> UnnormalizedWeights:
    """Draw ``Y_i ~ Gamma(shape 1, scale s_i)`` independently.

    Each entry is an exponential with mean equal to its scaled weight,
    so both moment conditions ``E(Y_i) = s_i`` and ``Var(Y_i) = s_i**2``
    hold.
    """
    return UnnormalizedWeights(_exponential_draws(scaled.values, rng))


def normalize(y: UnnormalizedWeights) -> NormalizedWeights:
    """Normalize un-normalized draws to sum one.

    Raises
    ------
    DegenerateDraw
        If the draws sum to zero (callers resample).
    """
    total = y.values.sum()
    if not total > 0.0:
        raise DegenerateDraw("un-normalized weights sum to zero")
    return NormalizedWeights(y.values / total)


def _draw_once(
    scheme: ResampleScheme, scaled: ScaledWeights, rng: np.random.Generator
) -> NormalizedWeights:
    if scheme is ResampleScheme.SURVEY_ADJUSTED:
        return normalize(draw_unnormalized(scaled, rng))
    if scheme is ResampleScheme.UNIFORM_DIRICHLET:
        ones = np.ones(scaled.n)
        return normalize(UnnormalizedWeights(_exponential_draws(ones, rng)))
    if scheme is ResampleScheme.DIRICHLET_CENTERED:
        return normalize(UnnormalizedWeights(_gamma_draws(scaled.values, rng)))
    raise ConfigError(f"unhandled scheme {scheme!r}")


def draw_weights(
    scheme: ResampleScheme, scaled: ScaledWeights, rng: np.random.Generator
) -> NormalizedWeights:
    """Draw one normalized weight vector from the requested scheme.

    Identical ``(scheme, scaled, rng state)`` produce bit-identical
    vectors.  Degenerate draws are retried up to 3 times before
    :class:`~swlb.errors.DegenerateDraw` is surfaced; reaching that
    point indicates a defective random stream.
    """
    last: DegenerateDraw | None = None
    for _ in range(_MAX_RETRIES):
        try:
            return _draw_once(scheme, scaled, rng)
        except DegenerateDraw as exc:
            last = exc
    raise last  # pragma: no cover - probability is astronomically small


def moment_diagnostic(
    scheme: ResampleScheme,
    scaled: ScaledWeights,
    draws: int,
    seed: int,
    z_threshold: float = 4.0,
    chunk: int = 8192,
) -> dict:
    """Empirical moment check of a weight scheme against the target law.

    Draws ``draws`` weight vectors from a single deterministic stream
    keyed by ``seed`` and accumulates per-coordinate means and variances
    of both the un-normalized draws ``Y`` and the normalized draws
    ``g``, together with Monte Carlo standard errors.  The un-normalized
    moments are compared against the mean condition ``E(Y_i) = s_i`` and
    the variance condition ``Var(Y_i) = s_i**2``; a condition passes
    when every coordinate's z-score is below ``z_threshold``.

    Returns a dict with keys ``y_mean``, ``y_var``, ``y_mean_se``,
    ``y_var_se``, ``g_mean``, ``g_var``, ``mean_z``, ``var_z``,
    ``mean_condition_pass``, ``var_condition_pass`` and echoes of the
    inputs.
    """
    if draws < 2:
        raise ConfigError("moment diagnostic needs at least 2 draws")
    s = scaled.values
    n = s.size
    rng = substream(seed)

    # Accumulate centered power sums of (Y - s) and (g - s/n); centering on
    # the target keeps the fourth-moment accumulation well conditioned.
    y_shift = s
    g_shift = s / n
    y_pow = np.zeros((4, n))
    g_pow = np.zeros((4, n))

    remaining = draws
    while remaining > 0:
        m = min(chunk, remaining)
        remaining -= m
        if scheme is ResampleScheme.SURVEY_ADJUSTED:
            u = rng.random((m, n))
            y = -s * np.log(np.maximum(u, _MIN_UNIFORM))
        elif scheme is ResampleScheme.UNIFORM_DIRICHLET:
            u = rng.random((m, n))
            y = -np.log(np.maximum(u, _MIN_UNIFORM))
        elif scheme is ResampleScheme.DIRICHLET_CENTERED:
            y = rng.standard_gamma(np.broadcast_to(s, (m, n)))
        else:
            raise ConfigError(f"unhandled scheme {scheme!r}")
        g = y / y.sum(axis=1, keepdims=True)

        dy = y - y_shift
        dg = g - g_shift
        py, pg = dy, dg
        for k in range(4):
            y_pow[k] += py.sum(axis=0)
            g_pow[k] += pg.sum(axis=0)
            if k < 3:
                py = py * dy
                pg = pg * dg

    def finish(pow_sums: np.ndarray, shift: np.ndarray, m: int):
        d1 = pow_sums[0] / m
        d2 = pow_sums[1] / m
        d3 = pow_sums[2] / m
        d4 = pow_sums[3] / m
        mean = shift + d1
        m2 = d2 - d1**2
        m4 = d4 - 4.0 * d1 * d3 + 6.0 * d1**2 * d2 - 3.0 * d1**4
        var = m2 * m / (m - 1)
        se_mean = np.sqrt(m2 / m)
        se_var = np.sqrt(np.maximum(m4 - m2**2 * (m - 3) / (m - 1), 0.0) / m)
        return mean, var, se_mean, se_var

    y_mean, y_var, y_mean_se, y_var_se = finish(y_pow, y_shift, draws)
    g_mean, g_var, g_mean_se, g_var_se = finish(g_pow, g_shift, draws)

    with np.errstate(divide="ignore", invalid="ignore"):
        mean_z = np.abs(y_mean - s) / y_mean_se
        var_z = np.abs(y_var - s**2) / y_var_se

    return {
        "scheme": scheme.value,
        "draws": draws,
        "seed": seed,
        "n": n,
        "scaled_weights": s,
        "y_mean": y_mean,
        "y_mean_se": y_mean_se,
        "y_var": y_var,
        "y_var_se": y_var_se,
        "g_mean": g_mean,
        "g_mean_se": g_mean_se,
        "g_var": g_var,
        "g_var_se": g_var_se,
        "mean_z": mean_z,
        "var_z": var_z,
        "z_threshold": z_threshold,
        "mean_condition_pass": bool(np.all(mean_z <= z_threshold)),
        "var_condition_pass": bool(np.all(var_z <= z_threshold)),
    }
