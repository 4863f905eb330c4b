"""Likelihood models with per-observation score and Hessian, plus weighted solvers.

Models are stateless evaluators over a :class:`~swlb.survey_data.SurveyDataset`.
All evaluation methods are vectorized: row ``i`` of the returned arrays
corresponds to observation ``i``.  Two concrete models are provided, a
two-parameter Gaussian (mean and variance) and probit regression.
"""

from __future__ import annotations

import abc
import math
from typing import Sequence

import numpy as np
from scipy import special

from .errors import (
    DegenerateVariance,
    DomainError,
    NonConvergence,
    Separation,
)
from .survey_data import SurveyDataset

_SQRT2 = math.sqrt(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_LOG_2PI = math.log(2.0 * math.pi)

# Convergence: sup-norm of the weighted score below SCORE_TOL_FACTOR * max(1, n).
SCORE_TOL_FACTOR = 1e-8
MAX_NEWTON_ITERATIONS = 100
# Probit iterates beyond this sup-norm indicate a runaway direction.
BETA_CAP = 1e3
# Weighted variance estimates below this multiple of the sample variance
# are treated as degenerate.
VARIANCE_FLOOR_FACTOR = 1e-12


class LikelihoodModel(abc.ABC):
    """Interface every estimator and the bootstrap engine consume."""

    name: str = "model"

    @abc.abstractmethod
    def param_dim(self, data: SurveyDataset) -> int:
        """Dimension K of the parameter vector."""

    @abc.abstractmethod
    def param_names(self, data: SurveyDataset) -> list[str]:
        """Human-readable coordinate names, length K."""

    @abc.abstractmethod
    def log_density(self, theta: np.ndarray, data: SurveyDataset) -> np.ndarray:
        """Per-observation log density, shape (n,)."""

    @abc.abstractmethod
    def score(self, theta: np.ndarray, data: SurveyDataset) -> np.ndarray:
        """Per-observation gradient of the log density, shape (n, K)."""

    @abc.abstractmethod
    def hessian(self, theta: np.ndarray, data: SurveyDataset) -> np.ndarray:
        """Per-observation Hessian of the log density, shape (n, K, K)."""

    @abc.abstractmethod
    def fit_weighted(self, data: SurveyDataset, weights: np.ndarray) -> np.ndarray:
        """Maximizer of ``sum_i weights_i * log f_theta(x_i)``."""

    def newton_start(self, data: SurveyDataset, weights: np.ndarray) -> np.ndarray:
        """Starting point for the generic Newton solver."""
        return np.zeros(self.param_dim(data))

    def check_iterate(self, theta: np.ndarray, data: SurveyDataset, weights: np.ndarray) -> None:
        """Hook called on every accepted Newton iterate; may raise."""

    def weighted_score_and_information(
        self, theta: np.ndarray, data: SurveyDataset, weights: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Weighted score and negative weighted Hessian at ``theta``."""
        grad = weights @ self.score(theta, data)
        info = -np.einsum("i,ijk->jk", weights, self.hessian(theta, data))
        return grad, info


def _validate_weights(weights, n: int) -> np.ndarray:
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size != n:
        raise DomainError(f"weights must be a vector of length {n}")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise DomainError("weights must be finite and nonnegative")
    if not w.sum() > 0.0:
        raise DomainError("weights must not be all zero")
    return w


def _weighted_ll(model, data, w: np.ndarray, theta) -> float:
    # Zero weights remove their observations even at -inf log density.
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    logf = model.log_density(theta, data)
    if np.all(np.isfinite(logf)):
        return float(w @ logf)
    active = w > 0.0
    return float(np.dot(w[active], logf[active]))


def weighted_log_likelihood(
    model: LikelihoodModel, data: SurveyDataset, weights, theta
) -> float:
    """Weighted log likelihood ``sum_i w_i * log f_theta(x_i)``.

    A zero weight removes its observation entirely, even where the log
    density is ``-inf``; the result may be ``-inf`` when a positively
    weighted observation has zero density.
    """
    return _weighted_ll(model, data, _validate_weights(weights, data.n), theta)


def weighted_mle(model: LikelihoodModel, data: SurveyDataset, weights) -> np.ndarray:
    """Maximize the weighted log likelihood.

    The returned point satisfies ``max|weighted score| < 1e-8 * max(1, n)``.
    The maximizer is invariant to positive rescaling of the weights.
    """
    w = _validate_weights(weights, data.n)
    return model.fit_weighted(data, w)


def newton_mle(
    model: LikelihoodModel,
    data: SurveyDataset,
    weights,
    start: np.ndarray | None = None,
    max_iterations: int = MAX_NEWTON_ITERATIONS,
) -> np.ndarray:
    """Generic Newton-Raphson maximizer with step halving.

    Starts at ``model.newton_start`` unless ``start`` is given, takes
    Newton steps (falling back to the gradient direction when the
    Newton direction is not an ascent direction), and halves the step
    until the weighted log likelihood improves.  Convergence is declared
    when the sup-norm of the weighted score falls below
    ``1e-8 * max(1, n)``.

    Raises
    ------
    NonConvergence
        After ``max_iterations`` iterations, or when no improving step
        exists at a point with a non-small score.
    """
    w = _validate_weights(weights, data.n)
    # The argmax is invariant to positive rescaling of the weights, so
    # solve on the sum-to-n scale; this keeps the convergence tolerance
    # meaningful for weights of any magnitude.
    w = w * (data.n / w.sum())
    theta = np.ascontiguousarray(
        model.newton_start(data, w) if start is None else start, dtype=np.float64
    )
    tol = SCORE_TOL_FACTOR * max(1.0, data.n)
    ll = _weighted_ll(model, data, w, theta)
    if not np.isfinite(ll):
        raise DomainError("log likelihood is not finite at the starting point")

    for _ in range(max_iterations):
        model.check_iterate(theta, data, w)
        grad, info = model.weighted_score_and_information(theta, data, w)
        if np.max(np.abs(grad)) < tol:
            return _polish(model, data, w, theta, grad, info)
        try:
            direction = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            direction = grad
        if float(direction @ grad) <= 0.0:
            direction = grad

        step = 1.0
        accepted = False
        while step >= 2.0**-40:
            candidate = theta + step * direction
            try:
                ll_new = _weighted_ll(model, data, w, candidate)
            except DomainError:
                ll_new = -np.inf
            if ll_new > ll:
                theta, ll = candidate, ll_new
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # Near the optimum the likelihood gain of a step can sink
            # below float resolution while the score is still a hair
            # above tolerance; fall back to accepting a full Newton step
            # that shrinks the score norm.
            candidate = theta + direction
            try:
                ll_new = _weighted_ll(model, data, w, candidate)
                grad_new, _ = model.weighted_score_and_information(candidate, data, w)
            except DomainError:
                ll_new, grad_new = -np.inf, grad
            if np.isfinite(ll_new) and np.max(np.abs(grad_new)) < np.max(np.abs(grad)):
                theta, ll = candidate, ll_new
            else:
                raise NonConvergence(
                    f"no improving step at score sup-norm {np.max(np.abs(grad)):.3e}"
                )

    raise NonConvergence(f"Newton did not converge in {max_iterations} iterations")


def _polish(model, data, w, theta, grad, info, rounds: int = 3) -> np.ndarray:
    # A few full Newton steps after convergence, each accepted only if it
    # shrinks the score sup-norm; drives the score to the rounding floor.
    best = float(np.max(np.abs(grad)))
    for _ in range(rounds):
        try:
            candidate = theta + np.linalg.solve(info, grad)
            grad_new, info_new = model.weighted_score_and_information(candidate, data, w)
        except (np.linalg.LinAlgError, DomainError):
            return theta
        norm_new = float(np.max(np.abs(grad_new)))
        if not np.isfinite(norm_new) or norm_new >= best:
            return theta
        theta, grad, info, best = candidate, grad_new, info_new, norm_new
    return theta


class GaussianMeanModel(LikelihoodModel):
    """Scalar Gaussian with parameters ``theta = (mu, sigma2)``.

    Observations are taken from the dataset's response when present,
    otherwise from its single covariate column.
    """

    name = "gaussian-mean"

    def param_dim(self, data: SurveyDataset) -> int:
        return 2

    def param_names(self, data: SurveyDataset) -> list[str]:
        return ["mu", "sigma2"]

    def observations(self, data: SurveyDataset) -> np.ndarray:
        if data.response is not None:
            return data.response
        if data.n_covariates == 1:
            return data.covariates[:, 0]
        raise DomainError(
            "gaussian-mean needs a response or exactly one covariate column"
        )

    @staticmethod
    def _unpack(theta: np.ndarray) -> tuple[float, float]:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (2,):
            raise DomainError("gaussian-mean expects theta = (mu, sigma2)")
        mu, sigma2 = float(theta[0]), float(theta[1])
        if not (np.isfinite(mu) and np.isfinite(sigma2)) or sigma2 <= 0.0:
            raise DomainError(f"sigma2 must be positive and finite, got {sigma2!r}")
        return mu, sigma2

    def log_density(self, theta, data) -> np.ndarray:
        mu, sigma2 = self._unpack(theta)
        x = self.observations(data)
        return -0.5 * (_LOG_2PI + math.log(sigma2)) - (x - mu) ** 2 / (2.0 * sigma2)

    def score(self, theta, data) -> np.ndarray:
        mu, sigma2 = self._unpack(theta)
        r = self.observations(data) - mu
        d_mu = r / sigma2
        d_s2 = r**2 / (2.0 * sigma2**2) - 0.5 / sigma2
        return np.column_stack([d_mu, d_s2])

    def hessian(self, theta, data) -> np.ndarray:
        mu, sigma2 = self._unpack(theta)
        r = self.observations(data) - mu
        n = r.size
        out = np.empty((n, 2, 2))
        out[:, 0, 0] = -1.0 / sigma2
        out[:, 0, 1] = out[:, 1, 0] = -r / sigma2**2
        out[:, 1, 1] = 0.5 / sigma2**2 - r**2 / sigma2**3
        return out

    def newton_start(self, data, weights) -> np.ndarray:
        x = self.observations(data)
        return np.array([x.mean(), max(x.var(), 1e-8)])

    def fit_weighted(self, data, weights) -> np.ndarray:
        """Closed-form weighted MLE.

        Raises
        ------
        DegenerateVariance
            If the weighted variance falls below ``1e-12`` times the
            sample variance (a draw concentrating its weight on a
            single point).
        """
        x = self.observations(data)
        total = weights.sum()
        mu = float(weights @ x) / total
        sigma2 = float(weights @ (x - mu) ** 2) / total
        floor = VARIANCE_FLOOR_FACTOR * float(x.var())
        if sigma2 < floor or sigma2 <= 0.0:
            raise DegenerateVariance(
                f"weighted variance {sigma2!r} below floor {floor!r}"
            )
        return np.array([mu, sigma2])


def _mills_ratio(eta: np.ndarray) -> np.ndarray:
    # phi(eta) / Phi(eta), computed through erfcx so both tails are stable.
    return _SQRT_2_OVER_PI / special.erfcx(-eta / _SQRT2)


class ProbitRegressionModel(LikelihoodModel):
    """Probit regression with a binary response.

    Parameters are the coefficient vector over the design matrix, which
    prepends an intercept column when ``intercept=True``.
    """

    name = "probit"

    def __init__(self, intercept: bool = True, feature_names: Sequence[str] | None = None):
        self.intercept = bool(intercept)
        self.feature_names = tuple(feature_names) if feature_names is not None else None

    def design(self, data: SurveyDataset) -> np.ndarray:
        x = data.covariates
        if self.intercept:
            x = np.column_stack([np.ones(data.n), x])
        if x.shape[1] == 0:
            raise DomainError("probit needs an intercept or at least one covariate")
        return x

    def binary_response(self, data: SurveyDataset) -> np.ndarray:
        y = data.response
        if y is None:
            raise DomainError("probit needs a response column")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise DomainError("probit response must be coded 0/1")
        return y

    def param_dim(self, data: SurveyDataset) -> int:
        return self.design(data).shape[1]

    def param_names(self, data: SurveyDataset) -> list[str]:
        p = data.n_covariates
        if self.feature_names is not None and len(self.feature_names) == p:
            names = list(self.feature_names)
        else:
            names = [f"beta{j + 1}" for j in range(p)]
        return (["intercept"] if self.intercept else []) + names

    def _eta(self, theta: np.ndarray, data: SurveyDataset) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        design = self.design(data)
        if theta.shape != (design.shape[1],):
            raise DomainError(
                f"probit expects theta of length {design.shape[1]}, got {theta.shape}"
            )
        if not np.all(np.isfinite(theta)):
            raise DomainError("probit theta must be finite")
        return design @ theta

    def log_density(self, theta, data) -> np.ndarray:
        # log Phi(eta) for y = 1 and log Phi(-eta) for y = 0 fold into
        # one evaluation at the signed linear predictor.
        eta = self._eta(theta, data)
        sign = 2.0 * self.binary_response(data) - 1.0
        return special.log_ndtr(sign * eta)

    @staticmethod
    def _residual_and_curvature(eta: np.ndarray, sign: np.ndarray):
        m = _mills_ratio(sign * eta)
        s = sign * m
        h = m * (m + sign * eta)
        return s, h

    def score(self, theta, data) -> np.ndarray:
        eta = self._eta(theta, data)
        sign = 2.0 * self.binary_response(data) - 1.0
        s, _ = self._residual_and_curvature(eta, sign)
        return self.design(data) * s[:, None]

    def hessian(self, theta, data) -> np.ndarray:
        eta = self._eta(theta, data)
        sign = 2.0 * self.binary_response(data) - 1.0
        _, h = self._residual_and_curvature(eta, sign)
        design = self.design(data)
        return -np.einsum("i,ij,ik->ijk", h, design, design)

    def weighted_score_and_information(self, theta, data, weights):
        eta = self._eta(theta, data)
        sign = 2.0 * self.binary_response(data) - 1.0
        s, h = self._residual_and_curvature(eta, sign)
        design = self.design(data)
        grad = design.T @ (weights * s)
        info = design.T @ (design * (weights * h)[:, None])
        return grad, info

    def check_iterate(self, theta, data, weights) -> None:
        """Raise :class:`Separation` when no finite maximizer can exist.

        If every positively weighted observation is strictly correctly
        classified at some iterate, that iterate is a separating
        direction and the likelihood increases without bound along it.
        """
        if np.max(np.abs(theta)) > BETA_CAP:
            raise Separation(f"coefficients exceeded {BETA_CAP:g} during iteration")
        eta = self._eta(theta, data)
        y = self.binary_response(data)
        margins = np.where(y > 0.5, eta, -eta)
        active = weights > 0.0
        if np.all(margins[active] > 0.0):
            raise Separation("data are perfectly separated; no finite maximizer")

    def fit_weighted(self, data, weights) -> np.ndarray:
        """Newton-Raphson with step halving from ``beta = 0``.

        Raises
        ------
        Separation
            If only one response class carries positive weight, or a
            separating direction is detected during iteration.
        NonConvergence
            If the iteration budget is exhausted.
        """
        y = self.binary_response(data)
        active = weights > 0.0
        if not (np.any(y[active] > 0.5) and np.any(y[active] < 0.5)):
            raise Separation("both response classes need positive total weight")
        return newton_mle(self, data, weights, start=np.zeros(self.param_dim(data)))
