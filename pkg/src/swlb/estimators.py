"""Pseudo-maximum-likelihood estimation with sandwich covariance.

The point estimate maximizes the powered likelihood (each observation's
log density multiplied by its scaled weight).  Its covariance is the
observed sandwich ``(1/n) * J^-1 I J^-1`` built from the plug-ins

    J = -(1/n) * sum_i s_i   * hessian_i(theta_hat)
    I =  (1/n) * sum_i s_i^2 * score_i(theta_hat) score_i(theta_hat)^T

where ``s`` is the scaled weight vector.  With unit weights the same
pipeline reduces to the ordinary MLE with its robust (Huber) covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, SingularInformation
from .models import LikelihoodModel, weighted_mle
from .survey_data import ScaledWeights, SurveyDataset

# J is treated as singular past this condition number.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class PmleFit:
    """A fitted pseudo-MLE with its sandwich covariance."""

    theta_hat: np.ndarray
    sandwich_cov: np.ndarray
    j_matrix: np.ndarray
    i_matrix: np.ndarray
    n: int

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.maximum(np.diag(self.sandwich_cov), 0.0))


@dataclass(frozen=True)
class IntervalEstimate:
    """Per-coordinate interval bounds at a common level."""

    lower: np.ndarray
    upper: np.ndarray
    level: float
    method: str

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape:
            raise ValueError("lower and upper must have the same shape")
        if np.any(lower > upper):
            raise ValueError("interval bounds are crossed")
        if not 0.0 < self.level < 1.0:
            raise DomainError(f"level must be in (0, 1), got {self.level!r}")

    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, value) -> np.ndarray:
        return (self.lower <= value) & (value <= self.upper)


def normal_quantile(p: float) -> float:
    """Standard normal quantile via scipy's rational approximation."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile probability must be in (0, 1), got {p!r}")
    return float(special.ndtri(p))


def information_matrices(
    model: LikelihoodModel, data: SurveyDataset, scaled: ScaledWeights, theta: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Plug-in matrices ``J`` and ``I`` at ``theta``."""
    s = scaled.values
    n = data.n
    psi = model.score(theta, data)
    hess = model.hessian(theta, data)
    j = -np.einsum("i,ijk->jk", s, hess) / n
    i = np.einsum("i,ij,ik->jk", s**2, psi, psi) / n
    return j, i


def _inverse_via_cholesky(j: np.ndarray) -> np.ndarray:
    eigvals = np.linalg.eigvalsh(0.5 * (j + j.T))
    if eigvals[0] <= 0.0 or eigvals[-1] / eigvals[0] > CONDITION_LIMIT:
        raise SingularInformation(
            f"J has eigenvalue range [{eigvals[0]:.3e}, {eigvals[-1]:.3e}]"
        )
    try:
        chol = np.linalg.cholesky(j)
    except np.linalg.LinAlgError:  # pragma: no cover - guarded by eigvalsh
        raise SingularInformation("J is not positive definite") from None
    identity = np.eye(j.shape[0])
    half = np.linalg.solve(chol, identity)
    return half.T @ half


def fit_pmle(
    model: LikelihoodModel, data: SurveyDataset, scaled: ScaledWeights
) -> PmleFit:
    """Fit the pseudo-MLE and its observed sandwich covariance.

    Raises
    ------
    SingularInformation
        If ``J`` at the optimum has condition number above ``1e12``;
        near-singular information means the model is unidentified on
        this sample and is surfaced rather than regularized away.
    """
    if scaled.n != data.n:
        raise DomainError("scaled weights and dataset have different lengths")
    theta = weighted_mle(model, data, scaled.values)
    j, i = information_matrices(model, data, scaled, theta)
    j_inv = _inverse_via_cholesky(j)
    sandwich = j_inv @ i @ j_inv / data.n
    return PmleFit(theta_hat=theta, sandwich_cov=sandwich, j_matrix=j, i_matrix=i, n=data.n)


def fit_unweighted(model: LikelihoodModel, data: SurveyDataset) -> PmleFit:
    """Ordinary MLE baseline: the same pipeline with unit weights."""
    ones = ScaledWeights(np.ones(data.n))
    return fit_pmle(model, data, ones)


def wald_interval(fit: PmleFit, level: float) -> IntervalEstimate:
    """Per-coordinate Wald interval from the sandwich standard errors."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must be in (0, 1), got {level!r}")
    z = normal_quantile(0.5 * (1.0 + level))
    half_width = z * fit.standard_errors()
    return IntervalEstimate(
        lower=fit.theta_hat - half_width,
        upper=fit.theta_hat + half_width,
        level=level,
        method="wald",
    )
