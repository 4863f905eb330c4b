import numpy as np
import pytest

from swlb import SurveyDataset


@pytest.fixture
def gaussian_pair() -> SurveyDataset:
    """Two observations (0, 2) with unit weights."""
    return SurveyDataset(
        covariates=np.empty((2, 0)),
        response=np.array([0.0, 2.0]),
        raw_weights=np.array([1.0, 1.0]),
    )


def make_gaussian_dataset(x, weights=None) -> SurveyDataset:
    x = np.asarray(x, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    return SurveyDataset(covariates=np.empty((x.size, 0)), response=x, raw_weights=w)


def make_probit_dataset(x, y, weights=None) -> SurveyDataset:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    y = np.asarray(y, dtype=float)
    w = np.ones(x.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    return SurveyDataset(covariates=x, response=y, raw_weights=w)
