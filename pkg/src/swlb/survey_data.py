"""Observed samples, sampling weights, weight scaling, and CSV ingestion.

A survey sample is a set of observations plus one strictly positive raw
weight per unit, interpretable only up to a multiplicative constant.
:func:`scale_weights` converts raw weights into the canonical form used
by every estimator in this package: weights rescaled to sum to the
sample size ``n``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    MissingColumn,
    NonPositiveWeight,
    ParseError,
    TooFewObservations,
)

# Relative tolerance on the sum-to-n constraint of scaled weights.
SUM_TOLERANCE = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ScaledWeights:
    """Weights rescaled so that their sum equals the sample size.

    Instances are immutable and safe to share across parallel workers.
    """

    values: np.ndarray

    def __post_init__(self):
        values = _readonly(np.atleast_1d(self.values))
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size < 2:
            raise TooFewObservations("scaled weights need at least 2 entries")
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            raise NonPositiveWeight("scaled weights must be finite and > 0")
        n = values.size
        if abs(values.sum() - n) > SUM_TOLERANCE * n:
            raise ValueError(
                f"scaled weights must sum to n={n}, got {values.sum()!r}"
            )

    @property
    def n(self) -> int:
        return self.values.size


def scale_weights(raw_weights) -> ScaledWeights:
    """Rescale raw sampling weights to sum to the sample size.

    Entry ``i`` of the result is ``n * w_i / sum(w)``.  The result is
    invariant to rescaling the input by any positive constant, and the
    sum uses numpy's pairwise accumulation so the sum-to-n constraint
    holds to relative tolerance ``1e-12`` even for very large ``n``.

    Raises
    ------
    NonPositiveWeight
        If any weight is non-finite or not strictly positive.
    TooFewObservations
        If fewer than two weights are supplied.
    """
    w = np.ascontiguousarray(raw_weights, dtype=np.float64)
    if w.ndim != 1 or w.size < 2:
        raise TooFewObservations("need at least 2 weights")
    if not np.all(np.isfinite(w)):
        raise NonPositiveWeight("weights must be finite")
    if np.any(w <= 0.0):
        raise NonPositiveWeight("weights must be strictly positive")
    total = w.sum()
    return ScaledWeights(w * (w.size / total))


@dataclass(frozen=True)
class SurveyDataset:
    """An observed sample with raw sampling weights.

    Parameters
    ----------
    covariates : ndarray, shape (n, p)
        Covariate matrix; ``p`` may be zero.
    response : ndarray or None, shape (n,)
        Optional response vector.
    raw_weights : ndarray, shape (n,)
        Strictly positive sampling weights, known up to scale.
    """

    covariates: np.ndarray
    response: np.ndarray | None
    raw_weights: np.ndarray

    def __post_init__(self):
        w = _readonly(np.atleast_1d(self.raw_weights))
        object.__setattr__(self, "raw_weights", w)
        if w.ndim != 1 or w.size < 2:
            raise TooFewObservations("a survey dataset needs at least 2 rows")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise NonPositiveWeight("raw weights must be finite and > 0")
        n = w.size

        x = np.asarray(self.covariates, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[0] != n:
            raise ValueError(f"covariates must have {n} rows")
        if x.size and not np.all(np.isfinite(x)):
            raise ParseError("covariates contain non-finite values")
        object.__setattr__(self, "covariates", _readonly(x))

        if self.response is not None:
            y = _readonly(np.atleast_1d(self.response))
            if y.ndim != 1 or y.size != n:
                raise ValueError(f"response must have length {n}")
            if not np.all(np.isfinite(y)):
                raise ParseError("response contains non-finite values")
            object.__setattr__(self, "response", y)

    @property
    def n(self) -> int:
        return self.raw_weights.size

    @property
    def n_covariates(self) -> int:
        return self.covariates.shape[1]

    def scaled_weights(self) -> ScaledWeights:
        return scale_weights(self.raw_weights)


@dataclass(frozen=True)
class ColumnSchema:
    """Explicit column mapping for CSV ingestion.

    The weight column must be named; there is no heuristic detection.
    """

    weight_column: str
    response_column: str | None = None
    covariate_columns: Sequence[str] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "covariate_columns", tuple(self.covariate_columns))
        declared = [self.weight_column, *self.covariate_columns]
        if self.response_column is not None:
            declared.append(self.response_column)
        if len(set(declared)) != len(declared):
            raise MissingColumn("schema names the same column more than once")


def load_csv(path, schema: ColumnSchema) -> SurveyDataset:
    """Load a survey dataset from a headered, comma-separated file.

    Cells must parse as finite numbers with a ``.`` decimal point;
    scientific notation is accepted.  Missing or non-numeric cells are
    rejected, never imputed.

    Raises
    ------
    MissingColumn
        If a schema column is absent from (or duplicated in) the header.
    ParseError
        Carrying the 1-based data row and column name of the bad cell.
    NonPositiveWeight
        Carrying the 1-based data row of the offending weight.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty") from None
        header = [h.strip() for h in header]

        wanted = [schema.weight_column, *schema.covariate_columns]
        if schema.response_column is not None:
            wanted.append(schema.response_column)
        positions: dict[str, int] = {}
        for name in wanted:
            hits = [i for i, h in enumerate(header) if h == name]
            if not hits:
                raise MissingColumn(f"column {name!r} not found in header {header}")
            if len(hits) > 1:
                raise MissingColumn(f"column {name!r} appears {len(hits)} times in header")
            positions[name] = hits[0]

        weights: list[float] = []
        response: list[float] = []
        covariates: list[list[float]] = []
        for row_idx, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ParseError(
                    f"row {row_idx} has {len(row)} fields, header has {len(header)}",
                    row=row_idx,
                )

            def cell(name: str) -> float:
                token = row[positions[name]].strip()
                try:
                    value = float(token)
                except ValueError:
                    raise ParseError(
                        f"row {row_idx}, column {name!r}: cannot parse {token!r}",
                        row=row_idx,
                        column=name,
                    ) from None
                if not np.isfinite(value):
                    raise ParseError(
                        f"row {row_idx}, column {name!r}: non-finite value {token!r}",
                        row=row_idx,
                        column=name,
                    )
                return value

            w = cell(schema.weight_column)
            if w <= 0.0:
                raise NonPositiveWeight(
                    f"row {row_idx}: weight must be > 0, got {w!r}", row=row_idx
                )
            weights.append(w)
            if schema.response_column is not None:
                response.append(cell(schema.response_column))
            covariates.append([cell(c) for c in schema.covariate_columns])

    if len(weights) < 2:
        raise TooFewObservations(f"file has {len(weights)} data rows, need at least 2")

    x = np.asarray(covariates, dtype=np.float64).reshape(len(weights), len(schema.covariate_columns))
    y = np.asarray(response, dtype=np.float64) if schema.response_column is not None else None
    return SurveyDataset(covariates=x, response=y, raw_weights=np.asarray(weights))
