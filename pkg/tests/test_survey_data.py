import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swlb import (
    ColumnSchema,
    MissingColumn,
    NonPositiveWeight,
    ParseError,
    ScaledWeights,
    SurveyDataset,
    TooFewObservations,
    load_csv,
    scale_weights,
)


class TestScaleWeights:
    def test_equal_weights_are_fixed_point(self):
        np.testing.assert_array_equal(scale_weights([1.0, 1.0, 1.0]).values, [1, 1, 1])

    def test_hand_arithmetic(self):
        np.testing.assert_allclose(
            scale_weights([1.0, 2.0, 3.0]).values, [0.5, 1.0, 1.5], rtol=1e-15
        )

    def test_equal_weights_any_scale(self):
        np.testing.assert_allclose(scale_weights([2.0, 2.0]).values, [1.0, 1.0], rtol=1e-15)

    @pytest.mark.parametrize("bad", [[1.0, 0.0], [1.0, -2.0], [1.0, np.nan], [1.0, np.inf]])
    def test_rejects_nonpositive_or_nonfinite(self, bad):
        with pytest.raises(NonPositiveWeight):
            scale_weights(bad)

    def test_rejects_single_weight(self):
        with pytest.raises(TooFewObservations):
            scale_weights([1.0])

    @given(
        weights=st.lists(st.floats(min_value=1e-6, max_value=1e6), min_size=2, max_size=40),
        scale=st.floats(min_value=1e-8, max_value=1e8),
    )
    @settings(max_examples=200, deadline=None)
    def test_scale_invariance(self, weights, scale):
        w = np.asarray(weights)
        base = scale_weights(w).values
        rescaled = scale_weights(scale * w).values
        np.testing.assert_allclose(rescaled, base, rtol=1e-12)

    @given(weights=st.lists(st.floats(min_value=1e-6, max_value=1e6), min_size=2, max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_idempotent_and_sums_to_n(self, weights):
        once = scale_weights(weights)
        twice = scale_weights(once.values)
        np.testing.assert_allclose(twice.values, once.values, rtol=1e-12)
        n = once.n
        assert abs(once.values.sum() - n) <= 1e-12 * n

    def test_sum_constraint_holds_for_large_n(self):
        rng = np.random.default_rng(42)
        w = rng.lognormal(0.0, 2.0, size=1_000_000)
        scaled = scale_weights(w)
        assert abs(scaled.values.sum() - scaled.n) <= 1e-12 * scaled.n


class TestScaledWeights:
    def test_rejects_wrong_sum(self):
        with pytest.raises(ValueError):
            ScaledWeights(np.array([0.5, 0.5, 0.5]))

    def test_values_are_read_only(self):
        scaled = scale_weights([1.0, 2.0])
        with pytest.raises(ValueError):
            scaled.values[0] = 7.0


class TestSurveyDataset:
    def test_rejects_single_row(self):
        with pytest.raises(TooFewObservations):
            SurveyDataset(
                covariates=np.zeros((1, 1)), response=None, raw_weights=np.array([1.0])
            )

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ValueError):
            SurveyDataset(
                covariates=np.zeros((3, 1)), response=None, raw_weights=np.ones(2)
            )
        with pytest.raises(ValueError):
            SurveyDataset(
                covariates=np.zeros((2, 1)),
                response=np.zeros(3),
                raw_weights=np.ones(2),
            )

    def test_rejects_missing_values(self):
        with pytest.raises(ParseError):
            SurveyDataset(
                covariates=np.array([[1.0], [np.nan]]),
                response=None,
                raw_weights=np.ones(2),
            )

    def test_arrays_are_read_only(self):
        data = SurveyDataset(
            covariates=np.zeros((2, 1)), response=np.ones(2), raw_weights=np.ones(2)
        )
        for arr in (data.covariates, data.response, data.raw_weights):
            with pytest.raises(ValueError):
                arr[0] = 9.0

    def test_zero_covariate_columns_allowed(self):
        data = SurveyDataset(
            covariates=np.empty((2, 0)), response=np.ones(2), raw_weights=np.ones(2)
        )
        assert data.n == 2 and data.n_covariates == 0


def write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


class TestLoadCsv:
    def schema(self):
        return ColumnSchema(
            weight_column="w", response_column="y", covariate_columns=("x",)
        )

    def test_round_trip(self, tmp_path):
        path = tmp_path / "toy.csv"
        write_rows(path, ["x", "w", "y"], [[0, 1, 0], [1, 2, 1], [2, 3, 1]])
        data = load_csv(path, self.schema())
        assert data.n == 3
        np.testing.assert_array_equal(data.raw_weights, [1, 2, 3])
        np.testing.assert_array_equal(data.response, [0, 1, 1])
        np.testing.assert_array_equal(data.covariates[:, 0], [0, 1, 2])

    def test_negative_weight_reports_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_rows(path, ["x", "w"], [[0, 1], [1, -1], [2, 3]])
        with pytest.raises(NonPositiveWeight) as excinfo:
            load_csv(path, ColumnSchema(weight_column="w", covariate_columns=("x",)))
        assert excinfo.value.row == 2

    def test_missing_weight_column(self, tmp_path):
        path = tmp_path / "noweight.csv"
        write_rows(path, ["x", "y"], [[0, 1], [1, 0]])
        with pytest.raises(MissingColumn):
            load_csv(path, self.schema())

    def test_duplicate_column_rejected(self, tmp_path):
        path = tmp_path / "dup.csv"
        write_rows(path, ["w", "w", "x", "y"], [[1, 1, 0, 0], [2, 2, 1, 1]])
        with pytest.raises(MissingColumn):
            load_csv(path, self.schema())

    def test_parse_error_carries_row_and_column(self, tmp_path):
        path = tmp_path / "badcell.csv"
        write_rows(path, ["x", "w", "y"], [[0, 1, 0], ["oops", 2, 1]])
        with pytest.raises(ParseError) as excinfo:
            load_csv(path, self.schema())
        assert excinfo.value.row == 2
        assert excinfo.value.column == "x"

    def test_non_finite_cell_rejected(self, tmp_path):
        path = tmp_path / "nan.csv"
        write_rows(path, ["x", "w", "y"], [[0, 1, 0], ["nan", 2, 1]])
        with pytest.raises(ParseError):
            load_csv(path, self.schema())

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x,w,y\n0,1,0\n1,2\n")
        with pytest.raises(ParseError) as excinfo:
            load_csv(path, self.schema())
        assert excinfo.value.row == 2

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            load_csv(path, self.schema())

    def test_scientific_notation_accepted(self, tmp_path):
        path = tmp_path / "sci.csv"
        write_rows(path, ["x", "w", "y"], [["1e-3", "2E2", 1], ["-4.5e+1", 1, 0]])
        data = load_csv(path, self.schema())
        np.testing.assert_array_equal(data.covariates[:, 0], [1e-3, -45.0])
        np.testing.assert_array_equal(data.raw_weights, [200.0, 1.0])

    def test_serialization_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(20) * 10.0 ** rng.integers(-8, 8, size=20)
        w = rng.lognormal(0, 3, 20)
        y = rng.standard_normal(20)
        def fmt(values):
            return [repr(float(v)) for v in values]

        first = tmp_path / "first.csv"
        write_rows(first, ["x", "w", "y"], list(zip(fmt(x), fmt(w), fmt(y))))
        loaded = load_csv(first, self.schema())
        second = tmp_path / "second.csv"
        write_rows(
            second,
            ["x", "w", "y"],
            list(
                zip(
                    fmt(loaded.covariates[:, 0]),
                    fmt(loaded.raw_weights),
                    fmt(loaded.response),
                )
            ),
        )
        reloaded = load_csv(second, self.schema())
        np.testing.assert_array_equal(reloaded.covariates, loaded.covariates)
        np.testing.assert_array_equal(reloaded.raw_weights, loaded.raw_weights)
        np.testing.assert_array_equal(reloaded.response, loaded.response)
