import json

import numpy as np
import pytest

from swlb import Sim1Config, run_monte_carlo
from swlb.report_io import (
    dumps_canonical,
    load_schema,
    replication_report_to_csv,
    replication_report_to_dict,
    REPLICATION_CSV_COLUMNS,
)


class TestCanonicalJson:
    def test_floats_round_trip_exactly(self):
        values = [0.1, 1.0 / 3.0, 0.95, 1e-300, 1e300, -0.0, 2.0**-1074, np.pi]
        text = dumps_canonical({"values": values})
        parsed = json.loads(text)["values"]
        for original, reparsed in zip(values, parsed):
            assert float(reparsed) == original

    def test_non_finite_rejected(self):
        for bad in (np.nan, np.inf, -np.inf):
            with pytest.raises(ValueError):
                dumps_canonical({"x": bad})

    def test_numpy_scalars_and_arrays(self):
        doc = {
            "i": np.int64(7),
            "f": np.float64(2.5),
            "flag": np.bool_(True),
            "vec": np.array([1.0, 2.0]),
        }
        parsed = json.loads(dumps_canonical(doc))
        assert parsed == {"i": 7, "f": 2.5, "flag": True, "vec": [1.0, 2.0]}

    def test_deterministic_and_order_preserving(self):
        doc = {"b": 1, "a": {"z": [1, 2, {"k": 0.25}], "y": None}}
        assert dumps_canonical(doc) == dumps_canonical(doc)
        assert list(json.loads(dumps_canonical(doc))) == ["b", "a"]

    def test_non_string_keys_rejected(self):
        with pytest.raises(TypeError):
            dumps_canonical({1: "x"})

    def test_unknown_types_rejected(self):
        with pytest.raises(TypeError):
            dumps_canonical({"x": {1, 2}})


@pytest.fixture(scope="module")
def small_report():
    config = Sim1Config(
        population_size=2000, sample_size=200, replications=4, rho=0.2, b1=0.0
    )
    return run_monte_carlo(config, ["pmle", "swlb"], 0.95, 3, b=100)


class TestReplicationReport:
    def test_dict_is_schema_valid(self, small_report):
        jsonschema = pytest.importorskip("jsonschema")
        document = json.loads(
            dumps_canonical(replication_report_to_dict(small_report, "unit"))
        )
        jsonschema.validate(document, load_schema("replication_report"))

    def test_csv_has_stable_columns(self, small_report):
        text = replication_report_to_csv(small_report, "unit")
        lines = text.strip().split("\n")
        assert lines[0].split(",") == REPLICATION_CSV_COLUMNS
        assert len(lines) == 1 + len(small_report.methods)
        first = lines[1].split(",")
        assert first[0] == "1"
        assert first[1] == "unit"
        assert first[2] == "pmle"

    def test_schema_name_validated(self):
        from swlb.errors import ConfigError

        with pytest.raises(ConfigError):
            load_schema("nope")
