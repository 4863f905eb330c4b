"""Canonical report serialization.

JSON is the canonical machine-readable output.  Floats are written with
17 significant digits, which round-trips 64-bit values exactly, so two
runs are byte-identical precisely when their numbers are bit-identical.
Dict key order is preserved as built, and report builders in this module
construct keys in a fixed order.
"""

from __future__ import annotations

import csv
import dataclasses
import importlib.resources
import io
import json

import numpy as np

from .errors import ConfigError
from .sim_harness import ReplicationReport

FLOAT_FORMAT = ".17g"

REPLICATION_CSV_COLUMNS = [
    "simulation",
    "scenario",
    "method",
    "estimand",
    "truth",
    "level",
    "b",
    "seed",
    "replications",
    "failures",
    "mse",
    "coverage",
    "mean_interval_width",
]


def _format_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError(f"reports must contain finite numbers, got {x!r}")
    return format(float(x), FLOAT_FORMAT)


def _encode(obj, pieces: list, indent: int, level: int) -> None:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        pieces.append("null")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        pieces.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        pieces.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        pieces.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        pieces.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            pieces.append("{}")
            return
        pieces.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            pieces.append(f"{pad_in}{json.dumps(key)}: ")
            _encode(value, pieces, indent, level + 1)
            pieces.append(",\n" if i < len(obj) - 1 else "\n")
        pieces.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(np.asarray(obj).tolist()) if isinstance(obj, np.ndarray) else list(obj)
        if not items:
            pieces.append("[]")
            return
        pieces.append("[\n")
        for i, value in enumerate(items):
            pieces.append(pad_in)
            _encode(value, pieces, indent, level + 1)
            pieces.append(",\n" if i < len(items) - 1 else "\n")
        pieces.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to canonical JSON")


def dumps_canonical(obj, indent: int = 2) -> str:
    """Serialize ``obj`` to deterministic, round-trip-exact JSON text."""
    pieces: list = []
    _encode(obj, pieces, indent, 0)
    pieces.append("\n")
    return "".join(pieces)


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_canonical(obj))


def scenario_to_dict(scenario) -> dict:
    return {f.name: getattr(scenario, f.name) for f in dataclasses.fields(scenario)}


def replication_report_to_dict(report: ReplicationReport, scenario_name: str = "") -> dict:
    """Stable-order dict form of a Monte Carlo report."""
    return {
        "report": "replication",
        "simulation": report.simulation,
        "scenario_name": scenario_name,
        "scenario": scenario_to_dict(report.scenario),
        "estimand": report.estimand,
        "truth": report.truth,
        "level": report.level,
        "b": report.b,
        "seed": report.master_seed,
        "replications": report.replications,
        "methods": {
            name: {
                "mse": summary.mse,
                "coverage": summary.coverage,
                "mean_interval_width": summary.mean_interval_width,
                "replications": summary.replications,
                "failures": summary.failures,
            }
            for name, summary in report.methods.items()
        },
    }


def replication_report_to_csv(report: ReplicationReport, scenario_name: str = "") -> str:
    """Flat CSV with one row per method, stable column order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPLICATION_CSV_COLUMNS)
    for name, summary in report.methods.items():
        writer.writerow(
            [
                report.simulation,
                scenario_name,
                name,
                report.estimand,
                _format_float(report.truth),
                _format_float(report.level),
                report.b,
                report.master_seed,
                summary.replications,
                summary.failures,
                _format_float(summary.mse),
                _format_float(summary.coverage),
                _format_float(summary.mean_interval_width),
            ]
        )
    return buffer.getvalue()


def moment_diagnostic_to_dict(diag: dict) -> dict:
    """Stable-order dict form of a weight moment diagnostic."""
    arrays = (
        "scaled_weights",
        "y_mean",
        "y_mean_se",
        "y_var",
        "y_var_se",
        "g_mean",
        "g_mean_se",
        "g_var",
        "g_var_se",
        "mean_z",
        "var_z",
    )
    out = {
        "report": "check-weights",
        "scheme": diag["scheme"],
        "draws": diag["draws"],
        "seed": diag["seed"],
        "n": diag["n"],
        "z_threshold": diag["z_threshold"],
        "mean_condition_pass": diag["mean_condition_pass"],
        "var_condition_pass": diag["var_condition_pass"],
    }
    for key in arrays:
        out[key] = [float(v) for v in np.asarray(diag[key])]
    return out


def load_schema(name: str) -> dict:
    """Load a bundled JSON schema (``fit_report``, ``replication_report``,
    or ``check_weights``)."""
    resource = importlib.resources.files("swlb.schemas").joinpath(f"{name}.schema.json")
    try:
        return json.loads(resource.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"no bundled schema named {name!r}") from None
