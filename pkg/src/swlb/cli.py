"""Command-line interface: fit models to CSV survey data, run simulation
scenarios, and run weight-resampler diagnostics.

All machine-readable output is canonical JSON (see :mod:`swlb.report_io`)
and is byte-identical for a fixed ``--seed`` regardless of ``--threads``.
Exit codes: 0 success, 2 input/configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bootstrap_engine import BootstrapConfig, percentile_interval, run_bootstrap, summarize
from .errors import ConfigError, InputError, NumericalError
from .estimators import fit_pmle, fit_unweighted, wald_interval
from .models import GaussianMeanModel, ProbitRegressionModel
from .report_io import (
    dumps_canonical,
    moment_diagnostic_to_dict,
    replication_report_to_csv,
    replication_report_to_dict,
    write_json,
)
from .sim_harness import METHOD_ORDER, Sim1Config, Sim2Config, run_monte_carlo
from .survey_data import ColumnSchema, load_csv, scale_weights
from .weight_resampler import ResampleScheme, moment_diagnostic

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

_METHOD_SCHEMES = {
    "swlb": ResampleScheme.SURVEY_ADJUSTED,
    "wlb-naive": ResampleScheme.DIRICHLET_CENTERED,
}
MIN_DIAGNOSTIC_DRAWS = 1000


def _resolve_threads(value) -> int:
    if value is not None:
        threads = value
    elif os.environ.get("SWLB_THREADS"):
        try:
            threads = int(os.environ["SWLB_THREADS"])
        except ValueError:
            raise ConfigError(
                f"SWLB_THREADS must be an integer, got {os.environ['SWLB_THREADS']!r}"
            ) from None
    else:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError(f"threads must be positive, got {threads}")
    return threads


def _comma_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _emit(document: dict, output: str | None) -> None:
    if output:
        write_json(output, document)
    else:
        sys.stdout.write(dumps_canonical(document))


def _named(names, values) -> dict:
    return {name: float(v) for name, v in zip(names, values)}


def cmd_fit(args) -> int:
    if not 0.0 < args.level < 1.0:
        raise ConfigError(f"--level must be in (0, 1), got {args.level}")
    bootstrap = args.method in _METHOD_SCHEMES
    if bootstrap and args.b < 2:
        raise ConfigError(f"--method {args.method} requires --b >= 2, got {args.b}")
    threads = _resolve_threads(args.threads)

    covariates = _comma_list(args.covariates) if args.covariates else []
    schema = ColumnSchema(
        weight_column=args.weight_col,
        response_column=args.response_col,
        covariate_columns=covariates,
    )
    data = load_csv(args.input, schema)
    scaled = scale_weights(data.raw_weights)

    if args.model == "gaussian-mean":
        model = GaussianMeanModel()
    else:
        model = ProbitRegressionModel(intercept=args.intercept, feature_names=covariates)
    names = model.param_names(data)

    started = time.perf_counter()
    diagnostics = {
        "n": data.n,
        "b_requested": args.b if bootstrap else None,
        "b_effective": None,
        "failures": {"total": 0, "reasons": {}},
        "seed": args.seed,
    }
    pmle_block = None
    if bootstrap:
        config = BootstrapConfig(b=args.b, seed=args.seed, scheme=_METHOD_SCHEMES[args.method])
        result = run_bootstrap(model, data, scaled, config, workers=threads)
        interval = percentile_interval(result, args.level)
        point = result.point_estimate
        _, sd = summarize(result)
        diagnostics["b_effective"] = result.b_effective
        diagnostics["failures"] = {
            "total": result.failures.total,
            "reasons": dict(result.failures.reasons),
        }
        extra = {"bootstrap_sd": _named(names, sd)}
        if args.report_pmle:
            fit = fit_pmle(model, data, scaled)
            pmle_block = {
                "point_estimate": _named(names, fit.theta_hat),
                "standard_errors": _named(names, fit.standard_errors()),
            }
    else:
        fit = fit_pmle(model, data, scaled) if args.method == "pmle" else fit_unweighted(model, data)
        interval = wald_interval(fit, args.level)
        point = fit.theta_hat
        extra = {"standard_errors": _named(names, fit.standard_errors())}
    runtime = time.perf_counter() - started

    document = {
        "report": "fit",
        "model": args.model,
        "method": args.method,
        "level": args.level,
        "parameters": names,
        "point_estimate": _named(names, point),
        "interval": {
            "method": interval.method,
            "level": interval.level,
            "lower": _named(names, interval.lower),
            "upper": _named(names, interval.upper),
        },
        **extra,
        "diagnostics": diagnostics,
    }
    if pmle_block is not None:
        document["pmle"] = pmle_block
    _emit(document, args.output)
    # Wall-clock time stays out of the report so reruns are byte-identical.
    print(f"fit completed in {runtime:.3f}s", file=sys.stderr)
    return EXIT_OK


_SCENARIO_KEYS = {
    1: {"simulation"} | {f.name for f in dataclasses.fields(Sim1Config)},
    2: {"simulation"} | {f.name for f in dataclasses.fields(Sim2Config)},
}


def load_scenario(path) -> tuple:
    """Parse a scenario file into a config plus its name."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("scenario file must contain a JSON object")
    simulation = raw.get("simulation")
    if simulation not in (1, 2):
        raise ConfigError('scenario key "simulation" must be 1 or 2')
    allowed = _SCENARIO_KEYS[simulation]
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown scenario key {key!r}")
    fields = {k: v for k, v in raw.items() if k != "simulation"}
    cls = Sim1Config if simulation == 1 else Sim2Config
    try:
        config = cls(**fields)
    except TypeError as exc:
        raise ConfigError(f"scenario file is incomplete: {exc}") from None
    return config, Path(path).stem


def cmd_simulate(args) -> int:
    config, name = load_scenario(args.scenario)
    overrides = {}
    if args.replications_override is not None:
        overrides["replications"] = args.replications_override
    if args.population_override is not None:
        overrides["population_size"] = args.population_override
    if overrides:
        config = dataclasses.replace(config, **overrides)

    methods = _comma_list(args.methods)
    threads = _resolve_threads(args.threads)
    report = run_monte_carlo(
        config,
        methods=methods,
        level=args.level,
        master_seed=args.seed,
        b=args.b,
        workers=threads,
    )
    document = replication_report_to_dict(report, scenario_name=name)

    base = Path(args.output)
    if base.suffix == ".json":
        base = base.with_suffix("")
    write_json(base.with_suffix(".json"), document)
    base.with_suffix(".csv").write_text(
        replication_report_to_csv(report, scenario_name=name), encoding="utf-8"
    )
    print(f"wrote {base.with_suffix('.json')} and {base.with_suffix('.csv')}", file=sys.stderr)
    return EXIT_OK


def cmd_check_weights(args) -> int:
    if args.draws < MIN_DIAGNOSTIC_DRAWS:
        raise ConfigError(f"--draws must be at least {MIN_DIAGNOSTIC_DRAWS}, got {args.draws}")
    if args.n < 2:
        raise ConfigError(f"--n must be at least 2, got {args.n}")
    try:
        pattern = [float(tok) for tok in _comma_list(args.weights)]
    except ValueError:
        raise ConfigError(f"--weights must be a comma list of numbers, got {args.weights!r}") from None
    if not pattern:
        raise ConfigError("--weights must name at least one weight")
    scheme = ResampleScheme.from_label(args.scheme)

    tiled = np.resize(np.asarray(pattern, dtype=np.float64), args.n)
    scaled = scale_weights(tiled)
    diag = moment_diagnostic(scheme, scaled, draws=args.draws, seed=args.seed)
    _emit(moment_diagnostic_to_dict(diag), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swlb",
        description=(
            "Survey-adjusted weighted likelihood bootstrap: fit models to "
            "weighted survey data, run simulation scenarios, and check "
            "weight-resampling moment conditions."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a model to a CSV survey dataset")
    fit.add_argument("--input", required=True, help="path to the CSV file")
    fit.add_argument("--weight-col", required=True, help="name of the weight column")
    fit.add_argument("--response-col", default=None, help="name of the response column")
    fit.add_argument(
        "--covariates", default="", help="comma-separated covariate column names"
    )
    fit.add_argument("--model", required=True, choices=["gaussian-mean", "probit"])
    fit.add_argument(
        "--method", required=True, choices=["pmle", "swlb", "unweighted", "wlb-naive"]
    )
    fit.add_argument("--b", type=int, default=2000, help="bootstrap replicates")
    fit.add_argument("--seed", type=int, default=0, help="master seed")
    fit.add_argument("--level", type=float, default=0.95, help="interval level")
    fit.add_argument("--threads", type=int, default=None, help="worker count")
    fit.add_argument("--output", default=None, help="write the JSON report here")
    fit.add_argument(
        "--intercept",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="include an intercept column (probit only)",
    )
    fit.add_argument(
        "--report-pmle",
        action="store_true",
        help="also report the PMLE alongside bootstrap results",
    )
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser("simulate", help="run a Monte Carlo scenario file")
    sim.add_argument("--scenario", required=True, help="path to a scenario JSON file")
    sim.add_argument(
        "--methods",
        default=",".join(METHOD_ORDER),
        help="comma-separated subset of " + ",".join(METHOD_ORDER),
    )
    sim.add_argument("--seed", type=int, default=0, help="master seed")
    sim.add_argument("--level", type=float, default=0.95, help="interval level")
    sim.add_argument("--b", type=int, default=2000, help="bootstrap replicates")
    sim.add_argument("--threads", type=int, default=None, help="worker count")
    sim.add_argument(
        "--output", required=True, help="base path for the .json and .csv reports"
    )
    sim.add_argument(
        "--replications-override", type=int, default=None, help="override replications"
    )
    sim.add_argument(
        "--population-override", type=int, default=None, help="override population size"
    )
    sim.set_defaults(func=cmd_simulate)

    check = sub.add_parser(
        "check-weights", help="empirical moment check of a weight scheme"
    )
    check.add_argument("--n", type=int, required=True, help="weight vector length")
    check.add_argument(
        "--weights",
        required=True,
        help="comma list of raw weights, recycled to length n and rescaled",
    )
    check.add_argument(
        "--scheme",
        default="survey-adjusted",
        choices=[s.value for s in ResampleScheme],
    )
    check.add_argument("--draws", type=int, required=True, help="Monte Carlo draws")
    check.add_argument("--seed", type=int, default=0, help="master seed")
    check.add_argument("--output", default=None, help="write the JSON report here")
    check.set_defaults(func=cmd_check_weights)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        _report_error(exc, EXIT_INPUT)
        return EXIT_INPUT
    except NumericalError as exc:
        _report_error(exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL


def _report_error(exc: Exception, code: int) -> None:
    message = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(message), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
