"""Command-line front end: run sweeps, emit bound tables, self-validate.

Results are CSV with a fixed column order plus a sibling
``<stem>.manifest.json`` carrying everything needed to reproduce the file
exactly (config echo, seed, version).  Floats are written with ``repr``,
i.e. the shortest representation that parses back to the same value.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import scrb, sscrb
from .ces import (
    Gaussian,
    GeneralizedGaussian,
    StudentT,
    expected_q2psi2,
    expected_q2psi2_numeric,
    modular_moment,
    sample_modular_variate,
)
from .harness import (
    DEFAULT_LAMBDA_GRID,
    DEFAULT_S_GRID,
    ConfigError,
    ExperimentConfig,
    ShapeSweep,
    SnrSweep,
    run_sweep,
    scenario_for,
)

__all__ = ["parse_config", "config_to_dict", "run_self_checks", "main"]

CSV_HEADER = "sweep_param,sweep_value,estimator,mse,mse_stderr,sscrb,scrb,trials,failures"
BOUNDS_HEADER = "sweep_param,sweep_value,sscrb,scrb"

_CONFIG_KEYS = {
    "n_sensors",
    "n_snapshots",
    "frequencies",
    "rho",
    "noise_power",
    "distribution",
    "sweep",
    "estimators",
    "trials",
    "grid_size",
    "huber_q",
    "iaa_max_iter",
    "master_seed",
}


def _parse_distribution(raw, problems):
    if not isinstance(raw, dict) or "family" not in raw:
        problems.append('distribution must be an object with a "family" key')
        return None
    family = raw.get("family")
    extra = set(raw) - {"family", "lambda", "s"}
    if extra:
        problems.append(f"unknown distribution keys {sorted(extra)}")
    try:
        if family == "gaussian":
            return Gaussian()
        if family == "student-t":
            return StudentT(float(raw.get("lambda", 2.0)))
        if family == "generalized-gaussian":
            return GeneralizedGaussian(float(raw.get("s", 0.1)))
    except (TypeError, ValueError) as exc:
        problems.append(f"invalid distribution shape: {exc}")
        return None
    problems.append(
        f'unknown distribution family {family!r}; expected "gaussian", '
        '"student-t" or "generalized-gaussian"'
    )
    return None


def _parse_sweep(raw, distribution, problems):
    if not isinstance(raw, dict) or "kind" not in raw:
        problems.append('sweep must be an object with a "kind" key')
        return None
    kind = raw.get("kind")
    if kind == "snr":
        extra = set(raw) - {"kind", "values_db"}
        if extra:
            problems.append(f"unknown snr sweep keys {sorted(extra)}")
        values = raw.get("values_db", list(map(float,_defaults().sweep.values_db)))
        try:
            return SnrSweep(tuple(float(v) for v in values))
        except (TypeError, ValueError) as exc:
            problems.append(f"invalid snr sweep values: {exc}")
            return None
    if kind == "shape":
        extra = set(raw) - {"kind", "values", "snr1_db", "snr2_db"}
        if extra:
            problems.append(f"unknown shape sweep keys {sorted(extra)}")
        if "values" in raw:
            values = raw["values"]
        elif isinstance(distribution, GeneralizedGaussian):
            values = list(DEFAULT_S_GRID)
        else:
            values = list(DEFAULT_LAMBDA_GRID)
        try:
            return ShapeSweep(
                tuple(float(v) for v in values),
                snr1_db=float(raw.get("snr1_db", 15.0)),
                snr2_db=float(raw.get("snr2_db", 10.0)),
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"invalid shape sweep values: {exc}")
            return None
    problems.append(f'unknown sweep kind {kind!r}; expected "snr" or "shape"')
    return None


def _defaults() -> ExperimentConfig:
    return ExperimentConfig()


def parse_config(path) -> ExperimentConfig:
    """Load and validate a JSON experiment config; {} yields the paper defaults."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    problems = []
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        problems.append(f"unknown config keys {sorted(unknown)}")
    base = _defaults()
    distribution = base.distribution
    if "distribution" in raw:
        distribution = _parse_distribution(raw["distribution"], problems) or distribution
    sweep = base.sweep
    if "sweep" in raw:
        sweep = _parse_sweep(raw["sweep"], distribution, problems) or sweep
    kwargs = {}
    for key, cast in [
        ("n_sensors", int),
        ("n_snapshots", int),
        ("rho", float),
        ("noise_power", float),
        ("trials", int),
        ("grid_size", int),
        ("huber_q", float),
        ("iaa_max_iter", int),
        ("master_seed", int),
    ]:
        if key in raw:
            try:
                kwargs[key] = cast(raw[key])
            except (TypeError, ValueError):
                problems.append(f"config key {key!r} must be a number, got {raw[key]!r}")
    if "frequencies" in raw:
        try:
            kwargs["frequencies"] = tuple(float(v) for v in raw["frequencies"])
        except (TypeError, ValueError):
            problems.append(f"frequencies must be a list of numbers, got {raw['frequencies']!r}")
    if "estimators" in raw:
        est = raw["estimators"]
        if not isinstance(est, list) or not all(isinstance(e, str) for e in est):
            problems.append("estimators must be a list of names")
        else:
            kwargs["estimators"] = tuple(est)
    config = ExperimentConfig(distribution=distribution, sweep=sweep, **kwargs)
    problems.extend(config.violations())
    if problems:
        raise ConfigError(f"{path}: invalid configuration:\n  - " + "\n  - ".join(problems))
    return config


def config_to_dict(config: ExperimentConfig) -> dict:
    """JSON-serializable echo of a config (round-trips through parse_config)."""
    dg = config.distribution
    if isinstance(dg, Gaussian):
        dist = {"family": "gaussian"}
    elif isinstance(dg, StudentT):
        dist = {"family": "student-t", "lambda": dg.lam}
    else:
        dist = {"family": "generalized-gaussian", "s": dg.s}
    if isinstance(config.sweep, SnrSweep):
        sweep = {"kind": "snr", "values_db": list(config.sweep.values_db)}
    else:
        sweep = {
            "kind": "shape",
            "values": list(config.sweep.values),
            "snr1_db": config.sweep.snr1_db,
            "snr2_db": config.sweep.snr2_db,
        }
    return {
        "n_sensors": config.n_sensors,
        "n_snapshots": config.n_snapshots,
        "frequencies": list(config.frequencies),
        "rho": config.rho,
        "noise_power": config.noise_power,
        "distribution": dist,
        "sweep": sweep,
        "estimators": list(config.estimators),
        "trials": config.trials,
        "grid_size": config.grid_size,
        "huber_q": config.huber_q,
        "iaa_max_iter": config.iaa_max_iter,
        "master_seed": config.master_seed,
    }


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _manifest_path(output: Path) -> Path:
    return output.with_name(output.stem + ".manifest.json")


def _write_manifest(output: Path, config: ExperimentConfig, duration: float, failures: dict) -> None:
    manifest = {
        "tool": "cesdoa",
        "version": __version__,
        "master_seed": config.master_seed,
        "duration_seconds": duration,
        "failure_counts": failures,
        "config": config_to_dict(config),
    }
    _manifest_path(output).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    output = Path(args.output or "sweep.csv")
    started = time.time()
    try:
        result = run_sweep(config, threads=args.threads)
        lines = [CSV_HEADER]
        for r in result.rows:
            lines.append(
                ",".join(
                    [
                        r.sweep_param,
                        _fmt(r.sweep_value),
                        r.estimator,
                        _fmt(r.mse),
                        _fmt(r.mse_stderr),
                        _fmt(r.sscrb),
                        _fmt(r.scrb),
                        str(r.trials),
                        str(r.failures),
                    ]
                )
            )
        output.write_text("\n".join(lines) + "\n")
        failures = {}
        for r in result.rows:
            failures[r.estimator] = failures.get(r.estimator, 0) + r.failures
        _write_manifest(output, config, time.time() - started, failures)
    except Exception:
        output.unlink(missing_ok=True)
        _manifest_path(output).unlink(missing_ok=True)
        raise
    print(f"wrote {output} and {_manifest_path(output)}")
    return 0


def _cmd_bounds(args) -> int:
    config = _load_config(args)
    output = Path(args.output or "bounds.csv")
    started = time.time()
    sweep = config.sweep
    values = sweep.values_db if isinstance(sweep, SnrSweep) else sweep.values
    try:
        lines = [BOUNDS_HEADER]
        for value in values:
            scenario, dg = scenario_for(config, value)
            sscrb_index = sscrb(scenario, config.n_snapshots, dg).frobenius_index
            scrb_index = scrb(scenario, config.n_snapshots).frobenius_index
            lines.append(
                ",".join([config.sweep_param, _fmt(value), _fmt(sscrb_index), _fmt(scrb_index)])
            )
        output.write_text("\n".join(lines) + "\n")
        _write_manifest(output, config, time.time() - started, {})
    except Exception:
        output.unlink(missing_ok=True)
        _manifest_path(output).unlink(missing_ok=True)
        raise
    print(f"wrote {output} and {_manifest_path(output)}")
    return 0


def run_self_checks(seed: int = 0, verbose: bool = True) -> bool:
    """Closed-form-vs-quadrature and sampler goodness-of-fit self checks."""
    checks = []

    worst = 0.0
    for n in (2, 4, 8):
        for dg in (
            [Gaussian()]
            + [StudentT(lam) for lam in (1.5, 2.0, 3.0, 5.0, 10.0)]
            + [GeneralizedGaussian(s) for s in (0.1, 0.5, 1.0, 1.5)]
        ):
            closed = expected_q2psi2(dg, n)
            numeric = expected_q2psi2_numeric(dg, n)
            worst = max(worst, abs(numeric - closed) / closed)
    checks.append(("closed form vs quadrature for E{Q^2 psi^2}", worst <= 1e-8, f"max rel err {worst:.2e}"))

    worst = 0.0
    families = [Gaussian(), StudentT(2.0), GeneralizedGaussian(0.1)]
    for dg in families:
        worst = max(worst, abs(modular_moment(dg, 8, order=0) - 1.0))
        worst = max(worst, abs(modular_moment(dg, 8, order=1) - 8.0) / 8.0)
    checks.append(("modular pdf normalization and E{Q}=N by quadrature", worst <= 1e-8, f"max rel err {worst:.2e}"))

    from scipy import stats

    n = 8
    draws = 10**5
    crit = 1.6276 / np.sqrt(draws)  # 1% Kolmogorov-Smirnov critical value
    worst = 0.0
    rng = np.random.default_rng(seed)
    refs = [
        stats.gamma(a=n),
        stats.betaprime(n, 2.0, scale=1.0),
        stats.gengamma(a=n / 0.1, c=0.1, scale=GeneralizedGaussian(0.1).b(n) ** (1 / 0.1)),
    ]
    for dg, ref in zip(families, refs):
        q = sample_modular_variate(dg, n, rng, size=draws)
        stat = stats.kstest(q, ref.cdf).statistic
        worst = max(worst, stat / crit)
    checks.append(
        ("modular variate sampler goodness of fit (KS, 1% level)", worst <= 1.0, f"max stat/critical {worst:.2f}")
    )

    ok = True
    for name, passed, detail in checks:
        ok &= passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name} ({detail})")
    return ok


def _cmd_validate(args) -> int:
    return 0 if run_self_checks(seed=args.seed if args.seed is not None else 0) else 1


def _load_config(args) -> ExperimentConfig:
    config = parse_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    if getattr(args, "trials", None) is not None:
        config = replace(config, trials=args.trials)
    return config.validated()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cesdoa",
        description="Monte Carlo benchmark of DOA estimators against the semiparametric stochastic CRB",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (omit for paper defaults)")
    common.add_argument("--seed", type=int, default=None, help="override the master seed")

    p_sweep = sub.add_parser("sweep", parents=[common], help="run a Monte Carlo sweep, write CSV + manifest")
    p_sweep.add_argument("--output", help="CSV output path (default sweep.csv)")
    p_sweep.add_argument("--trials", type=int, default=None, help="override the trial count")
    p_sweep.add_argument("--threads", type=int, default=1, help="worker processes for trials")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bounds = sub.add_parser("bounds", parents=[common], help="emit the SCRB/SSCRB table only")
    p_bounds.add_argument("--output", help="CSV output path (default bounds.csv)")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_val = sub.add_parser("validate", parents=[common], help="run the numerical self checks")
    p_val.set_defaults(func=_cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
