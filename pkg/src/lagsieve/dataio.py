"""File formats: dataset CSV, key-value configs, and JSON result files.

Dataset CSV carries the header ``id,s1,s2,w_tilde,location``; lines starting
with ``#`` are metadata comments and are skipped on read.  Config files are
flat ``key = value`` pairs; generator and exposure settings share one
format, e.g.::

    n = 40
    seed = 1
    w.dist = exponential:0.3820225
    incubation.dist = lognormal:1.644,0.363
    generation.dist = weibull:2.826,5.665
    location.0.prob = 0.65
    location.0.rate = 0.0
    location.1.prob = 0.35
    location.1.rate = 0.1386294361119891
"""

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .densities import parse_density
from .errors import ValidationError
from .fitting import FitOptions, FitResult, StartDiagnostics
from .laguerre import LaguerreDensity
from .likelihood import ExposureModel, Observation, QuadratureConfig
from .simulate import GeneratorConfig

DATASET_HEADER = ["id", "s1", "s2", "w_tilde", "location"]


def _meta_lines(meta):
    lines = [f"# lagsieve {__version__}"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key} = {value}")
    return lines


def write_dataset(path, observations, meta=None):
    path = Path(path)
    with path.open("w", newline="") as handle:
        for line in _meta_lines(meta):
            handle.write(line + "\n")
        writer = csv.writer(handle)
        writer.writerow(DATASET_HEADER)
        for index, obs in enumerate(observations):
            writer.writerow([index, repr(obs.s1), repr(obs.s2), repr(obs.w_tilde), obs.location])


def read_dataset(path):
    path = Path(path)
    with path.open(newline="") as handle:
        rows = [line for line in handle if not line.startswith("#")]
    reader = csv.DictReader(rows)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != DATASET_HEADER:
        raise ValidationError(
            f"{path}: expected header {','.join(DATASET_HEADER)!r}, got {reader.fieldnames!r}"
        )
    observations = []
    for line_no, row in enumerate(reader, start=2):
        try:
            observations.append(
                Observation(
                    s1=float(row["s1"]),
                    s2=float(row["s2"]),
                    w_tilde=float(row["w_tilde"]),
                    location=int(row["location"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{path}: bad record on line {line_no}: {exc}") from None
    return observations


def parse_keyvalue(text):
    """Parse ``key = value`` lines; '#' starts a comment, blanks are skipped."""
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValidationError(f"line {line_no}: expected 'key = value', got {raw!r}")
        values[key.strip()] = value.strip()
    return values


def read_keyvalue(path):
    return parse_keyvalue(Path(path).read_text())


def _location_table(values, field):
    table = {}
    for key, value in values.items():
        parts = key.split(".")
        if len(parts) == 3 and parts[0] == "location" and parts[2] == field:
            try:
                table[int(parts[1])] = float(value)
            except ValueError as exc:
                raise ValidationError(f"bad value for {key}: {exc}") from None
    return table


def exposure_model_from_values(values):
    rates = _location_table(values, "rate")
    if not rates:
        raise ValidationError("config defines no location.<label>.rate entries")
    return ExposureModel(rates)


def load_exposure_model(path):
    return exposure_model_from_values(read_keyvalue(path))


def generator_config_from_values(values, n=None, seed=None):
    """Build a GeneratorConfig from parsed key-values; n and seed override."""
    kwargs = {}
    if "w.dist" in values:
        kwargs["window"] = parse_density(values["w.dist"])
    if "incubation.dist" in values:
        kwargs["incubation"] = parse_density(values["incubation.dist"])
    if "generation.dist" in values:
        kwargs["generation"] = parse_density(values["generation.dist"])
    probs = _location_table(values, "prob")
    rates = _location_table(values, "rate")
    if probs:
        kwargs["location_probs"] = probs
    if rates:
        kwargs["rates"] = rates
    n = n if n is not None else int(values.get("n", 0) or 0)
    seed = seed if seed is not None else int(values.get("seed", 0) or 0)
    if n < 1:
        raise ValidationError("sample size n must be given (config key 'n' or --n)")
    return GeneratorConfig(n=n, seed=seed, **kwargs)


def load_generator_config(path, n=None, seed=None):
    return generator_config_from_values(read_keyvalue(path), n=n, seed=seed)


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_laguerre_density(path):
    payload = json.loads(Path(path).read_text())
    if "theta" in payload:
        return LaguerreDensity.from_dict(payload)
    raise ValidationError(f"{path}: no coefficient vector found")


def fit_result_to_dict(result: FitResult, options: FitOptions):
    return {
        "tool": "lagsieve",
        "version": __version__,
        "seed": result.seed,
        "n_obs": result.n_obs,
        "m_incubation": result.m_incubation,
        "m_generation": result.m_generation,
        "incubation": result.incubation.to_dict(),
        "generation": result.generation.to_dict(),
        "loglik": result.loglik,
        "bic": result.bic,
        "starts": [
            {
                "start": s.start,
                "loglik": s.loglik,
                "iterations": s.iterations,
                "converged": s.converged,
            }
            for s in result.starts
        ],
        "options": {
            "n_starts": options.n_starts,
            "max_iters": options.max_iters,
            "simplex_tol": options.simplex_tol,
            "nodes_t": options.quadrature.nodes_t,
            "nodes_y": options.quadrature.nodes_y,
            "log_floor": options.quadrature.log_floor,
        },
    }


def fit_result_from_dict(payload):
    options = payload.get("options", {})
    quadrature = QuadratureConfig(
        nodes_t=int(options.get("nodes_t", 64)),
        nodes_y=int(options.get("nodes_y", 64)),
        log_floor=float(options.get("log_floor", 1e-300)),
    )
    result = FitResult(
        incubation=LaguerreDensity.from_dict(payload["incubation"]),
        generation=LaguerreDensity.from_dict(payload["generation"]),
        loglik=float(payload["loglik"]),
        bic=float(payload["bic"]),
        starts=tuple(
            StartDiagnostics(
                start=int(s["start"]),
                loglik=float(s["loglik"]),
                iterations=int(s["iterations"]),
                converged=bool(s["converged"]),
            )
            for s in payload.get("starts", [])
        ),
        seed=int(payload.get("seed", 0)),
        n_obs=int(payload.get("n_obs", 0)),
    )
    return result, quadrature


def read_fit_result(path):
    return fit_result_from_dict(json.loads(Path(path).read_text()))


def study_report_to_dict(report):
    return {
        "tool": "lagsieve",
        "version": __version__,
        "m_incubation": report.m_incubation,
        "m_generation": report.m_generation,
        "growth_rate": report.growth_rate,
        "n_replications": report.n_replications,
        "fit_seed": report.fit_seed,
        "config": dict(report.config_echo),
        "quantile_levels": list(report.quantile_levels),
        "failures": [{"replication": k, "error": msg} for k, msg in report.failures],
        "summaries": report.summaries(),
        "rows": [_study_row_to_dict(row) for row in report.rows],
    }


def _study_row_to_dict(row):
    return {
        "replication": row.replication,
        "data_seed": row.data_seed,
        "fit_seed": row.fit_seed,
        "loglik": row.loglik,
        "bic": row.bic,
        "hellinger_sq_incubation": row.hellinger_sq_incubation,
        "hellinger_sq_generation": row.hellinger_sq_generation,
        "hellinger_sq_incubation_target": row.hellinger_sq_incubation_target,
        "hellinger_sq_generation_target": row.hellinger_sq_generation_target,
        "r0": row.r0,
        "presymptomatic_probability": row.presymptomatic_probability,
        "incubation_quantiles": {str(p): v for p, v in row.incubation_quantiles.items()},
        "generation_quantiles": {str(p): v for p, v in row.generation_quantiles.items()},
    }


def write_study_report(directory, report, meta=None):
    """Write report.json plus a flat replications.csv for external plotting."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_json(directory / "report.json", study_report_to_dict(report))
    levels = report.quantile_levels
    columns = [
        "replication", "data_seed", "fit_seed", "loglik", "bic",
        "hellinger_sq_incubation", "hellinger_sq_generation",
        "hellinger_sq_incubation_target", "hellinger_sq_generation_target",
        "r0", "presymptomatic_probability",
    ]
    columns += [f"incubation_q{int(100 * p)}" for p in levels]
    columns += [f"generation_q{int(100 * p)}" for p in levels]
    with (directory / "replications.csv").open("w", newline="") as handle:
        for line in _meta_lines(meta):
            handle.write(line + "\n")
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in report.rows:
            record = [
                row.replication, row.data_seed, row.fit_seed,
                repr(row.loglik), repr(row.bic),
                repr(row.hellinger_sq_incubation), repr(row.hellinger_sq_generation),
                repr(row.hellinger_sq_incubation_target),
                repr(row.hellinger_sq_generation_target),
                repr(row.r0), repr(row.presymptomatic_probability),
            ]
            record += [repr(row.incubation_quantiles[p]) for p in levels]
            record += [repr(row.generation_quantiles[p]) for p in levels]
            writer.writerow(record)
    return directory / "report.json"


def write_bootstrap_result(path, result, extra=None, meta=None):
    """Write the test outcome as JSON plus a flat CSV of simulated statistics."""
    path = Path(path)
    payload = result.to_dict()
    payload.update(extra or {})
    write_json(path, payload)
    csv_path = path.with_suffix(".csv")
    with csv_path.open("w", newline="") as handle:
        for line in _meta_lines(meta):
            handle.write(line + "\n")
        writer = csv.writer(handle)
        writer.writerow(["simulation", "hellinger_sq_incubation", "hellinger_sq_generation"])
        for index, (inc, gen) in enumerate(zip(result.sim_incubation, result.sim_generation)):
            writer.writerow([index, repr(float(inc)), repr(float(gen))])
    return csv_path


def write_curve(path, density, grid, meta=None):
    """Write an (x, density, cdf) table for external plotting."""
    grid = np.asarray(grid, dtype=float)
    with Path(path).open("w", newline="") as handle:
        for line in _meta_lines(meta):
            handle.write(line + "\n")
        writer = csv.writer(handle)
        writer.writerow(["x", "density", "cdf"])
        for x in grid:
            writer.writerow([repr(float(x)), repr(float(density.pdf(x))), repr(float(density.cdf(x)))])
