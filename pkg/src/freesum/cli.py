"""Seeded experiment driver: JSON configs in, reproducible JSON/CSV out.

Every command maps onto one library operation.  Configs are validated
against per-command schemas before anything runs; outputs echo the fully
resolved configuration (defaults and gate constants included) so a result
file alone suffices to rerun the experiment.  Exit codes encode verdicts:
0 holds/success, 2 violated, 3 inconclusive, 1 any error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import io
import itertools
import json
import math
import re
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from .errors import FreesumError, ParameterError
from .freeconv import free_convolve
from .freeentropy import chi, epi_deficit, log_energy, stam_deficit
from .geometry import (
    MonteCarloConfig,
    SetSpec,
    ThetaSpec,
    ball_example_exact,
    bll_symmetrization_check,
    check_corollary15,
    check_lemma13,
    check_theorem12,
    restricted_sum_volume,
)
from .measure import GridConfig, kolmogorov_distance, point_mass, standard_family
from .microstates import (
    StepFunctionSpec,
    check_sum_containment,
    empirical_chi,
    estimate_log_volume_omega,
    log_flag_constant,
    sum_spectrum_experiment,
    theta_fraction,
)

COMMANDS = (
    "entropy",
    "freeconv",
    "epi",
    "minkowski",
    "theorem12",
    "corollary15",
    "lemma13",
    "bll",
    "microstates-spectrum",
    "microstates-theta",
    "microstates-volume",
    "microstates-sum",
    "stam",
)

# commands whose results depend on random sampling; these require a seed
STOCHASTIC_COMMANDS = frozenset(
    (
        "minkowski",
        "theorem12",
        "corollary15",
        "bll",
        "microstates-spectrum",
        "microstates-theta",
        "microstates-volume",
        "microstates-sum",
    )
)

MAX_SWEEP_COMBINATIONS = 10_000

_EXIT_BY_VERDICT = {None: 0, "holds": 0, "violated": 2, "inconclusive": 3}


# -- schemas -------------------------------------------------------------------

_MEASURE_DEF = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {
            "enum": [
                "arcsine",
                "bernoulli",
                "free_poisson",
                "point_mass",
                "semicircle",
                "uniform",
            ]
        },
        "params": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}

_SET_DEF = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["ball", "box", "ellipsoid", "intersection", "scaled"]},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "dim": {"type": "integer", "minimum": 1},
        "center": {"type": "array", "items": {"type": "number"}},
        "half_widths": {"type": "array", "items": {"type": "number"}},
        "semi_axes": {"type": "array", "items": {"type": "number"}},
        "parts": {"type": "array", "items": {"$ref": "#/$defs/set"}, "minItems": 1},
        "base": {"$ref": "#/$defs/set"},
        "factor": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

_THETA_DEF = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {
            "enum": [
                "full",
                "inner_product_leq",
                "sum_norm_leq",
                "complement_fraction",
                "custom",
            ]
        },
        "c": {"type": "number"},
        "bound": {"type": "number"},
        "density": {"type": "number"},
        "predicate": {"type": "string"},
    },
    "additionalProperties": False,
}

_PROFILE_DEF = {
    "type": "object",
    "properties": {
        "quantiles_of": {"$ref": "#/$defs/measure"},
        "n_nodes": {"type": "integer", "minimum": 2},
        "nodes": {"type": "array", "items": {"type": "number"}, "minItems": 2},
        "values": {"type": "array", "items": {"type": "number"}, "minItems": 2},
    },
    "additionalProperties": False,
}

_MC_DEF = {
    "type": "object",
    "properties": {
        "pair_samples": {"type": "integer", "minimum": 1000},
        "grid_cells_per_axis": {"type": "integer", "minimum": 2},
        "n_streams": {"type": "integer", "minimum": 1},
        "pairing_rounds": {"type": "integer", "minimum": 1},
        "c": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "C": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

_GRID_DEF = {
    "type": "object",
    "properties": {
        "n_cells": {"type": "integer", "minimum": 2},
        "padding": {"type": "number", "minimum": 1},
    },
    "additionalProperties": False,
}

_DEFS = {
    "measure": _MEASURE_DEF,
    "set": _SET_DEF,
    "theta": _THETA_DEF,
    "profile": _PROFILE_DEF,
    "mc": _MC_DEF,
    "grid": _GRID_DEF,
}

_TOP_SCHEMA = {
    "type": "object",
    "required": ["command", "params"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "params": {"type": "object"},
        "seed": {"type": "integer"},
        "output": {"type": "string"},
        "format": {"enum": ["json", "csv"]},
        "threads": {"type": "integer", "minimum": 1},
        "sweep": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {"type": "array", "minItems": 1},
        },
    },
    "additionalProperties": False,
}


def _two_measures(*extra_required, **extra_props):
    schema = {
        "type": "object",
        "required": ["alpha", "beta", *extra_required],
        "properties": {
            "alpha": {"$ref": "#/$defs/measure"},
            "beta": {"$ref": "#/$defs/measure"},
            "grid": {"$ref": "#/$defs/grid"},
            **extra_props,
        },
        "additionalProperties": False,
    }
    return schema


def _pair_sets(*extra_required, **extra_props):
    return {
        "type": "object",
        "required": ["a", "b", "theta", *extra_required],
        "properties": {
            "a": {"$ref": "#/$defs/set"},
            "b": {"$ref": "#/$defs/set"},
            "theta": {"$ref": "#/$defs/theta"},
            "mc": {"$ref": "#/$defs/mc"},
            **extra_props,
        },
        "additionalProperties": False,
    }


_PARAM_SCHEMAS = {
    "entropy": {
        "type": "object",
        "required": ["mu"],
        "properties": {"mu": {"$ref": "#/$defs/measure"}, "grid": {"$ref": "#/$defs/grid"}},
        "additionalProperties": False,
    },
    "freeconv": _two_measures(),
    "epi": _two_measures(),
    "stam": _two_measures(),
    "lemma13": {
        "type": "object",
        "required": ["n", "rho"],
        "properties": {
            "n": {"type": "integer", "minimum": 2},
            "rho": {"type": "number", "exclusiveMinimum": 0},
            "grid_r0": {"type": "integer", "minimum": 2},
        },
        "additionalProperties": False,
    },
    "minkowski": {
        "type": "object",
        "properties": {
            "example": {"const": "ball"},
            "rho": {"type": "number"},
            "n": {"type": "integer", "minimum": 1},
            "a": {"$ref": "#/$defs/set"},
            "b": {"$ref": "#/$defs/set"},
            "theta": {"$ref": "#/$defs/theta"},
            "mc": {"$ref": "#/$defs/mc"},
        },
        "additionalProperties": False,
    },
    "theorem12": _pair_sets(),
    "corollary15": _pair_sets(
        "delta", delta={"type": "number", "minimum": 0, "maximum": 0.5}
    ),
    "bll": {
        "type": "object",
        "required": ["a", "b", "c_set"],
        "properties": {
            "a": {"$ref": "#/$defs/set"},
            "b": {"$ref": "#/$defs/set"},
            "c_set": {"$ref": "#/$defs/set"},
            "mc": {"$ref": "#/$defs/mc"},
        },
        "additionalProperties": False,
    },
    "microstates-spectrum": _two_measures(
        "k",
        k={"type": "integer", "minimum": 32},
        reference={"$ref": "#/$defs/measure"},
    ),
    "microstates-theta": {
        "type": "object",
        "required": ["h1", "h2", "k", "max_len", "eps", "trials"],
        "properties": {
            "h1": {"$ref": "#/$defs/profile"},
            "h2": {"$ref": "#/$defs/profile"},
            "k": {"type": "integer", "minimum": 2},
            "max_len": {"type": "integer", "minimum": 1},
            "eps": {"type": "number", "exclusiveMinimum": 0},
            "trials": {"type": "integer", "minimum": 100},
        },
        "additionalProperties": False,
    },
    "microstates-volume": {
        "type": "object",
        "required": ["h", "k", "mc_samples"],
        "properties": {
            "h": {"$ref": "#/$defs/profile"},
            "k": {"type": "integer", "minimum": 2, "maximum": 64},
            "mc_samples": {"type": "integer", "minimum": 10_000},
        },
        "additionalProperties": False,
    },
    "microstates-sum": {
        "type": "object",
        "required": ["h1", "h2", "k", "max_len", "eps", "trials"],
        "properties": {
            "h1": {"$ref": "#/$defs/profile"},
            "h2": {"$ref": "#/$defs/profile"},
            "k": {"type": "integer", "minimum": 2},
            "max_len": {"type": "integer", "minimum": 1},
            "eps": {"type": "number", "exclusiveMinimum": 0},
            "trials": {"type": "integer", "minimum": 100},
            "filter_max_len": {"type": "integer", "minimum": 1},
            "filter_eps": {"type": "number", "exclusiveMinimum": 0},
        },
        "additionalProperties": False,
    },
}


class ConfigError(Exception):
    """Config rejected before any computation ran."""


def _line_of_path(raw: str, keys) -> int:
    # walk key names left to right, advancing a text cursor, so repeated
    # field names (every measure has a "family") resolve to the right line
    pos = 0
    found = 0
    for key in keys:
        if not isinstance(key, str):
            continue
        match = re.search(r'"%s"\s*:' % re.escape(key), raw[pos:])
        if match is None:
            break
        found = pos + match.start()
        pos = found + 1
    return raw.count("\n", 0, found) + 1


def _validate(config: dict, raw: str, path: str) -> None:
    validator = jsonschema.Draft202012Validator(_TOP_SCHEMA)
    for err in sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path)):
        line = _line_of_path(raw, list(err.absolute_path) or ["command"])
        raise ConfigError(f"{path}:{line}: {err.message}")
    command = config["command"]
    schema = {"$defs": _DEFS, **_PARAM_SCHEMAS[command]}
    validator = jsonschema.Draft202012Validator(schema)
    for err in sorted(
        validator.iter_errors(config["params"]), key=lambda e: list(e.absolute_path)
    ):
        line = _line_of_path(raw, ["params", *err.absolute_path])
        raise ConfigError(f"{path}:{line}: params: {err.message}")
    if "sweep" in config and config.get("format") == "json":
        raise ConfigError(
            f"{path}:{_line_of_path(raw, ['format'])}: "
            "sweep output is one CSV row per combination; format must be csv or omitted"
        )
    exact_mode = command == "minkowski" and config["params"].get("example") == "ball"
    if command in STOCHASTIC_COMMANDS and not exact_mode and "seed" not in config:
        raise ConfigError(
            f"{path}:{_line_of_path(raw, ['command'])}: "
            f"seed is required for stochastic command {command!r}"
        )


# -- config object parsers -------------------------------------------------------


def _parse_measure(spec: dict, grid: GridConfig | None = None):
    family = spec["family"]
    params = spec.get("params", [])
    if family == "point_mass":
        if len(params) != 1:
            raise ParameterError("point_mass takes exactly one parameter")
        return point_mass(params[0], grid)
    return standard_family(family, params, grid)


def _parse_grid(spec: dict | None) -> GridConfig | None:
    if spec is None:
        return None
    return GridConfig(**spec)


def _parse_set(spec: dict) -> SetSpec:
    kind = spec["kind"]
    center = spec.get("center")
    try:
        if kind == "ball":
            return SetSpec.ball(spec["radius"], spec["dim"], center)
        if kind == "box":
            return SetSpec.box(spec["half_widths"], center)
        if kind == "ellipsoid":
            return SetSpec.ellipsoid(spec["semi_axes"], center)
        if kind == "intersection":
            return SetSpec.intersection(*(_parse_set(p) for p in spec["parts"]))
        return SetSpec.scaled(_parse_set(spec["base"]), spec["factor"])
    except KeyError as missing:
        raise ParameterError(f"set kind {kind!r} needs field {missing}") from None


def _parse_theta(spec: dict) -> ThetaSpec:
    kind = spec["kind"]
    try:
        if kind == "full":
            return ThetaSpec.full()
        if kind == "inner_product_leq":
            return ThetaSpec.inner_product_leq(spec["c"])
        if kind == "sum_norm_leq":
            return ThetaSpec.sum_norm_leq(spec["bound"])
        if kind == "complement_fraction":
            return ThetaSpec.complement_fraction(spec["density"])
        return ThetaSpec.custom(spec["predicate"])
    except KeyError as missing:
        raise ParameterError(f"theta kind {kind!r} needs field {missing}") from None


def _parse_profile(spec: dict) -> StepFunctionSpec:
    if "quantiles_of" in spec:
        mu = _parse_measure(spec["quantiles_of"])
        return StepFunctionSpec.from_quantiles(mu, spec.get("n_nodes", 129))
    if "nodes" in spec and "values" in spec:
        return StepFunctionSpec(tuple(spec["nodes"]), tuple(spec["values"]))
    raise ParameterError("profile needs either quantiles_of or nodes+values")


def _mc_config(params: dict, seed: int, threads: int) -> MonteCarloConfig:
    return MonteCarloConfig(**params.get("mc", {}), seed=seed, threads=threads)


# -- command handlers --------------------------------------------------------------


def _grid_echo(grid: GridConfig | None) -> dict:
    resolved = grid or GridConfig()
    return {"n_cells": resolved.n_cells, "padding": resolved.padding}


def _run_entropy(params, seed, threads):
    grid = _parse_grid(params.get("grid"))
    mu = _parse_measure(params["mu"], grid)
    value = chi(mu)
    result = {
        "chi": value,
        "log_energy": log_energy(mu),
        "degenerate": value == float("-inf"),
    }
    return result, None, {"grid": _grid_echo(grid)}


def _run_freeconv(params, seed, threads):
    grid = _parse_grid(params.get("grid"))
    out = free_convolve(
        _parse_measure(params["alpha"], grid), _parse_measure(params["beta"], grid), grid=grid
    )
    result = {"measure": out.to_json(), "mean": out.mean(), "variance": out.variance()}
    return result, None, {"grid": _grid_echo(grid)}


def _run_epi(params, seed, threads):
    grid = _parse_grid(params.get("grid"))
    report = epi_deficit(
        _parse_measure(params["alpha"], grid), _parse_measure(params["beta"], grid), grid=grid
    )
    scale = max(report.power_sum, report.power_alpha + report.power_beta)
    tol = max(report.quadrature_error_estimate, 0.02 * scale)
    if report.deficit >= -tol:
        verdict = "holds"
    elif report.deficit < -3.0 * tol:
        verdict = "violated"
    else:
        verdict = "inconclusive"
    result = {"report": report.to_json(), "tolerance": tol, "verdict": verdict}
    return result, verdict, {"grid": _grid_echo(grid)}


def _run_stam(params, seed, threads):
    grid = _parse_grid(params.get("grid"))
    value = stam_deficit(
        _parse_measure(params["alpha"], grid), _parse_measure(params["beta"], grid), grid=grid
    )
    # conjectured sign only; recorded, never gating
    return {"stam_deficit": value}, None, {"grid": _grid_echo(grid)}


def _run_lemma13(params, seed, threads):
    out = check_lemma13(params["n"], params["rho"], params.get("grid_r0", 33))
    report = out["report"]
    result = {"c1_estimate": out["c1_estimate"], "report": report.to_json()}
    return result, report.verdict, {"grid_r0": params.get("grid_r0", 33)}


def _run_minkowski(params, seed, threads):
    if params.get("example") == "ball":
        for field in ("rho", "n"):
            if field not in params:
                raise ParameterError(f"ball example needs field {field!r}")
        out = ball_example_exact(params["rho"], params["n"])
        scale = 1.0 + params["rho"] ** 2
        verdict = "holds" if abs(out["equality_gap"]) <= 1e-9 * scale else "violated"
        result = {**out, "verdict": verdict}
        return result, verdict, {"mode": "exact"}
    for field in ("a", "b", "theta"):
        if field not in params:
            raise ParameterError(f"monte-carlo mode needs field {field!r}")
    cfg = _mc_config(params, seed, threads)
    out = restricted_sum_volume(
        _parse_set(params["a"]), _parse_set(params["b"]), _parse_theta(params["theta"]), cfg
    )
    return out, None, {"mode": "monte-carlo", "mc": dataclasses.asdict(cfg)}


def _run_theorem12(params, seed, threads):
    cfg = _mc_config(params, seed, threads)
    report = check_theorem12(
        _parse_set(params["a"]), _parse_set(params["b"]), _parse_theta(params["theta"]), cfg
    )
    return {"report": report.to_json()}, report.verdict, {"mc": dataclasses.asdict(cfg)}


def _run_corollary15(params, seed, threads):
    cfg = _mc_config(params, seed, threads)
    report = check_corollary15(
        _parse_set(params["a"]),
        _parse_set(params["b"]),
        _parse_theta(params["theta"]),
        params["delta"],
        cfg,
    )
    return {"report": report.to_json()}, report.verdict, {"mc": dataclasses.asdict(cfg)}


def _run_bll(params, seed, threads):
    cfg = _mc_config(params, seed, threads)
    report = bll_symmetrization_check(
        _parse_set(params["a"]), _parse_set(params["b"]), _parse_set(params["c_set"]), cfg
    )
    return {"report": report.to_json()}, report.verdict, {"mc": dataclasses.asdict(cfg)}


def _run_microstates_spectrum(params, seed, threads):
    emp = sum_spectrum_experiment(
        _parse_measure(params["alpha"]), _parse_measure(params["beta"]), params["k"], seed
    )
    eigenvalues = [loc for loc, _ in emp.atoms]
    result = {"measure": emp.to_json(), "empirical_chi": empirical_chi(eigenvalues)}
    if "reference" in params:
        result["ks_to_reference"] = kolmogorov_distance(
            emp, _parse_measure(params["reference"])
        )
    return result, None, {"k": params["k"]}


def _run_microstates_theta(params, seed, threads):
    est = theta_fraction(
        _parse_profile(params["h1"]),
        _parse_profile(params["h2"]),
        params["k"],
        params["max_len"],
        params["eps"],
        params["trials"],
        seed,
    )
    return dataclasses.asdict(est), None, {"trials": params["trials"]}


def _run_microstates_volume(params, seed, threads):
    value = estimate_log_volume_omega(
        _parse_profile(params["h"]), params["k"], params["mc_samples"], seed
    )
    result = {
        "normalized_log_volume": value,
        "log_flag_constant": log_flag_constant(params["k"]),
    }
    return result, None, {"mc_samples": params["mc_samples"]}


def _run_microstates_sum(params, seed, threads):
    out = check_sum_containment(
        _parse_profile(params["h1"]),
        _parse_profile(params["h2"]),
        params["k"],
        params["max_len"],
        params["eps"],
        params["trials"],
        seed,
        filter_max_len=params.get("filter_max_len"),
        filter_eps=params.get("filter_eps"),
    )
    verdict = "inconclusive" if out.inconclusive else None
    resolved = {"filter_max_len": out.filter_max_len, "filter_eps": out.filter_eps}
    return dataclasses.asdict(out), verdict, resolved


_HANDLERS = {
    "entropy": _run_entropy,
    "freeconv": _run_freeconv,
    "epi": _run_epi,
    "minkowski": _run_minkowski,
    "theorem12": _run_theorem12,
    "corollary15": _run_corollary15,
    "lemma13": _run_lemma13,
    "bll": _run_bll,
    "microstates-spectrum": _run_microstates_spectrum,
    "microstates-theta": _run_microstates_theta,
    "microstates-volume": _run_microstates_volume,
    "microstates-sum": _run_microstates_sum,
    "stam": _run_stam,
}


# -- serialization ------------------------------------------------------------------


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if x == float("inf"):
        return "Infinity"
    if x == float("-inf"):
        return "-Infinity"
    return format(x, ".17g")


def _jsonable(obj):
    if hasattr(obj, "to_json"):
        return _jsonable(obj.to_json())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise ParameterError(f"cannot serialize value of type {type(obj).__name__}")


def render_json(obj, indent: int = 0) -> str:
    """Canonical JSON: sorted keys, floats at 17 significant digits.

    Nonfinite numbers appear as bare Infinity/-Infinity/NaN tokens, the
    widely parsed extension for experiment records.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f"{inner}{json.dumps(str(k))}: {render_json(v, indent + 1)}"
            for k, v in sorted(obj.items())
        ]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        parts = [f"{inner}{render_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if obj is None:
        return "null"
    return json.dumps(obj)


def _flatten(obj, prefix: str = "") -> dict:
    out = {}
    if isinstance(obj, dict):
        for k, v in sorted(obj.items()):
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = obj
    return out


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _format_float(value)
    return str(value)


def render_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(col)) for col in columns])
    return buf.getvalue()


# -- driver --------------------------------------------------------------------------


def _set_dotted(params: dict, path: str, value) -> None:
    keys = path.split(".")
    node = params
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ParameterError(f"sweep path {path!r} crosses a non-object")
    node[keys[-1]] = value


def run_command(command: str, params: dict, seed: int, threads: int):
    """Dispatch one experiment; returns (result, verdict, resolved-defaults)."""
    result, verdict, resolved = _HANDLERS[command](params, seed, threads)
    return _jsonable(result), verdict, _jsonable(resolved)


def _document(config: dict, seed: int, threads: int, result, verdict, resolved) -> dict:
    return {
        "command": config["command"],
        "params": _jsonable(config["params"]),
        "resolved": resolved,
        "result": result,
        "seed": seed,
        "threads": threads,
        "verdict": verdict,
    }


def _run_single(config: dict, seed: int, threads: int, fmt: str):
    result, verdict, resolved = run_command(config["command"], config["params"], seed, threads)
    doc = _document(config, seed, threads, result, verdict, resolved)
    if fmt == "csv":
        flat = _flatten(doc)
        columns = list(flat)
        text = render_csv([flat], columns)
    else:
        text = render_json(doc) + "\n"
    return text, _EXIT_BY_VERDICT[verdict]


def _run_sweep(config: dict, seed: int, threads: int):
    sweep = config["sweep"]
    keys = sorted(sweep)
    total = math.prod(len(sweep[k]) for k in keys)
    if total > MAX_SWEEP_COMBINATIONS:
        raise ConfigError(
            f"sweep grid has {total} combinations; limit is {MAX_SWEEP_COMBINATIONS}"
        )
    rows = []
    result_columns: list[str] = []
    seen = set()
    for combo in itertools.product(*(sweep[k] for k in keys)):
        params = copy.deepcopy(config["params"])
        for key, value in zip(keys, combo):
            _set_dotted(params, key, value)
        row = {key: value for key, value in zip(keys, combo)}
        try:
            result, verdict, _ = run_command(config["command"], params, seed, threads)
            flat = _flatten(result)
            for col in flat:
                if col not in seen:
                    seen.add(col)
                    result_columns.append(col)
            row.update(flat)
            row["verdict"] = verdict or ""
            row["error"] = ""
        except (FreesumError, ConfigError) as err:
            row["verdict"] = ""
            row["error"] = str(err)
        rows.append(row)
    columns = keys + sorted(result_columns) + ["verdict", "error"]
    return render_csv(rows, columns), 0


def run(config: dict, raw: str = "", path: str = "<config>") -> tuple[str, int, str | None]:
    """Validate and execute a config; returns (text, exit_code, output_path)."""
    _validate(config, raw, path)
    seed = config.get("seed", 0)
    threads = config.get("threads", 1)
    fmt = config.get("format", "json")
    if "sweep" in config:
        text, code = _run_sweep(config, seed, threads)
    else:
        text, code = _run_single(config, seed, threads, fmt)
    return text, code, config.get("output")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="freesum",
        description="Seeded free-probability and restricted-sum experiments.",
    )
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--output", help="override the config output path")
    parser.add_argument("--format", choices=("json", "csv"), help="override output format")
    parser.add_argument("--threads", type=int, help="worker threads; never changes results")
    args = parser.parse_args(argv)

    started = time.monotonic()
    try:
        raw = Path(args.config).read_text()
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        config = json.loads(raw)
    except json.JSONDecodeError as err:
        print(f"error: {args.config}:{err.lineno}: {err.msg}", file=sys.stderr)
        return 1
    if not isinstance(config, dict):
        print(f"error: {args.config}:1: config must be a JSON object", file=sys.stderr)
        return 1
    for key, value in (
        ("seed", args.seed),
        ("output", args.output),
        ("format", args.format),
        ("threads", args.threads),
    ):
        if value is not None:
            config[key] = value
    try:
        text, code, output = run(config, raw, args.config)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except FreesumError as err:
        detail = getattr(err, "diagnostics", None)
        suffix = f" diagnostics={detail}" if detail else ""
        print(f"error: {err}{suffix}", file=sys.stderr)
        return 1
    if output:
        out_path = Path(output)
        out_path.write_text(text)
        sidecar = {
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "elapsed_seconds": time.monotonic() - started,
            "config_path": str(args.config),
        }
        Path(str(out_path) + ".meta.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
