"""JSON run configuration: schema, defaults and conversion to domain objects."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import jsonschema
import numpy as np

from .analysis import SteadyStateCriterion
from .core_rd import DEFAULT_DIVERGENCE_BOUND, ConfigurationError, ReactionParams, RingSpec
from .experiments import (
    DEFAULT_NOISE,
    DEFAULT_STRIDE,
    PARAM_NAMES,
    SweepConfig,
    TrajectorySchedule,
    TrajectorySegment,
)

_number = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_posint = {"type": "integer", "minimum": 1}

_axis = {
    "type": "object",
    "required": ["name"],
    "additionalProperties": False,
    "properties": {
        "name": {"enum": list(PARAM_NAMES)},
        "values": {"type": "array", "items": _number, "minItems": 1},
        "start": _number,
        "stop": _number,
        "num": _posint,
    },
    "oneOf": [{"required": ["values"]}, {"required": ["start", "stop", "num"]}],
}

SCHEMA = {
    "type": "object",
    "required": ["params"],
    "additionalProperties": False,
    "properties": {
        "ring": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_cells": {"type": "integer", "minimum": 8},
                "cell_length": {"type": "number", "exclusiveMinimum": 0},
                "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "params": {
            "type": "object",
            "required": ["beta", "gamma_act", "lam"],
            "additionalProperties": False,
            "properties": {**{name: _nonneg for name in PARAM_NAMES}, "reactions": {"type": "boolean"}},
        },
        "steady_state": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "deriv_tol": {"type": "number", "exclusiveMinimum": 0},
                "hold_steps": _posint,
                "max_steps": _posint,
            },
        },
        "seed": {"type": "integer"},
        "noise_sigma": _nonneg,
        "sample_stride": _posint,
        "divergence_bound": {"type": "number", "exclusiveMinimum": 0},
        "initial_angles": {"type": ["array", "null"], "items": _number},
        "sweep": {
            "type": "object",
            "required": ["axis1", "axis2"],
            "additionalProperties": False,
            "properties": {"axis1": _axis, "axis2": _axis, "trials": _posint, "base_seed": {"type": "integer"}},
        },
        "trajectory": {
            "type": "object",
            "required": ["segments"],
            "additionalProperties": False,
            "properties": {
                "reverse": {"type": "boolean"},
                "segments": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["param", "value"],
                        "additionalProperties": False,
                        "properties": {"param": {"enum": list(PARAM_NAMES)}, "value": _nonneg, "max_steps": _posint},
                    },
                },
            },
        },
    },
}

DEFAULTS = {
    "ring": {"n_cells": 36, "cell_length": 1.0, "dt": None},
    "params": {"alpha": 0.001, "beta": 225.0, "gamma_pas": 50.0, "gamma_act": 1.0, "lam": 50.0, "reactions": True},
    "steady_state": {"deriv_tol": 1e-6, "hold_steps": 1000, "max_steps": 200_000},
    "seed": 0,
    "noise_sigma": DEFAULT_NOISE,
    "sample_stride": DEFAULT_STRIDE,
    "divergence_bound": DEFAULT_DIVERGENCE_BOUND,
    "initial_angles": None,
}


def default_template() -> dict:
    """Every field with its default, plus the sweep and trajectory blocks
    used to reproduce the lobe map and the up-and-down ramp."""
    cfg = copy.deepcopy(DEFAULTS)
    cfg["sweep"] = {
        "axis1": {"name": "lam", "start": 25.0, "stop": 250.0, "num": 10},
        "axis2": {"name": "gamma_act", "start": 0.2, "stop": 2.0, "num": 10},
        "trials": 10,
        "base_seed": 0,
    }
    cfg["trajectory"] = {
        "reverse": True,
        "segments": [
            {"param": "gamma_act", "value": 0.4, "max_steps": 200_000},
            {"param": "gamma_act", "value": 0.8, "max_steps": 200_000},
            {"param": "gamma_act", "value": 1.8, "max_steps": 200_000},
        ],
    }
    return cfg


class ConfigError(ConfigurationError):
    """Malformed configuration file; message names the line or field."""


def _field_path(err: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def _describe(err: jsonschema.ValidationError) -> str:
    if err.validator == "required":
        missing = [r for r in err.validator_value if r not in (err.instance or {})]
        base = _field_path(err)
        names = ", ".join(f"{base}/{m}" if base != "<root>" else m for m in missing)
        return f"missing required field: {names}"
    if err.validator == "additionalProperties":
        return f"unknown field at {_field_path(err)}: {err.message}"
    return f"invalid value at {_field_path(err)}: {err.message}"


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse, validate and fill defaults.  Raises :class:`ConfigError`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        raise ConfigError(f"{source}: " + "; ".join(_describe(e) for e in errors))
    cfg = _merge(DEFAULTS, raw)
    n = cfg["ring"]["n_cells"]
    if cfg["initial_angles"] is not None and len(cfg["initial_angles"]) != n:
        raise ConfigError(f"{source}: invalid value at initial_angles: expected {n} angles")
    if cfg["params"]["gamma_act"] == 0 and cfg["params"]["lam"] > 0:
        raise ConfigError(f"{source}: invalid value at params/gamma_act: must be > 0 when lam is used")
    return cfg


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, str(path))


@dataclass
class RunConfig:
    raw: dict
    params: ReactionParams
    spec: RingSpec
    criterion: SteadyStateCriterion
    seed: int
    noise_sigma: float
    stride: int
    divergence_bound: float
    initial_angles: np.ndarray | None


def build_run(cfg: dict) -> RunConfig:
    try:
        params = ReactionParams(**cfg["params"])
        spec = RingSpec(**cfg["ring"])
        criterion = SteadyStateCriterion(**cfg["steady_state"])
    except (ConfigurationError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    angles = cfg.get("initial_angles")
    return RunConfig(
        raw=cfg,
        params=params,
        spec=spec,
        criterion=criterion,
        seed=int(cfg["seed"]),
        noise_sigma=float(cfg["noise_sigma"]),
        stride=int(cfg["sample_stride"]),
        divergence_bound=float(cfg["divergence_bound"]),
        initial_angles=None if angles is None else np.asarray(angles, dtype=float),
    )


def axis_values(axis: dict) -> list:
    if "values" in axis:
        return [float(v) for v in axis["values"]]
    return [float(v) for v in np.linspace(axis["start"], axis["stop"], axis["num"])]


def build_sweep(cfg: dict) -> SweepConfig:
    if "sweep" not in cfg:
        raise ConfigError("missing required field: sweep")
    run = build_run(cfg)
    sw = cfg["sweep"]
    try:
        return SweepConfig(
            axis1=(sw["axis1"]["name"], axis_values(sw["axis1"])),
            axis2=(sw["axis2"]["name"], axis_values(sw["axis2"])),
            fixed=run.params,
            trials=int(sw.get("trials", 10)),
            spec=run.spec,
            criterion=run.criterion,
            base_seed=int(sw.get("base_seed", cfg["seed"])),
            noise_sigma=run.noise_sigma,
        )
    except ConfigurationError as exc:
        raise ConfigError(str(exc)) from None


def build_schedule(cfg: dict) -> TrajectorySchedule:
    if "trajectory" not in cfg:
        raise ConfigError("missing required field: trajectory")
    tr = cfg["trajectory"]
    max_default = cfg["steady_state"]["max_steps"]
    try:
        return TrajectorySchedule(
            [TrajectorySegment(s["param"], s["value"], s.get("max_steps", max_default)) for s in tr["segments"]],
            reverse=bool(tr.get("reverse", False)),
        )
    except ConfigurationError as exc:
        raise ConfigError(str(exc)) from None
