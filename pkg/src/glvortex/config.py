"""Experiment configuration: JSON schema, validation, and domain/data construction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from . import conformal, curves
from .conformal import ConformalMap
from .errors import ConfigError

_NUM = {"type": "number"}
_POINT = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "required": ["domain", "data", "h", "eps_schedule"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "domain": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["circle", "analytic", "square", "polyline", "log_spiral"]},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "center": _POINT,
                "coefficients": {"type": "array", "minItems": 2,
                                 "items": {"anyOf": [_NUM, _POINT]}},
                "side": {"type": "number", "exclusiveMinimum": 0},
                "vertices": {"type": "array", "minItems": 3, "items": _POINT},
                "t_min": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.36},
                "smoothing": {"type": "number", "minimum": 0},
            },
        },
        "data": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["tangential", "power"]},
                "degree": {"type": "integer"},
                "rotation": _NUM,
                "phase_amplitude": _NUM,
                "phase_frequency": {"type": "integer"},
            },
        },
        "h": {"type": "number", "exclusiveMinimum": 0},
        "eps_schedule": {"type": "array", "minItems": 1,
                         "items": {"type": "number", "exclusiveMinimum": 0}},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iters": {"type": "integer", "minimum": 1},
                "grad_tol": {"type": "number", "exclusiveMinimum": 0},
                "init": {"enum": ["harmonic", "canonical"]},
                "eta0": {"type": "number", "exclusiveMinimum": 0},
                "j0": {"type": "integer", "minimum": 1},
                "gap_band": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "renorm": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "delta_list": {"type": "array", "minItems": 2, "items": {"type": "number"}},
                "w_map_grid": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
            },
        },
        "flow": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "source": {"enum": ["conformal", "gl"]},
                "s_min": {"type": "number", "exclusiveMaximum": 0},
                "n_s": {"type": "integer", "minimum": 8},
                "n_theta": {"type": "integer", "minimum": 8},
                "cr_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
    },
}


@dataclass
class ExperimentConfig:
    raw: dict
    name: str
    domain: dict
    data: dict
    h: float
    eps_schedule: list
    solver: dict = field(default_factory=dict)
    renorm: dict = field(default_factory=dict)
    flow: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None


def _path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    return "/".join(parts) if parts else "<root>"


def validate(raw: dict) -> ExperimentConfig:
    """Schema and semantic validation; ConfigError messages start with the field path."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise ConfigError(f"{_path(err)}: {err.message}")
    eps = [float(e) for e in raw["eps_schedule"]]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps_schedule: must be strictly decreasing")
    dom = raw["domain"]
    needs = {"analytic": "coefficients", "polyline": "vertices", "log_spiral": "t_min"}
    key = needs.get(dom["kind"])
    if key and key not in dom:
        raise ConfigError(f"domain/{key}: required for kind {dom['kind']!r}")
    data = raw["data"]
    if data["kind"] == "power" and "degree" not in data:
        raise ConfigError("data/degree: required for kind 'power'")
    return ExperimentConfig(raw, raw.get("name", "experiment"), dom, data, float(raw["h"]), eps,
                            raw.get("solver", {}), raw.get("renorm", {}), raw.get("flow", {}),
                            int(raw.get("seed", 0)), raw.get("output"))


def load(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"<file>: {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: invalid JSON ({exc})") from exc
    return validate(raw)


def _complex_list(values) -> list:
    return [complex(v[0], v[1]) if isinstance(v, list) else complex(v) for v in values]


def build_domain(spec: dict) -> tuple[curves.JordanCurve, ConformalMap | None]:
    """Curve and, when known in closed form, its uniformization."""
    kind = spec["kind"]
    if kind == "circle":
        r = float(spec.get("radius", 1.0))
        c = complex(*spec.get("center", [0.0, 0.0]))
        return curves.circle(r, c), conformal.taylor([c, r])
    if kind == "analytic":
        coeffs = _complex_list(spec["coefficients"])
        curve = curves.analytic_curve(coeffs)
        f = conformal.taylor(coeffs)
        conformal.check_injective(f)
        return curve, f
    if kind == "square":
        return curves.square(float(spec.get("side", 1.0))), None
    if kind == "polyline":
        return curves.polyline_curve(_complex_list(spec["vertices"])), None
    return curves.log_spiral_curve(float(spec["t_min"]), float(spec.get("smoothing", 0.0))), None


def build_data(spec: dict, curve: curves.JordanCurve) -> curves.BoundaryData:
    if spec["kind"] == "tangential":
        return curves.tangent_data(curve)
    return curves.power_data(int(spec["degree"]), float(spec.get("rotation", 0.0)),
                             float(spec.get("phase_amplitude", 0.0)), int(spec.get("phase_frequency", 1)))
