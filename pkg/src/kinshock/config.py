"""Run configuration: YAML documents with a fixed schema.

A document looks like::

    scenario: profile
    model: {preset: demo-m1}
    seed: 0
    out: runs/demo
    workers: 1
    params:
      eps: 0.04

Unknown keys are rejected at every level; all violations are reported at once.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError

SCENARIOS = ("check-hypotheses", "chapman-enskog", "reduce", "resolvent-probe",
             "stable-manifold", "center-taylor", "profile", "sweep")

# name -> (kind, default); kind "pos" means a positive float
PARAM_SCHEMA = {
    "check-hypotheses": {"tol": ("pos", 1e-10)},
    "chapman-enskog": {"tol": ("pos", 1e-10), "sweep_half_width": ("pos", 0.1),
                       "sweep_points": ("int", 21)},
    "reduce": {"tol": ("pos", 1e-10)},
    "resolvent-probe": {"tol": ("pos", 1e-6), "samples": ("int", 50), "grid_h": ("pos", 1e-2),
                        "half_width": ("pos", 30.0), "theta_points": ("int", 30),
                        "omega_points": ("int", 2001), "omega_max": ("pos", 1e4)},
    "stable-manifold": {"tol": ("pos", 1e-13), "amplitudes": ("poslist", [0.02, 0.01, 0.005, 0.0025]),
                        "grid_h": ("pos", 5e-4), "nu_factor": ("pos", 0.8), "max_iter": ("int", 60)},
    "center-taylor": {"tol": ("pos", 1e-14), "order": ("int", 3),
                      "s_values": ("poslist", [1e-3, 2e-3, 4e-3, 8e-3]),
                      "fixed_point": ("bool", True), "epsilon": ("pos", 0.1),
                      "fp_s_values": ("poslist", [0.0025, 0.005, 0.01, 0.02]), "grid_h": ("pos", 2e-3)},
    "profile": {"tol": ("pos", 1e-7), "eps": ("pos", 0.04), "order": ("int", 5),
                "half_width": ("pos", 12.0), "points_per_unit": ("int", 50)},
    "sweep": {"tol": ("pos", 1e-7), "eps_list": ("poslist", [0.02, 0.04, 0.08, 0.16]),
              "order": ("int", 5), "half_width": ("pos", 12.0), "points_per_unit": ("int", 50),
              "slack": ("pos", 0.3)},
}
TOP_KEYS = {"scenario", "model", "seed", "out", "workers", "params"}
MODEL_KEYS = {"preset", "file", "inline"}


@dataclass
class RunConfig:
    scenario: str
    model: dict
    seed: int = 0
    out: str = "kinshock-out"
    workers: int = 1
    params: dict = field(default_factory=dict)

    def to_document(self):
        return {"scenario": self.scenario, "model": copy.deepcopy(self.model), "seed": self.seed,
                "out": self.out, "workers": self.workers, "params": copy.deepcopy(self.params)}


def _check_value(kind, key, value, problems):
    if kind == "pos":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            problems.append(f"params.{key}: must be a positive number, got {value!r}")
            return value
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            problems.append(f"params.{key}: must be a positive integer, got {value!r}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            problems.append(f"params.{key}: must be true or false, got {value!r}")
        return value
    if kind == "poslist":
        ok = isinstance(value, list) and value and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in value)
        if not ok:
            problems.append(f"params.{key}: must be a non-empty list of positive numbers")
            return value
        return [float(v) for v in value]
    raise AssertionError(kind)


def validate(doc, scenario_override=None) -> RunConfig:
    problems = []
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    for key in sorted(set(doc) - TOP_KEYS):
        problems.append(f"unknown key {key!r}")
    scenario = scenario_override or doc.get("scenario")
    if scenario not in SCENARIOS:
        problems.append(f"scenario: must be one of {', '.join(SCENARIOS)}, got {scenario!r}")
    model = doc.get("model", {"preset": "demo-m1"})
    if not isinstance(model, dict) or len(model) != 1 or set(model) - MODEL_KEYS:
        problems.append("model: must be a mapping with exactly one of preset, file, inline")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        problems.append(f"seed: must be a nonnegative integer, got {seed!r}")
    out = doc.get("out", "kinshock-out")
    if not isinstance(out, str) or not out:
        problems.append("out: must be a non-empty string")
    workers = doc.get("workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        problems.append(f"workers: must be a positive integer, got {workers!r}")
    raw = doc.get("params", {}) or {}
    params = {}
    if not isinstance(raw, dict):
        problems.append("params: must be a mapping")
    elif scenario in PARAM_SCHEMA:
        schema = PARAM_SCHEMA[scenario]
        for key in sorted(set(raw) - set(schema)):
            problems.append(f"params.{key}: unknown key for scenario {scenario}")
        for key, (kind, default) in schema.items():
            params[key] = _check_value(kind, key, raw[key], problems) if key in raw \
                else copy.deepcopy(default)
        low = {"center-taylor": 2, "profile": 3, "sweep": 3}.get(scenario)
        if low and isinstance(params.get("order"), int) and params["order"] < low:
            problems.append(f"params.order: must be at least {low}")
    if problems:
        raise ConfigError(problems)
    return RunConfig(scenario=scenario, model=model, seed=seed, out=out, workers=workers,
                     params=params)


def parse_config(text, scenario_override=None) -> RunConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"parse error{where}: {getattr(exc, 'problem', exc)}") from None
    return validate({} if doc is None else doc, scenario_override)


def serialize_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.to_document(), sort_keys=True)
