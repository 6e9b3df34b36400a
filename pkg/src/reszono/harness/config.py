"""Scenario files: JSON schema, parsing and validation."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .. import attacks
from ..errors import ConfigError, InvalidInputError
from ..estimator import EstimatorConfig
from ..model import SensorModel, SystemModel, estimate_state_bound, validate_assumptions
from ..setops import Zonotope, interval_hull, sample_point

SCHEMA_VERSION = 1

_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "items": {"type": "number"}}}
_VECTOR = {"type": "array", "items": {"type": "number"}}
_ZONOTOPE = {
    "type": "object",
    "required": ["center", "generators"],
    "properties": {"center": _VECTOR, "generators": {"type": "array", "items": _VECTOR}},
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["schema", "system", "sensors", "q"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "system": {
            "type": "object",
            "required": ["A", "B", "W", "X0"],
            "properties": {
                "A": _MATRIX,
                "B": _MATRIX,
                "W": _ZONOTOPE,
                "X0": _ZONOTOPE,
                "state_bound": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "state_bound_horizon": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "sensors": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["C", "V"],
                "properties": {"C": _MATRIX, "V": _ZONOTOPE},
                "additionalProperties": False,
            },
        },
        "p": {"type": "integer", "minimum": 1},
        "q": {"type": "integer", "minimum": 0},
        "input": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["constant", "uniform"]},
                "value": _VECTOR,
                "set": _ZONOTOPE,
            },
            "additionalProperties": False,
        },
        "attack": {"type": "object", "properties": {"kind": {"type": "string"}}},
        "estimator": {
            "type": "object",
            "properties": {
                "prune": {"type": "string"},
                "max_members": {"type": ["integer", "null"], "minimum": 1},
                "reduction_order": {"type": ["number", "null"]},
                "constraint_factor": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "run": {
            "type": "object",
            "properties": {
                "steps": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "output": {"type": "object", "properties": {"dir": {"type": "string"}}},
        "plot": {
            "type": "object",
            "properties": {"dims": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                    "minItems": 2, "maxItems": 2}},
        },
        "notes": {"type": "object"},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True, eq=False)
class InputPolicy:
    """Known input: a constant vector or a uniform draw from a zonotope's coefficient box."""

    kind: str
    value: np.ndarray | None = None
    set: Zonotope | None = None

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "constant":
            return np.array(self.value, dtype=float)
        return sample_point(self.set, rng)

    @property
    def bound(self) -> float:
        """max ||u||_inf over the policy's range."""
        if self.kind == "constant":
            return float(np.max(np.abs(self.value))) if len(self.value) else 0.0
        box = interval_hull(self.set)
        return float(np.max(np.maximum(np.abs(box.lower), np.abs(box.upper))))


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    system: SystemModel
    q: int
    input: InputPolicy
    attack: attacks.AttackPolicy
    estimator: EstimatorConfig
    steps: int
    seed: int
    output_dir: str
    plot_dims: tuple
    state_bound_source: str
    raw: dict = field(repr=False)

    @property
    def p(self) -> int:
        return self.system.p


def _zonotope(spec, path) -> Zonotope:
    n = len(spec["center"])
    gens = spec["generators"]
    if len(gens) != n:
        raise ConfigError(f"generators need {n} rows (one per dimension), got {len(gens)}", f"{path}.generators")
    widths = {len(r) for r in gens}
    if len(widths) > 1:
        raise ConfigError("generator rows have different lengths", f"{path}.generators")
    try:
        return Zonotope(spec["center"], np.array(gens, dtype=float).reshape(n, -1))
    except InvalidInputError as exc:
        raise ConfigError(str(exc), path) from None


def _matrix(rows, path) -> np.ndarray:
    if len({len(r) for r in rows}) != 1 or len(rows[0]) == 0:
        raise ConfigError("matrix rows must be non-empty and of equal length", path)
    return np.array(rows, dtype=float)


def resolve_path(path) -> Path:
    """Paths that do not exist are looked up among the bundled scenarios."""
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("reszono") / "scenarios" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"scenario file not found: {path}")


def load_config(path) -> ScenarioConfig:
    p = resolve_path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(p)) from None
    return parse_config(data)


def parse_config(data: dict) -> ScenarioConfig:
    data = copy.deepcopy(data)
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(x) if not isinstance(x, int) else f"[{x}]" for x in err.absolute_path).replace(".[", "[")
        raise ConfigError(err.message, path or "<root>")

    sysd = data["system"]
    a = _matrix(sysd["A"], "system.A")
    n = a.shape[0]
    if a.shape != (n, n):
        raise ConfigError(f"A must be square, got {a.shape}", "system.A")
    b = _matrix(sysd["B"], "system.B")
    if b.shape[0] != n:
        raise ConfigError(f"B must have {n} rows", "system.B")
    w = _zonotope(sysd["W"], "system.W")
    x0 = _zonotope(sysd["X0"], "system.X0")
    for zname, z in (("W", w), ("X0", x0)):
        if z.dim != n:
            raise ConfigError(f"dimension {z.dim} != n_x = {n}", f"system.{zname}")

    sensors = []
    for i, sd in enumerate(data["sensors"]):
        c = _matrix(sd["C"], f"sensors[{i}].C")
        if c.shape[1] != n:
            raise ConfigError(f"C must have {n} columns", f"sensors[{i}].C")
        v = _zonotope(sd["V"], f"sensors[{i}].V")
        if v.dim != c.shape[0]:
            raise ConfigError(f"noise dimension {v.dim} != output rows {c.shape[0]}", f"sensors[{i}].V")
        sensors.append(SensorModel(c, v, i + 1))
    if "p" in data and data["p"] != len(sensors):
        raise ConfigError(f"p = {data['p']} but {len(sensors)} sensors listed", "p")
    q = data["q"]

    inp = data.get("input", {"kind": "constant", "value": [0.0] * b.shape[1]})
    if inp["kind"] == "constant":
        if "value" not in inp or len(inp["value"]) != b.shape[1]:
            raise ConfigError(f"constant input needs a value of length {b.shape[1]}", "input.value")
        input_policy = InputPolicy("constant", value=np.array(inp["value"], dtype=float))
    else:
        if "set" not in inp:
            raise ConfigError("uniform input needs a set", "input.set")
        uset = _zonotope(inp["set"], "input.set")
        if uset.dim != b.shape[1]:
            raise ConfigError(f"input set dimension {uset.dim} != n_u = {b.shape[1]}", "input.set")
        input_policy = InputPolicy("uniform", set=uset)

    system = SystemModel(a, b, tuple(sensors), w, x0, sysd.get("state_bound"))
    source = "config"
    if system.state_bound is None:
        try:
            m = estimate_state_bound(system, input_policy.bound, sysd.get("state_bound_horizon", 200))
        except InvalidInputError as exc:
            raise ConfigError(str(exc), "system.state_bound") from None
        system = system.with_state_bound(m)
        source = "estimated"

    report = validate_assumptions(system, q)
    if not report.ok:
        raise ConfigError("assumptions violated: " + "; ".join(report.failures), "system")

    est = data.get("estimator", {})
    prune = est.get("prune", "merge_intersecting")
    max_members = est.get("max_members")
    kwargs = {"reduction_order": est.get("reduction_order"),
              "constraint_factor": est.get("constraint_factor", 4)}
    if prune == "budget":
        est_cfg = EstimatorConfig(q, "budget", max_members=max_members, **kwargs)
    else:
        est_cfg = EstimatorConfig.from_policy_string(q, prune, **kwargs)

    attack = attacks.from_config(data.get("attack"), q, system.state_bound)
    attack.check_sensors(system.sensors)

    run = data.get("run", {})
    dims = tuple(data.get("plot", {}).get("dims", [0, 1] if n >= 2 else [0, 0]))
    if max(dims) >= n:
        raise ConfigError(f"plot dims {dims} exceed n_x = {n}", "plot.dims")
    return ScenarioConfig(
        name=data.get("name", "scenario"),
        system=system,
        q=q,
        input=input_policy,
        attack=attack,
        estimator=est_cfg,
        steps=run.get("steps", 50),
        seed=run.get("seed", 0),
        output_dir=data.get("output", {}).get("dir", "out"),
        plot_dims=dims,
        state_bound_source=source,
        raw=data,
    )


def with_overrides(cfg: ScenarioConfig, *, seed=None, steps=None, prune=None, max_members=None,
                   attack=None) -> ScenarioConfig:
    """Re-parse with run, estimator or attack fields replaced (CLI flags, sweeps, tests)."""
    data = copy.deepcopy(cfg.raw)
    run = data.setdefault("run", {})
    if seed is not None:
        run["seed"] = int(seed)
    if steps is not None:
        run["steps"] = int(steps)
    est = data.setdefault("estimator", {})
    if prune is not None:
        est["prune"] = prune
    if max_members is not None:
        est["max_members"] = int(max_members)
        if prune is None and est.get("prune") not in ("budget",):
            est["prune"] = "budget"
    if attack is not None:
        data["attack"] = attack
    return parse_config(data)
