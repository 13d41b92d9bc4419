"""JSON experiment configuration: strict schema plus semantic checks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .capacity import ArrivalVector, ServiceModel, ServiceModelError
from .policies import POLICY_KINDS
from .topology import (
    ClusterTopology,
    TaskType,
    TopologyError,
    check_task_type,
    enumerate_task_types,
    validate_topology,
)

MAX_RHO = 1.05


class ConfigError(ValueError):
    pass


_number = {"type": "number"}
_posint = {"type": "integer", "minimum": 1}

_POLICY = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": sorted(POLICY_KINDS)},
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "theta": _number,
        "coefficients": {"type": "object", "additionalProperties": _number},
    },
}

SCHEMA = {
    "type": "object",
    "required": ["topology", "service", "arrivals"],
    "additionalProperties": False,
    "properties": {
        "topology": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "num_servers": {"type": "integer"},
                "rack_of": {"type": "array", "items": {"type": "integer"}},
                "rack_sizes": {"type": "array", "items": _posint},
            },
        },
        "service": {
            "type": "object",
            "required": ["alpha", "gamma"],
            "additionalProperties": False,
            "properties": {"alpha": _number, "beta": _number, "gamma": _number},
        },
        "arrivals": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["bernoulli", "batch_binomial"]},
                "batch_bound": _posint,
                "types": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["replicas", "rate"],
                        "additionalProperties": False,
                        "properties": {
                            "replicas": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                            "rate": {"type": "number", "minimum": 0},
                        },
                    },
                },
                "generator": {
                    "type": "object",
                    "required": ["name", "aggregate_rate"],
                    "additionalProperties": False,
                    "properties": {
                        "name": {"enum": ["uniform_over_types"]},
                        "replicas": _posint,
                        "aggregate_rate": {"type": "number", "minimum": 0},
                    },
                },
            },
        },
        "policy": {"oneOf": [_POLICY, {"type": "array", "items": _POLICY, "minItems": 1}]},
        "sweep": {"type": "array", "items": _number, "minItems": 1},
        "horizon": _posint,
        "warmup": {"type": "integer", "minimum": 0},
        "seeds": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
        "output": {"type": "string"},
        "schedule_order": {"enum": ["ascending", "random"]},
        "trace_stride": _posint,
    },
}


@dataclass(frozen=True)
class PolicyConfig:
    name: str
    kind: str
    theta: float = 1.0
    coefficients: Optional[dict[TaskType, float]] = None


@dataclass
class ExperimentConfig:
    topology: ClusterTopology
    service: ServiceModel
    arrivals: ArrivalVector
    arrival_kind: str = "bernoulli"
    batch_bound: int = 1
    policies: list[PolicyConfig] = field(default_factory=list)
    sweep: Optional[list[float]] = None
    horizon: int = 100_000
    warmup: Optional[int] = None
    seeds: list[int] = field(default_factory=lambda: [1])
    output: Optional[str] = None
    schedule_order: str = "ascending"
    trace_stride: Optional[int] = None

    @property
    def effective_warmup(self) -> int:
        return self.horizon // 5 if self.warmup is None else self.warmup

    def validate(self) -> None:
        if self.sweep is not None:
            for rho in self.sweep:
                if not 0 < rho <= MAX_RHO:
                    raise ConfigError(f"sweep: rho {rho} outside (0, {MAX_RHO}]")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds: values must be distinct, got {self.seeds}")
        if self.horizon <= self.effective_warmup:
            raise ConfigError(f"horizon {self.horizon} must exceed warmup {self.effective_warmup}")
        names = [p.name for p in self.policies]
        if len(set(names)) != len(names):
            raise ConfigError(f"policy: duplicate policy names {names}; set 'name' to disambiguate")


def _topology(raw: dict) -> ClusterTopology:
    if "rack_of" in raw and "rack_sizes" in raw:
        raise ConfigError("topology: give either rack_of or rack_sizes, not both")
    if "rack_sizes" in raw:
        rack_of = [k for k, size in enumerate(raw["rack_sizes"], start=1) for _ in range(size)]
    elif "rack_of" in raw:
        rack_of = raw["rack_of"]
    else:
        raise ConfigError("topology: missing rack_of or rack_sizes")
    M = raw.get("num_servers", len(rack_of))
    try:
        return validate_topology(M, rack_of)
    except TopologyError as exc:
        raise ConfigError(f"topology: {exc}") from None


def _arrivals(raw: dict, topo: ClusterTopology) -> tuple[ArrivalVector, str, int]:
    kind = raw.get("kind", "bernoulli")
    bound = raw.get("batch_bound", 1 if kind == "bernoulli" else 4)
    if kind == "bernoulli" and bound != 1:
        raise ConfigError("arrivals.batch_bound: only meaningful for batch_binomial arrivals")
    if ("types" in raw) == ("generator" in raw):
        raise ConfigError("arrivals: give exactly one of 'types' or 'generator'")
    rates: dict[TaskType, float] = {}
    if "types" in raw:
        for i, entry in enumerate(raw["types"]):
            try:
                t = TaskType(tuple(entry["replicas"]))
                check_task_type(topo, t)
            except TopologyError as exc:
                raise ConfigError(f"arrivals.types[{i}].replicas: {exc}") from None
            if t in rates:
                raise ConfigError(f"arrivals.types[{i}]: duplicate type {t}")
            rates[t] = float(entry["rate"])
    else:
        gen = raw["generator"]
        try:
            types = enumerate_task_types(topo, gen.get("replicas", min(3, topo.num_servers)))
        except TopologyError as exc:
            raise ConfigError(f"arrivals.generator.replicas: {exc}") from None
        each = float(gen["aggregate_rate"]) / len(types)
        rates = {t: each for t in types}
    return ArrivalVector(rates), kind, bound


def _policy(raw: dict, i: int) -> PolicyConfig:
    kind = raw["kind"]
    where = f"policy[{i}]"
    if kind != "gcmu" and ("theta" in raw or "coefficients" in raw):
        raise ConfigError(f"{where}: theta/coefficients only apply to gcmu")
    theta = float(raw.get("theta", 1.0))
    if kind == "gcmu" and not theta > 0:
        raise ConfigError(f"{where}.theta: must be > 0, got {theta}")
    coef = None
    if "coefficients" in raw:
        coef = {}
        for key, v in raw["coefficients"].items():
            try:
                coef[TaskType.parse(key)] = float(v)
            except (ValueError, TopologyError):
                raise ConfigError(f"{where}.coefficients: bad task type key {key!r}") from None
            if v <= 0:
                raise ConfigError(f"{where}.coefficients.{key}: must be > 0")
    return PolicyConfig(raw.get("name", kind), kind, theta, coef)


def build_config(raw: Any) -> ExperimentConfig:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    topo = _topology(raw["topology"])
    s = raw["service"]
    try:
        svc = ServiceModel(alpha=s["alpha"], gamma=s["gamma"], beta=s.get("beta"))
        svc.check_topology(topo)
    except ServiceModelError as exc:
        raise ConfigError(f"service: {exc}") from None
    arrivals, kind, bound = _arrivals(raw["arrivals"], topo)
    pol = raw.get("policy", [])
    pol = [pol] if isinstance(pol, dict) else pol
    cfg = ExperimentConfig(
        topology=topo,
        service=svc,
        arrivals=arrivals,
        arrival_kind=kind,
        batch_bound=bound,
        policies=[_policy(p, i) for i, p in enumerate(pol)],
        sweep=raw.get("sweep"),
        horizon=raw.get("horizon", 100_000),
        warmup=raw.get("warmup"),
        seeds=raw.get("seeds", [1]),
        output=raw.get("output"),
        schedule_order=raw.get("schedule_order", "ascending"),
        trace_stride=raw.get("trace_stride"),
    )
    cfg.validate()
    return cfg


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return build_config(raw)
