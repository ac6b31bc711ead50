"""Run configuration: JSON file -> validated ``RunConfig``.

Every section is optional and defaults to the reference parameter set. Unknown
keys and ill-typed values are rejected with the offending field path;
semantic checks are collected so one error lists every violated constraint.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .cost import CostParams
from .demand import OfdmConfig, TrafficFieldConfig
from .linkbudget import FiberConfig, FsoConfig, MmWaveConfig
from .topology import Scheme, TopologyConfig

FS_LABELS = ("7.2x", "8")
DEMAND_MODES = ("homogeneous", "traffic")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, field_path: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field_path is not None:
            where.append(f"field {field_path!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field_path


class ValidationError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class GroupingConfig:
    """Topology parameters that are not swept (W, G and scheme are sweep axes)."""

    L: int = 1000
    g_s: int = 15
    g_m: int = 3
    L_max: int = 9
    epsilon: float = 1e-3
    max_iterations: int = 100
    region_side: float = 2000.0

    def topology(self, W: int, G: int, scheme: Scheme | str) -> TopologyConfig:
        return TopologyConfig(L=self.L, W=W, G_initial=G, g_s=self.g_s, g_m=self.g_m,
                              L_max=self.L_max, epsilon=self.epsilon, scheme=Scheme(scheme),
                              max_iterations=self.max_iterations, region_side=self.region_side)


@dataclass(frozen=True)
class SweepConfig:
    W: tuple = (4,)
    G: tuple = (150,)
    p: tuple = (0.06,)
    fs: tuple = ("7.2x",)
    schemes: tuple = ("rs", "hs")
    # multipliers on hotspot amplitudes; only used in traffic mode
    traffic_scale: tuple = (1.0,)

    def errors(self) -> list[str]:
        out = []
        for name in ("W", "G", "p", "fs", "schemes", "traffic_scale"):
            if len(getattr(self, name)) == 0:
                out.append(f"sweep.{name} must be nonempty")
        out += [f"sweep.W entry {w} must be >= 1" for w in self.W if w < 1]
        out += [f"sweep.G entry {g} must be >= 1" for g in self.G if g < 1]
        out += [f"sweep.p entry {p} outside [0, 1]" for p in self.p if not 0 <= p <= 1]
        out += [f"sweep.fs entry {f!r} not one of {FS_LABELS}" for f in self.fs if f not in FS_LABELS]
        out += [f"sweep.schemes entry {s!r} not one of ('rs', 'hs')"
                for s in self.schemes if s not in ("rs", "hs")]
        out += [f"sweep.traffic_scale entry {a} must be >= 0" for a in self.traffic_scale if a < 0]
        return out


@dataclass(frozen=True)
class RunConfig:
    topology: GroupingConfig = field(default_factory=GroupingConfig)
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    mmw: MmWaveConfig = field(default_factory=MmWaveConfig)
    fso: FsoConfig = field(default_factory=FsoConfig)
    fiber: FiberConfig = field(default_factory=FiberConfig)
    costs: CostParams = field(default_factory=CostParams)
    traffic: TrafficFieldConfig = field(default_factory=TrafficFieldConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    demand_mode: str = "homogeneous"
    cp_overhead: float = 0.0
    sla: float = 0.9999
    include_du_pool: bool = False
    realizations: int = 1
    resilience_runs: int = 50
    master_seed: int = 0
    output_dir: str = "out"

    def errors(self) -> list[str]:
        out = []
        for sec in ("topology", "ofdm", "mmw", "fso", "fiber", "costs", "traffic", "sweep"):
            errs = getattr(getattr(self, sec), "errors", None)
            if errs is not None:
                out += errs()
        t = self.topology
        if t.g_m >= t.g_s:
            out.append("topology.g_m must be < topology.g_s")
        for name in ("L", "g_s", "g_m", "max_iterations"):
            if getattr(t, name) < 1:
                out.append(f"topology.{name} must be >= 1")
        if t.L_max < 2:
            out.append("topology.L_max must be >= 2")
        if not t.epsilon > 0 or not t.region_side > 0:
            out.append("topology.epsilon and topology.region_side must be > 0")
        out += [f"sweep.W entry {w} exceeds topology.L" for w in self.sweep.W if w > t.L]
        out += [f"sweep.G entry {g} exceeds topology.L" for g in self.sweep.G if g > t.L]
        if self.demand_mode not in DEMAND_MODES:
            out.append(f"demand_mode must be one of {DEMAND_MODES}")
        if self.demand_mode == "traffic" and not self.traffic.cap < self.fiber.rate:
            out.append("traffic.cap must be below the fiber rate")
        if not 0 <= self.cp_overhead <= 1:
            out.append("cp_overhead must be in [0, 1]")
        if not 0 < self.sla <= 1:
            out.append("sla must be in (0, 1]")
        if self.realizations < 1:
            out.append("realizations must be >= 1")
        if self.resilience_runs < 1:
            out.append("resilience_runs must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            out.append("master_seed must be an unsigned 64-bit integer")
        return out

    def validate(self) -> "RunConfig":
        errs = self.errors()
        if errs:
            raise ValidationError(errs)
        return self

    def to_dict(self) -> dict:
        return _to_jsonable(dataclasses.asdict(self))


def _to_jsonable(x):
    if isinstance(x, dict):
        return {k: _to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_jsonable(v) for v in x]
    if isinstance(x, Scheme):
        return x.value
    return x


_SECTIONS = {
    "topology": GroupingConfig, "ofdm": OfdmConfig, "mmw": MmWaveConfig, "fso": FsoConfig,
    "fiber": FiberConfig, "costs": CostParams, "traffic": TrafficFieldConfig, "sweep": SweepConfig,
}


def _coerce(value: Any, default: Any, path: str):
    """Check ``value`` against the type of the field's default."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ParseError("expected true/false", field_path=path)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError("expected an integer", field_path=path)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError("expected a number", field_path=path)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ParseError("expected a string", field_path=path)
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ParseError("expected a list", field_path=path)
        sample = default[0]
        return tuple(_coerce(v, sample, f"{path}[{i}]") for i, v in enumerate(value))
    raise ParseError("unsupported field", field_path=path)


def _section(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ParseError("expected an object", field_path=path)
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ParseError("unknown key", field_path=f"{path}.{key}")
        kwargs[key] = _coerce(value, getattr(defaults, key), f"{path}.{key}")
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ParseError("top level must be an object")
    base = RunConfig()
    kwargs = {}
    names = {f.name for f in dataclasses.fields(RunConfig)}
    for key, value in data.items():
        if key not in names:
            raise ParseError("unknown key", field_path=key)
        if key in _SECTIONS:
            kwargs[key] = _section(_SECTIONS[key], value, key)
        else:
            kwargs[key] = _coerce(value, getattr(base, key), key)
    return RunConfig(**kwargs).validate()


def parse_config(path: str | Path | None) -> RunConfig:
    """Read and validate a JSON config; ``None`` or an empty file gives the defaults."""
    if path is None:
        return RunConfig().validate()
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return RunConfig().validate()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno) from None
    return config_from_dict(data)
