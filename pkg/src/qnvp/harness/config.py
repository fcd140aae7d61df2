"""Study configuration: TOML files plus ``key=value`` overrides."""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigParse, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STUDY_KINDS = ("landau-benchmark", "wasserstein-trend", "regularity-rate", "scaling-verify", "aset-report")


@dataclass
class GridConfig:
    nx: int = 32
    nv: int = 128
    length: float = 1.0
    vmax: float = 8.0


@dataclass
class SolverSettings:
    dt: float = 0.05
    t_end: float = 1.0


@dataclass
class EnsembleConfig:
    family: str = "amplitude"
    base: float = 0.5
    slope: float = 0.1
    support: list = field(default_factory=lambda: [-1.0, 1.0])
    n_nodes: int = 3
    rule: str = "gauss-legendre"


@dataclass
class NormConfig:
    a: float = 1.0
    t0: float = 2.0
    k: int = 1
    m: int = 1


@dataclass
class ASetConfig:
    delta: float = 0.5
    M: float = 1.5
    z0: float = 0.0
    T: float = 1.0
    M_list: list = field(default_factory=lambda: [1.05, 1.1, 1.5, 2.0])


@dataclass
class StudyConfig:
    kind: str = "landau-benchmark"
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverSettings = field(default_factory=SolverSettings)
    eps_list: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    norm: NormConfig = field(default_factory=NormConfig)
    aset: ASetConfig = field(default_factory=ASetConfig)
    params: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.kind not in STUDY_KINDS:
            raise ValidationError(f"unknown study kind {self.kind!r}; expected one of {STUDY_KINDS}")
        eps = [float(e) for e in self.eps_list]
        if not eps or any(not 0 < e <= 1 for e in eps):
            raise ValidationError("eps_list entries must lie in (0, 1]")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValidationError("eps_list must be strictly decreasing")
        self.eps_list = eps

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build(cls, data: dict, where: str):
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        if key not in fields:
            raise ConfigParse(f"unknown key {where}{key!r}")
        sub = fields[key].type
        sub_cls = {"GridConfig": GridConfig, "SolverSettings": SolverSettings,
                   "EnsembleConfig": EnsembleConfig, "NormConfig": NormConfig,
                   "ASetConfig": ASetConfig}.get(sub if isinstance(sub, str) else sub.__name__)
        if sub_cls is not None:
            if not isinstance(value, dict):
                raise ConfigParse(f"{where}{key} must be a table")
            value = _build(sub_cls, value, f"{where}{key}.")
        kwargs[key] = value
    return cls(**kwargs)


def _parse_toml(text: str, source: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParse(f"{source}: {exc}") from None


def parse_override(item: str):
    """``a.b=value`` -> (["a", "b"], value); the value is read as a TOML value, else a string."""
    if "=" not in item:
        raise ConfigParse(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(data: dict, overrides) -> dict:
    for item in overrides or ():
        path, value = parse_override(item)
        node = data
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigParse(f"override {item!r} descends into a non-table")
        node[path[-1]] = value
    return data


def load_config(path=None, overrides=(), require_file: bool = True) -> StudyConfig:
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"config file {path} not found")
        data = _parse_toml(p.read_text(), str(path))
    elif require_file:
        raise ValidationError("a --config file is required")
    data = apply_overrides(data, overrides)
    try:
        return _build(StudyConfig, data, "")
    except TypeError as exc:
        raise ConfigParse(str(exc)) from None
