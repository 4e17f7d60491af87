"""Experiment configuration: a versioned YAML document with strict validation.

A complete file with every default spelled out::

    schema_version: 1
    name: custom
    model: {L: 4, t: 1.0, U: 1.0, mu_up: 0.0, mu_down: 0.0}
    plan: {order: first, r_min: 1, r_max: 10, dt: 0.5, prepare_neel: true}
    backend: statevector          # statevector | exact | mps | noisy
    observables: [neel]           # first entry is the headline value
    instances: 5                  # repeats for the stochastic (noisy) backend
    shots: 4000
    seed: 0
    mps: {chi_max: 1024, cutoff: 1.0e-08}
    exact: {tol: 1.0e-10, krylov_dim: 30}
    noise: {p2: 0.002521, p1: 0.0, p01: 0.0, p10: 0.0, cz_overrotation: 0.0, seed: 0}
    mitigation: null              # or a mapping of MitigationPlan fields
    limits: {statevector_qubits: 26, exact_qubits: 24, noisy_qubits: 16}
    output: {dir: results, record_timings: false}
    workers: 1

Only two environment variables are honoured, and only through
:func:`with_env_overrides`: ``HUBBARD_TROTTER_OUTPUT_DIR`` and
``HUBBARD_TROTTER_WORKERS``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from ..mitigation import MitigationPlan, NoiseModel
from ..model import HubbardParams
from ..trotter import ORDERS

SCHEMA_VERSION = 1
BACKENDS = ("statevector", "exact", "mps", "noisy")
OBSERVABLES = ("neel", "n_total", "sz_total", "energy")
ENV_OUTPUT_DIR = "HUBBARD_TROTTER_OUTPUT_DIR"
ENV_WORKERS = "HUBBARD_TROTTER_WORKERS"


class ConfigError(ValueError):
    """The configuration document is malformed or inconsistent."""


@dataclass(frozen=True)
class SweepPlan:
    order: str = "first"
    r_min: int = 1
    r_max: int = 10
    dt: float = 0.5
    prepare_neel: bool = True

    @property
    def r_values(self) -> list[int]:
        return list(range(self.r_min, self.r_max + 1))


@dataclass(frozen=True)
class MpsSettings:
    chi_max: int = 1024
    cutoff: float = 1e-8


@dataclass(frozen=True)
class ExactSettings:
    tol: float = 1e-10
    krylov_dim: int = 30


@dataclass(frozen=True)
class Limits:
    statevector_qubits: int = 26
    exact_qubits: int = 24
    noisy_qubits: int = 16


@dataclass(frozen=True)
class OutputSettings:
    dir: str = "results"
    record_timings: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    params: HubbardParams
    plan: SweepPlan = field(default_factory=SweepPlan)
    backend: str = "statevector"
    observables: tuple[str, ...] = ("neel",)
    instances: int = 5
    shots: int = 4000
    seed: int = 0
    mps: MpsSettings = field(default_factory=MpsSettings)
    exact: ExactSettings = field(default_factory=ExactSettings)
    noise: NoiseModel = field(default_factory=NoiseModel)
    mitigation: MitigationPlan | None = None
    limits: Limits = field(default_factory=Limits)
    output: OutputSettings = field(default_factory=OutputSettings)
    workers: int = 1
    name: str = "custom"

    def __post_init__(self):
        _validate(self)

    @property
    def n_qubits(self) -> int:
        return self.params.n_qubits

    @property
    def stochastic(self) -> bool:
        return self.backend == "noisy"

    def with_backend(self, backend: str) -> "ExperimentConfig":
        return replace(self, backend=backend)

    def to_dict(self) -> dict:
        p = self.params
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "model": {"L": p.L, "t": p.t, "U": p.U, "mu_up": p.mu_up, "mu_down": p.mu_down},
            "plan": _fields(self.plan),
            "backend": self.backend,
            "observables": list(self.observables),
            "instances": self.instances,
            "shots": self.shots,
            "seed": self.seed,
            "mps": _fields(self.mps),
            "exact": _fields(self.exact),
            "noise": _noise_dict(self.noise),
            "mitigation": None if self.mitigation is None else self.mitigation.to_dict(),
            "limits": _fields(self.limits),
            "output": _fields(self.output),
            "workers": self.workers,
        }

    def record(self) -> dict:
        """The settings that determine results (output location and workers dropped)."""
        d = self.to_dict()
        del d["output"], d["workers"]
        return d

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, allow_unicode=True)

    @classmethod
    def from_dict(cls, data) -> "ExperimentConfig":
        return _parse(data)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"not valid YAML: {exc}") from None
        return _parse(data)


def _fields(obj) -> dict:
    return {name: getattr(obj, name) for name in obj.__dataclass_fields__}


def _noise_dict(noise: NoiseModel) -> dict:
    d = noise.to_dict()
    for k in ("p01", "p10"):
        if isinstance(d[k], tuple):
            d[k] = list(d[k])
    return d


def _validate(cfg: ExperimentConfig) -> None:
    plan = cfg.plan
    if plan.order not in ORDERS:
        raise ConfigError(f"plan.order must be one of {ORDERS}, got {plan.order!r}")
    if not (1 <= plan.r_min <= plan.r_max):
        raise ConfigError("plan needs 1 <= r_min <= r_max")
    if not (plan.dt > 0 and math.isfinite(plan.dt)):
        raise ConfigError("plan.dt must be positive and finite")
    if cfg.backend not in BACKENDS:
        raise ConfigError(f"backend must be one of {BACKENDS}, got {cfg.backend!r}")
    if not cfg.observables:
        raise ConfigError("at least one observable is required")
    for name in cfg.observables:
        if name not in OBSERVABLES:
            raise ConfigError(f"unknown observable {name!r}; choose from {OBSERVABLES}")
    if len(set(cfg.observables)) != len(cfg.observables):
        raise ConfigError("observables must not repeat")
    for name in ("instances", "shots", "workers"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1")
    if cfg.mps.chi_max < 1 or not (cfg.mps.cutoff >= 0 and math.isfinite(cfg.mps.cutoff)):
        raise ConfigError("mps needs chi_max >= 1 and a finite cutoff >= 0")
    if not cfg.exact.tol > 0 or cfg.exact.krylov_dim < 2:
        raise ConfigError("exact needs tol > 0 and krylov_dim >= 2")
    for name in ("statevector_qubits", "exact_qubits", "noisy_qubits"):
        if getattr(cfg.limits, name) < 1:
            raise ConfigError(f"limits.{name} must be >= 1")
    if not cfg.output.dir:
        raise ConfigError("output.dir must be a non-empty path")


_TOP_KEYS = {
    "schema_version", "name", "model", "plan", "backend", "observables", "instances",
    "shots", "seed", "mps", "exact", "noise", "mitigation", "limits", "output", "workers",
}

_INT, _FLOAT, _BOOL, _STR = "integer", "number", "boolean", "string"


def _coerce(value, kind: str, where: str):
    if kind == _BOOL:
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean")
        return value
    if kind == _STR:
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a {kind}")
    if kind == _INT:
        if int(value) != value:
            raise ConfigError(f"{where} must be an integer")
        return int(value)
    return float(value)


def _section(data: dict, key: str, schema: dict[str, str], cls):
    raw = data.get(key, {})
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{key} must be a mapping")
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys in {key}: {sorted(unknown)}")
    kw = {k: _coerce(v, schema[k], f"{key}.{k}") for k, v in raw.items()}
    try:
        return cls(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _noise(raw) -> NoiseModel:
    if raw is None:
        return NoiseModel()
    if not isinstance(raw, dict):
        raise ConfigError("noise must be a mapping")
    schema = {"p2": _FLOAT, "p1": _FLOAT, "cz_overrotation": _FLOAT, "seed": _INT}
    unknown = set(raw) - set(schema) - {"p01", "p10"}
    if unknown:
        raise ConfigError(f"unknown keys in noise: {sorted(unknown)}")
    kw = {k: _coerce(v, schema[k], f"noise.{k}") for k, v in raw.items() if k in schema}
    for k in ("p01", "p10"):
        if k in raw:
            v = raw[k]
            if isinstance(v, list):
                kw[k] = tuple(_coerce(x, _FLOAT, f"noise.{k}") for x in v)
            else:
                kw[k] = _coerce(v, _FLOAT, f"noise.{k}")
    try:
        return NoiseModel(**kw)
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from None


def _mitigation(raw) -> MitigationPlan | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError("mitigation must be a mapping or null")
    try:
        return MitigationPlan.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"mitigation: {exc}") from None


def _parse(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    if "model" not in data:
        raise ConfigError("model section is required")
    params = _section(
        data, "model", {"L": _INT, "t": _FLOAT, "U": _FLOAT, "mu_up": _FLOAT, "mu_down": _FLOAT},
        HubbardParams,
    )
    plan = _section(
        data, "plan",
        {"order": _STR, "r_min": _INT, "r_max": _INT, "dt": _FLOAT, "prepare_neel": _BOOL},
        SweepPlan,
    )
    observables = data.get("observables", ["neel"])
    if not isinstance(observables, list) or not all(isinstance(o, str) for o in observables):
        raise ConfigError("observables must be a list of names")
    kw = {}
    for key, kind in (("instances", _INT), ("shots", _INT), ("seed", _INT),
                      ("workers", _INT), ("backend", _STR), ("name", _STR)):
        if key in data:
            kw[key] = _coerce(data[key], kind, key)
    return ExperimentConfig(
        params=params,
        plan=plan,
        observables=tuple(observables),
        mps=_section(data, "mps", {"chi_max": _INT, "cutoff": _FLOAT}, MpsSettings),
        exact=_section(data, "exact", {"tol": _FLOAT, "krylov_dim": _INT}, ExactSettings),
        noise=_noise(data.get("noise")),
        mitigation=_mitigation(data.get("mitigation")),
        limits=_section(
            data, "limits",
            {"statevector_qubits": _INT, "exact_qubits": _INT, "noisy_qubits": _INT},
            Limits,
        ),
        output=_section(data, "output", {"dir": _STR, "record_timings": _BOOL}, OutputSettings),
        **kw,
    )


PRESETS: dict[str, dict] = {
    "paper-L10": {
        "schema_version": SCHEMA_VERSION,
        "name": "paper-L10",
        "model": {"L": 10, "t": 1.0, "U": 1.0, "mu_up": 0.0, "mu_down": 0.0},
        "plan": {"order": "first", "r_min": 1, "r_max": 10, "dt": 0.5, "prepare_neel": True},
        "backend": "statevector",
        "observables": ["neel"],
    },
}


def preset(name: str) -> ExperimentConfig:
    try:
        return _parse(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_yaml(text)


def with_env_overrides(cfg: ExperimentConfig, env=None) -> ExperimentConfig:
    """Apply the output-directory and worker-count environment overrides."""
    env = os.environ if env is None else env
    out = cfg
    if env.get(ENV_OUTPUT_DIR):
        out = replace(out, output=replace(out.output, dir=env[ENV_OUTPUT_DIR]))
    if env.get(ENV_WORKERS):
        try:
            workers = int(env[ENV_WORKERS])
        except ValueError:
            raise ConfigError(f"{ENV_WORKERS} must be an integer") from None
        out = replace(out, workers=workers)
    return out
