"""Run configuration: one JSON file per run."""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .dynsys import KINDS, SystemParams
from .numerics import METHODS, IntegratorConfig
from .specfun import SeriesTolerance

TRANSFORM_CHOICES = ("relativistic", "identity", "double_time")
FORMATS = ("csv", "json")

DEFAULT_TOLERANCES = {
    "invariance_condition": 1e-10,
    "invariance_energy_mismatch": 1e-9,
    "invariance_dKdx_mismatch": 1e-8,
    "energy_conservation": 1e-8,
    "energy_invariance": 1e-9,
    "euler_lagrange": 1e-9,
    "velocity_round_trip": 1e-12,
    "commuting_dynamics": 1e-7,
    "hj_transformed": 1e-12,
    "hj_original_alpha0": 1e-10,
    "W_closed_form": 1e-9,
    "recover": 1e-6,
    "limit_final": 1e-6,
}


class ConfigError(ValueError):
    """The configuration file is malformed; ``field`` names the culprit."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class SystemConfig:
    kind: str = "first_order"
    m: float = 1.0
    lam: float = 1.0
    gamma: float = 0.0
    alpha: float = 0.0
    c: Optional[float] = None

    def params(self):
        return SystemParams(m=self.m, lam=self.lam, gamma=self.gamma, alpha=self.alpha, c=self.c)


@dataclass
class InitialConfig:
    x0: float = 0.0
    v0: float = 0.0


@dataclass
class IntegrationConfig:
    method: str = "rk4_fixed"
    step: float = 1e-4
    t_end: float = 2.0

    def integrator(self):
        return IntegratorConfig(t_end=self.t_end, step=self.step, method=self.method)


@dataclass
class HJConfig:
    E: Optional[float] = None
    x_lo: float = 0.0
    x_hi: float = 1.0
    n_grid: int = 101
    rel_tol: float = 1e-14
    max_terms: int = 200

    def series_tol(self):
        return SeriesTolerance(self.rel_tol, self.max_terms)


@dataclass
class VerifyConfig:
    transform: str = "relativistic"
    n_random: int = 20
    seed: int = 0
    tolerances: dict = field(default_factory=dict)

    def tol(self, name):
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])


@dataclass
class SweepConfig:
    gamma: list = field(default_factory=list)
    alpha: list = field(default_factory=list)


@dataclass
class OutputConfig:
    directory: str = "out"
    format: str = "csv"


@dataclass
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)
    hj: HJConfig = field(default_factory=HJConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    sweep: Optional[SweepConfig] = None
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self):
        d = asdict(self)
        d["system"]["lambda"] = d["system"].pop("lam")
        return d

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def digest(self):
        """SHA-256 of the canonical config, ignoring where outputs go."""
        d = self.to_dict()
        del d["output"]
        canonical = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


_SECTIONS = {
    "system": SystemConfig,
    "initial": InitialConfig,
    "integration": IntegrationConfig,
    "hj": HJConfig,
    "verify": VerifyConfig,
    "sweep": SweepConfig,
    "output": OutputConfig,
}


def _number(path, value, allow_none=False, integer=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _section(name, cls, raw):
    if not isinstance(raw, dict):
        raise ConfigError(name, "expected an object")
    raw = dict(raw)
    if name == "system" and "lambda" in raw:
        raw["lam"] = raw.pop("lambda")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}", "unknown field")
    kwargs = {}
    for key, value in raw.items():
        path = f"{name}.{'lambda' if key == 'lam' else key}"
        default = getattr(cls(), key)
        if key in ("kind", "method", "transform", "directory", "format"):
            if not isinstance(value, str):
                raise ConfigError(path, f"expected a string, got {value!r}")
            kwargs[key] = value
        elif key == "tolerances":
            if not isinstance(value, dict):
                raise ConfigError(path, "expected an object")
            for tname, tval in value.items():
                if tname not in DEFAULT_TOLERANCES:
                    raise ConfigError(f"{path}.{tname}", "unknown check")
                if _number(f"{path}.{tname}", tval) <= 0:
                    raise ConfigError(f"{path}.{tname}", "tolerance must be positive")
            kwargs[key] = {k: float(v) for k, v in value.items()}
        elif key in ("gamma", "alpha") and cls is SweepConfig:
            if not isinstance(value, list):
                raise ConfigError(path, "expected an array")
            kwargs[key] = [_number(f"{path}[{i}]", v) for i, v in enumerate(value)]
        else:
            kwargs[key] = _number(
                path, value, allow_none=default is None, integer=isinstance(default, int) and not isinstance(default, bool)
            )
    return cls(**kwargs)


def _validate(cfg):
    s = cfg.system
    if s.kind not in KINDS:
        raise ConfigError("system.kind", f"expected one of {KINDS}, got {s.kind!r}")
    for name, ok in (
        ("m", s.m > 0),
        ("lambda", s.lam > 0),
        ("gamma", s.gamma >= 0),
        ("alpha", s.alpha >= 0),
        ("c", s.c is None or s.c > 0),
    ):
        if not ok:
            raise ConfigError(f"system.{name}", "violates the parameter constraints")
    if cfg.integration.method not in METHODS:
        raise ConfigError("integration.method", f"expected one of {METHODS}")
    if not cfg.integration.step > 0:
        raise ConfigError("integration.step", "must be positive")
    if not cfg.integration.t_end > 0:
        raise ConfigError("integration.t_end", "must be positive")
    if cfg.hj.n_grid < 2:
        raise ConfigError("hj.n_grid", "must be at least 2")
    if cfg.hj.x_lo > cfg.hj.x_hi:
        raise ConfigError("hj.x_hi", "must not be below hj.x_lo")
    if not cfg.hj.rel_tol > 0:
        raise ConfigError("hj.rel_tol", "must be positive")
    if cfg.hj.max_terms < 1:
        raise ConfigError("hj.max_terms", "must be at least 1")
    if cfg.verify.transform not in TRANSFORM_CHOICES:
        raise ConfigError("verify.transform", f"expected one of {TRANSFORM_CHOICES}")
    if cfg.verify.n_random < 1:
        raise ConfigError("verify.n_random", "must be at least 1")
    if cfg.sweep is not None and len(cfg.sweep.gamma) != len(cfg.sweep.alpha):
        raise ConfigError("sweep.alpha", "must have the same length as sweep.gamma")
    if cfg.sweep is not None and any(v < 0 for v in cfg.sweep.gamma + cfg.sweep.alpha):
        raise ConfigError("sweep", "entries must be non-negative")
    if cfg.output.format not in FORMATS:
        raise ConfigError("output.format", f"expected one of {FORMATS}")


def from_dict(raw):
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = sorted(set(raw) - set(_SECTIONS))
    if unknown:
        raise ConfigError(unknown[0], "unknown section")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in raw and raw[name] is not None:
            kwargs[name] = _section(name, cls, raw[name])
    cfg = RunConfig(**kwargs)
    _validate(cfg)
    return cfg


def loads(text):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return from_dict(raw)


def load(path):
    with open(path) as fh:
        return loads(fh.read())
