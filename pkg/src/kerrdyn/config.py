"""Run configuration: defaults, figure presets, flat TOML files and overrides."""

from __future__ import annotations

import dataclasses
import math
import sys
import typing
from dataclasses import dataclass, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, DomainError
from .model import ModelParams


@dataclass(frozen=True)
class RunConfig:
    omega1: float = 1.0
    omega2: float = 0.5
    omega: typing.Optional[float] = None
    lambda1: typing.Optional[float] = None
    lambda2: typing.Optional[float] = None
    beta1: float = 0.0
    beta2: float = 0.0
    alpha1_re: float = 0.0
    alpha1_im: float = 0.0
    alpha2_re: float = 0.0
    alpha2_im: float = 0.0
    m_cut: int = 24
    edge_weight_threshold: float = 1e-8
    truncation_weight_threshold: float = 1e-8
    t_max: float = 30.0
    n_points: int = 601
    csv_path: typing.Optional[str] = None
    svg_path: typing.Optional[str] = None

    @property
    def alpha1(self) -> complex:
        return complex(self.alpha1_re, self.alpha1_im)

    @property
    def alpha2(self) -> complex:
        return complex(self.alpha2_re, self.alpha2_im)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> "RunConfig":
        """Check every invariant; returns ``self`` so calls can be chained."""
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(f"{f.name} must be finite, got {v!r}")
        if self.m_cut < 1:
            raise ConfigError("m_cut must be at least 1")
        if self.n_points < 2:
            raise ConfigError("n_points must be at least 2")
        if not self.t_max > 0:
            raise ConfigError("t_max must be positive")
        for name in ("edge_weight_threshold", "truncation_weight_threshold"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        self.model_params()
        return self

    def model_params(self) -> ModelParams:
        direct = (self.lambda1, self.lambda2)
        if self.omega is not None and any(x is not None for x in direct):
            raise ConfigError("give either omega or lambda1/lambda2, not both")
        if (self.lambda1 is None) != (self.lambda2 is None):
            raise ConfigError("lambda1 and lambda2 must be given together")
        try:
            if self.lambda1 is not None:
                return ModelParams.from_couplings(self.lambda1, self.lambda2, self.omega1,
                                                  self.omega2, self.beta1, self.beta2)
            return ModelParams.from_rotation(self.omega or 0.0, self.omega1, self.omega2,
                                             self.beta1, self.beta2)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


KEYS = tuple(f.name for f in fields(RunConfig))
_HINTS = typing.get_type_hints(RunConfig)


def _base_type(name):
    hint = _HINTS[name]
    args = [a for a in typing.get_args(hint) if a is not type(None)]
    return (args[0] if args else hint), type(None) in typing.get_args(hint)


def coerce(name: str, value):
    """Convert a raw value (TOML scalar or override string) to the field type."""
    if name not in _HINTS:
        raise ConfigError(f"unknown config key {name!r}")
    typ, optional = _base_type(name)
    if isinstance(value, str):
        text = value.strip()
        if optional and text.lower() in ("", "none", "null"):
            return None
        if typ is str:
            return text
        try:
            if typ is int:
                return int(text)
            return float(text)
        except ValueError as exc:
            raise ConfigError(f"{name}: cannot parse {value!r} as {typ.__name__}") from exc
    if isinstance(value, bool):
        raise ConfigError(f"{name}: boolean not allowed")
    if typ is int:
        if isinstance(value, float) and value != int(value):
            raise ConfigError(f"{name} must be an integer")
        return int(value)
    if typ is float and isinstance(value, (int, float)):
        return float(value)
    if typ is str and isinstance(value, str):
        return value
    raise ConfigError(f"{name}: unsupported value {value!r}")


def apply(cfg: RunConfig, values: dict) -> RunConfig:
    """Layer ``values`` over ``cfg``; a layer naming one coupling style clears the other."""
    changes = {}
    lam = {"lambda1", "lambda2"} & values.keys()
    if "omega" in values and not lam:
        changes.update(lambda1=None, lambda2=None)
    elif lam and "omega" not in values:
        changes["omega"] = None
    for k, v in values.items():
        changes[k] = coerce(k, v)
    return cfg.replace(**changes)


def load_file(path) -> dict:
    """Read a flat TOML file; nested tables and unknown keys are rejected."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for k, v in data.items():
        if isinstance(v, (dict, list)):
            raise ConfigError(f"{path}: key {k!r} must be a scalar (flat file)")
        if k not in _HINTS:
            raise ConfigError(f"{path}: unknown config key {k!r}")
    return data


def parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        k, v = pair.split("=", 1)
        k = k.strip()
        if k not in _HINTS:
            raise ConfigError(f"unknown config key {k!r}")
        out[k] = v
    return out


@dataclass(frozen=True)
class Preset:
    name: str
    values: dict
    sweep_axis: str
    sweep_values: tuple
    columns: tuple
    description: str


def _fig(name, omega, alphas, columns, alpha, description, m_cut=24, beta=0.1):
    vals = {"omega2": 0.5, "omega": omega, "beta1": beta, "beta2": beta,
            "alpha1_re": alpha, "alpha2_re": alpha, "m_cut": m_cut}
    return Preset(name, vals, "alpha", tuple(alphas), tuple(columns), description)


PRESETS = {
    p.name: p
    for p in (
        _fig("fig1", 0.15, (0.0, 1.0, 2.0), ("E12",), 2.0,
             "entanglement entropy, weak coupling, beta=0.1"),
        _fig("fig2", 0.45, (0.0, 0.5, 1.0, 2.0), ("dS1", "dS2"), 2.0,
             "non-gaussianity, strong coupling, beta=0.1", m_cut=32),
        _fig("fig3", 0.15, (0.0, 1.0, 2.0), ("N1", "N2", "Ntot_half"), 2.0,
             "mode populations, weak coupling, beta=0.1"),
        _fig("fig4", 0.15, (0.5, 1.0, 2.0), ("varN1", "N1", "D1"), 2.0,
             "number variance and D, weak coupling, beta=0.1"),
        _fig("fig5", 0.15, (0.5, 1.0), ("dQ2", "dP2"), 0.5,
             "shifted squeezing ratios of mode 2, weak coupling, beta=0.1"),
    )
}


def resolve(preset: str | None = None, path=None, overrides=None) -> RunConfig:
    """Defaults, then preset, then config file, then ``key=value`` overrides."""
    cfg = RunConfig()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        cfg = apply(cfg, PRESETS[preset].values)
    if path is not None:
        cfg = apply(cfg, load_file(path))
    cfg = apply(cfg, parse_overrides(overrides))
    return cfg.validate()
