"""Experiment configuration: flat INI-style files plus command-line overrides."""

from __future__ import annotations

import configparser
import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .circuit import FLOQUET, TEMPORALLY_RANDOM
from .errors import ConfigError

# Pared-down settings for continuous-integration runs; production runs
# keep f > 200 and averaging windows of 1e4..1e5 steps.
DESK_SCALE_PRESET = {
    "window": 64,
    "rel_threshold": 1e-2,
    "max_steps": 60_000,
    "entropy_window": 256,
    "equilibration_cap": 2_000,
}

_LIST_FIELDS = {"etas", "sizes", "cptp_sizes"}
_BOOL_FIELDS = {"desk_scale"}

# config files accept the same short names as the command-line flags
_ALIASES = {
    "eta": "etas",
    "l": "sizes",
    "b": "bin_size",
    "f": "window",
    "d": "rel_threshold",
}


@dataclass
class ExperimentConfig:
    model: str = TEMPORALLY_RANDOM
    etas: list = field(default_factory=lambda: [0.36])
    sizes: list = field(default_factory=lambda: [8])
    q: int = 8
    bin_size: int = 0  # 0 = per-eta default
    window: int = 256  # f
    rel_threshold: float = 5e-3  # d
    max_steps: int = 500_000
    seed: int = 0
    trajectories: int = 1
    out: str = "runs"
    desk_scale: bool = False
    workers: int = 1
    entropy_window: int = 1_000
    equilibration_cap: int = 100_000
    theta_samples: int = 256
    grid_points: int = 2001
    oracle_steps: int = 256
    oracle_size: int = 4
    cptp_sizes: list = field(default_factory=lambda: [1, 2])

    def validate(self) -> "ExperimentConfig":
        if self.model not in (TEMPORALLY_RANDOM, FLOQUET):
            raise ConfigError(f"model must be 'random' or 'floquet', got {self.model!r}")
        if not self.etas:
            raise ConfigError("need at least one eta")
        if any(not 0.0 <= e <= 0.5 for e in self.etas):
            raise ConfigError("every eta must lie in [0, 1/2]")
        if not self.sizes or any(L < 1 for L in self.sizes):
            raise ConfigError("sizes must be positive")
        if self.q < 1 or self.q > 2 ** min(self.sizes):
            raise ConfigError(f"q={self.q} exceeds the smallest Hilbert space")
        if self.trajectories < 1 or self.max_steps < 1 or self.workers < 1:
            raise ConfigError("trajectories, max_steps, workers must be positive")
        if self.rel_threshold > 1e-2:
            if not self.desk_scale:
                raise ConfigError("convergence threshold d must be <= 1e-2")
            warnings.warn("desk-scale run relaxes the convergence threshold d")
        if self.window < 200:
            if not self.desk_scale:
                raise ConfigError("history window f must be >= 200")
            warnings.warn("desk-scale run shrinks the history window f below 200")
        if self.bin_size < 0:
            raise ConfigError("bin_size must be positive (or 0 for automatic)")
        return self


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name in _LIST_FIELDS:
        parts = [p for p in raw.replace(",", " ").split() if p]
        if name == "etas":
            return [float(p) for p in parts]
        return [int(p) for p in parts]
    if name in _BOOL_FIELDS:
        return raw.lower() in ("1", "true", "yes", "on")
    return None  # fall through to field-type coercion


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults < desk-scale preset < config file < explicit overrides."""
    file_values: dict = {}
    if path is not None:
        text = Path(path).read_text()
        if not text.lstrip().startswith("["):
            text = "[experiment]\n" + text
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        for section in parser.sections():
            file_values.update(parser.items(section))

    overrides = dict(overrides or {})
    known = {f.name: f for f in fields(ExperimentConfig)}
    merged_raw: dict = {}
    for name, raw in file_values.items():
        name = _ALIASES.get(name.lower(), name)
        if name not in known:
            raise ConfigError(f"unknown config key {name!r}")
        merged_raw[name] = raw
    desk = overrides.get("desk_scale")
    if desk is None:
        desk = _parse_value("desk_scale", str(merged_raw.get("desk_scale", "false")))

    config = ExperimentConfig()
    if desk:
        config = replace(config, desk_scale=True, **DESK_SCALE_PRESET)

    def coerce(name, raw):
        parsed = _parse_value(name, raw) if isinstance(raw, str) else raw
        if parsed is not None and not isinstance(parsed, str):
            return parsed
        typ = type(getattr(config, name))
        try:
            return typ(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}: {raw!r}") from exc

    for name, raw in merged_raw.items():
        setattr(config, name, coerce(name, raw))
    for name, value in overrides.items():
        if value is None:
            continue
        if name not in known:
            raise ConfigError(f"unknown config key {name!r}")
        setattr(config, name, coerce(name, value))
    return config.validate()
