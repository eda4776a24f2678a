# This file is part of graphon-lq-control.
# Copyright (C) 2024 graphon-lq-control contributors
#
# graphon-lq-control is free software; you can redistribute it and/or
# modify it under the terms of the MIT License; see the
# LICENSE file for more details.

"""
Experiment settings.

Settings are layered: ``DEFAULT_SETTINGS`` < config file < command-line
flags. Config files hold one ``key = value`` per line with ``#`` comments.
"""

import configparser
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple

from .exceptions import ConfigError, ValidationError
from .graphon import LIMIT_GRAPHONS
from .noise import NAMED_CORRELATIONS, Q_WIENER_SPECS
from .riccati import ModelParams, TimeGrid
from .sim import INITIAL_PROFILES

logger = logging.getLogger(__name__)

_SECTION = "experiment"
PARAM_KEYS = ("A", "B", "b", "sigma", "Q", "Q_T", "R", "Gamma", "T")

DEFAULT_SETTINGS: Dict[str, Any] = {
    # model
    "A": 1.0,
    "B": 1.0,
    "b": 0.5,
    "sigma": 0.3,
    "Q": 1.0,
    "Q_T": 1.0,
    "R": 1.0,
    "Gamma": 0.5,
    "T": 1.0,
    # network and noise
    "N": 16,
    "N_values": "8,16,32,64,128",
    "graphon": "cosine",
    "correlation": "cosine",
    "limit_graphon": "cosine",
    "limit_q": "cosine-kernel",
    "d": 2,
    # numerics
    "dt": "",
    "replicas": 1000,
    "batch_size": 500,
    "seed": 0,
    "x0_profile": "ramp",
    # outputs
    "law": "both",
    "method": "exact",
    "trajectories": False,
    "spectrum_of": "graphon",
    "output": "",
}

LAWS = ("centralized", "decentralized", "both")
METHODS = ("exact", "mc")
SPECTRUM_SOURCES = ("graphon", "correlation")


def read_settings_file(path) -> Dict[str, str]:
    """Raw ``key = value`` pairs of a config file."""
    path = Path(path)
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
    )
    parser.optionxform = str
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    try:
        parser.read_string(f"[{_SECTION}]\n{text}", source=str(path))
    except configparser.Error as e:
        raise ConfigError(f"Malformed config file {path}: {e}") from e

    values = dict(parser.items(_SECTION))
    unknown = sorted(set(values) - set(DEFAULT_SETTINGS))
    if unknown:
        raise ConfigError(f"{path}: unknown setting(s) {', '.join(unknown)}")
    return values


def merge_settings(
    file_settings: Mapping[str, Any] = None, overrides: Mapping[str, Any] = None
) -> Dict[str, Any]:
    """Defaults, then file values, then non-None overrides."""
    settings = dict(DEFAULT_SETTINGS)
    for layer in (file_settings or {}, overrides or {}):
        for key, value in layer.items():
            if key not in DEFAULT_SETTINGS:
                raise ConfigError(f"Unknown setting {key!r}")
            if value is not None:
                settings[key] = value
    return settings


def _as_float(settings, key) -> float:
    try:
        return float(settings[key])
    except (TypeError, ValueError):
        raise ConfigError(f"Setting {key} must be a number, got {settings[key]!r}") from None


def _as_int(settings, key, minimum=None) -> int:
    value = settings[key]
    try:
        number = int(str(value).strip())
    except ValueError:
        raise ConfigError(f"Setting {key} must be an integer, got {value!r}") from None
    if minimum is not None and number < minimum:
        raise ConfigError(f"Setting {key} must be at least {minimum}, got {number}")
    return number


def _as_bool(settings, key) -> bool:
    value = settings[key]
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"Setting {key} must be a boolean, got {value!r}")


def _as_choice(settings, key, choices) -> str:
    value = str(settings[key]).strip()
    if value not in choices:
        raise ConfigError(f"Setting {key} must be one of {sorted(choices)}, got {value!r}")
    return value


def _as_source(settings, key, names) -> str:
    """A named object or the path of an existing matrix file."""
    value = str(settings[key]).strip()
    if value in names or Path(value).is_file():
        return value
    raise ConfigError(f"Setting {key}: {value!r} is neither one of {sorted(names)} nor a file")


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    N: int
    N_values: Tuple[int, ...]
    graphon: str
    correlation: str
    limit_graphon: str
    limit_q: str
    d: int
    dt: float
    replicas: int
    batch_size: int
    seed: int
    x0_profile: str
    law: str
    method: str
    trajectories: bool
    spectrum_of: str
    output: str

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.from_step(self.params.T, self.dt)

    @classmethod
    def from_settings(cls, settings: Mapping[str, Any]) -> "ExperimentConfig":
        settings = merge_settings(settings)
        try:
            params = ModelParams(**{key: _as_float(settings, key) for key in PARAM_KEYS})
        except ValidationError as e:
            raise ConfigError(str(e)) from e

        try:
            ladder = tuple(
                int(v) for v in str(settings["N_values"]).split(",") if v.strip()
            )
        except ValueError:
            raise ConfigError(
                f"N_values must be comma-separated integers, got {settings['N_values']!r}"
            ) from None
        if not ladder or min(ladder) < 1:
            raise ConfigError("N_values must list at least one positive node count")

        dt = settings["dt"]
        dt = 1e-3 * params.T if str(dt).strip() == "" else _as_float(settings, "dt")
        try:
            TimeGrid.from_step(params.T, dt)
        except ValidationError as e:
            raise ConfigError(str(e)) from e

        return cls(
            params=params,
            N=_as_int(settings, "N", minimum=1),
            N_values=ladder,
            graphon=_as_source(settings, "graphon", LIMIT_GRAPHONS),
            correlation=_as_source(settings, "correlation", NAMED_CORRELATIONS),
            limit_graphon=_as_choice(settings, "limit_graphon", LIMIT_GRAPHONS),
            limit_q=_as_choice(settings, "limit_q", Q_WIENER_SPECS),
            d=_as_int(settings, "d", minimum=0),
            dt=dt,
            replicas=_as_int(settings, "replicas", minimum=1),
            batch_size=_as_int(settings, "batch_size", minimum=1),
            seed=_as_int(settings, "seed", minimum=0),
            x0_profile=_as_choice(settings, "x0_profile", INITIAL_PROFILES),
            law=_as_choice(settings, "law", LAWS),
            method=_as_choice(settings, "method", METHODS),
            trajectories=_as_bool(settings, "trajectories"),
            spectrum_of=_as_choice(settings, "spectrum_of", SPECTRUM_SOURCES),
            output=str(settings["output"]).strip(),
        )


def load_config(
    path=None, overrides: Mapping[str, Any] = None
) -> Tuple[ExperimentConfig, Dict[str, Any]]:
    """Build the config from an optional file and CLI overrides."""
    file_settings = read_settings_file(path) if path else {}
    settings = merge_settings(file_settings, overrides)
    return ExperimentConfig.from_settings(settings), settings
