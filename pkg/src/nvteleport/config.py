"""Run configuration in a plain ``key = value`` text format.

One setting per line, ``#`` starts a comment. Error-model settings use a
``model.`` prefix with the ``ModelParams`` field name, e.g.::

    experiment = teleport
    mode = monte_carlo
    shots = 20000
    seed = 7
    model.visibility = 0.74
    model.init_populations = 0.01, 0.02, 0.97   # m_I = +1, 0, -1

Times are in seconds and angular frequencies in rad/s. Missing keys take the
defaults of ``RunConfig`` and ``ModelParams``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from .nv import ModelParams, NuclearPopulations

EXPERIMENTS = ("teleport", "bsm-benchmark", "calibrate", "nuclear-flips", "tomography", "link-rate")
MODES = ("analytic", "monte_carlo")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None, path=None):
        self.key, self.line, self.path = key, line, path
        where = ":".join(str(x) for x in (path, line) if x is not None)
        prefix = f"{where}: " if where else ""
        super().__init__(f"{prefix}{key + ': ' if key else ''}{message}")


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    experiment: str = "teleport"
    mode: str = "analytic"
    shots: int = 10000
    seed: int = 0
    out_dir: str = "out"
    workers: int = 1
    corrected_initialization: bool = False
    no_feedforward: bool = True
    measured_shots: bool = False
    noisy_preparation: bool = True
    sweep_points: int = 73
    flip_max_attempts: int = 3000
    flip_points: int = 61
    flip_amplitude: float = 1.0
    flip_offset: float = 0.0
    write_records: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}",
                              "experiment")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}", "mode")
        for key in ("shots", "workers", "sweep_points", "flip_points"):
            if getattr(self, key) < 1:
                raise ConfigError("must be >= 1", key)
        if self.flip_max_attempts < 0:
            raise ConfigError("must be >= 0", "flip_max_attempts")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("must be a 64-bit unsigned integer", "seed")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_RUN_FIELDS = {f.name: f for f in fields(RunConfig) if f.name != "model"}
_MODEL_FIELDS = {f.name: f for f in fields(ModelParams)}


def _parse_bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text: str) -> int:
    v = float(text) if any(c in text for c in ".eE") and not text.lower().startswith("0x") else int(text, 0)
    if int(v) != v:
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _parse(text: str, default):
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return _parse_int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, NuclearPopulations):
        parts = [float(x) for x in text.split(",")]
        if len(parts) != 3:
            raise ValueError("expected three populations (m_I = +1, 0, -1)")
        return NuclearPopulations(*parts)
    return text


def parse_config(text: str, path=None) -> RunConfig:
    defaults_run, defaults_model = RunConfig(), ModelParams()
    run_kw, model_kw, where = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", None, lineno, path)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in where:
            raise ConfigError(f"duplicate key (first set on line {where[key]})", key, lineno, path)
        where[key] = lineno
        if key.startswith("model."):
            name = key[len("model."):]
            if name not in _MODEL_FIELDS:
                raise ConfigError("unknown key", key, lineno, path)
            target, default = model_kw, getattr(defaults_model, name)
        else:
            name = key
            if name not in _RUN_FIELDS:
                raise ConfigError("unknown key", key, lineno, path)
            target, default = run_kw, getattr(defaults_run, name)
        try:
            target[name] = _parse(value, default)
        except ValueError as exc:
            raise ConfigError(str(exc), key, lineno, path) from None
    try:
        model = ModelParams(**model_kw)
    except ValueError as exc:
        key = next((k for k in model_kw if k in str(exc)), None)
        raise ConfigError(str(exc), f"model.{key}" if key else None,
                          where.get(f"model.{key}") if key else None, path) from None
    try:
        return RunConfig(model=model, **run_kw)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], exc.key, where.get(exc.key), path) from None


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=p) from None
    return parse_config(text, p)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, NuclearPopulations):
        return ", ".join(repr(float(x)) for x in value.as_array())
    return str(value)


def format_config(config: RunConfig) -> str:
    """Text that ``parse_config`` reads back to an equal ``RunConfig``."""
    lines = [f"{name} = {_format(getattr(config, name))}" for name in _RUN_FIELDS]
    lines += [f"model.{name} = {_format(getattr(config.model, name))}" for name in _MODEL_FIELDS]
    return "\n".join(lines) + "\n"


def write_config(config: RunConfig, path) -> None:
    Path(path).write_text(format_config(config), encoding="utf-8")
