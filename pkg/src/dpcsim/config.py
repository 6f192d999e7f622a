"""INI-style configuration: ``[clock] [device] [comparator] [ldo] [noise] [sim]``.

All keys are optional and default to the dataclass defaults. Unknown
sections or keys are rejected so that typos never silently fall back to
defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from dpcsim.analog import ComparatorModel, LdoParams
from dpcsim.core import ClockSpec, ConfigError, DeviceParams, NoiseParams, validate_params


@dataclass(frozen=True)
class SimSettings:
    """Simulation bookkeeping shared by every analysis."""

    warmup_periods: int = 8
    measure_periods: int = 4
    strict: bool = True
    ldo_mode: str = "ideal"  # ideal | transient
    workers: int = 1

    def __post_init__(self):
        if self.warmup_periods < 0:
            raise ConfigError("warmup_periods must be non-negative")
        if self.measure_periods < 4:
            raise ConfigError("measure_periods must be at least 4")
        if self.ldo_mode not in ("ideal", "transient"):
            raise ConfigError("ldo_mode must be 'ideal' or 'transient'")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class SimConfig:
    clock: ClockSpec = field(default_factory=ClockSpec)
    device: DeviceParams = field(default_factory=DeviceParams)
    comparator: ComparatorModel = field(default_factory=ComparatorModel)
    ldo: LdoParams = field(default_factory=LdoParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    sim: SimSettings = field(default_factory=SimSettings)

    def validated(self) -> "SimConfig":
        validate_params(self.device, self.ldo, self.clock)
        return self

    def with_overrides(self, overrides: dict[str, str] | list[str]) -> "SimConfig":
        return apply_overrides(self, overrides)

    def to_dict(self) -> dict:
        out = {}
        for name in SECTIONS:
            obj = getattr(self, name)
            out[name] = {k: _jsonable(getattr(obj, k)) for k in _keys(type(obj))}
        return out


SECTIONS = ("clock", "device", "comparator", "ldo", "noise", "sim")


def _keys(cls) -> list[str]:
    return [f.name for f in fields(cls) if f.init]


def override_keys() -> list[str]:
    """Every ``section.key`` accepted by ``--set`` and the config file."""
    return [f"{s}.{k}" for s in SECTIONS for k in _keys(type(getattr(SimConfig(), s)))]


def _jsonable(v):
    return list(v) if isinstance(v, tuple) else v


def _parse_value(current, text: str, key: str):
    text = text.strip()
    try:
        if isinstance(current, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(current, int):
            return int(text, 0)
        if isinstance(current, float):
            return float(text)
        if isinstance(current, tuple):
            return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def _update_section(cfg: SimConfig, section: str, items: dict[str, str]) -> SimConfig:
    if section not in SECTIONS:
        raise ConfigError(f"unknown config section [{section}]")
    obj = getattr(cfg, section)
    allowed = set(_keys(type(obj)))
    changes = {}
    for key, text in items.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {section}.{key}")
        changes[key] = _parse_value(getattr(obj, key), text, f"{section}.{key}")
    try:
        new_obj = replace(obj, **changes)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return replace(cfg, **{section: new_obj})


def apply_overrides(cfg: SimConfig, overrides) -> SimConfig:
    """Apply ``section.key=value`` strings (or a ``{"section.key": value}`` dict)."""
    if isinstance(overrides, dict):
        pairs = list(overrides.items())
    else:
        pairs = []
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not section.key=value")
            k, v = item.split("=", 1)
            pairs.append((k.strip(), v))
    grouped: dict[str, dict[str, str]] = {}
    for dotted, value in pairs:
        if dotted.count(".") != 1:
            raise ConfigError(f"override key {dotted!r} must be section.key")
        section, key = dotted.split(".")
        grouped.setdefault(section, {})[key] = str(value)
    for section, items in grouped.items():
        cfg = _update_section(cfg, section, items)
    return cfg


def load_config(path: str | Path | None = None) -> SimConfig:
    cfg = SimConfig()
    if path is None:
        return cfg.validated()
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    for section in parser.sections():
        cfg = _update_section(cfg, section, dict(parser.items(section)))
    return cfg.validated()


def config_from_dict(data: dict) -> SimConfig:
    """Rebuild a config from :meth:`SimConfig.to_dict` output (e.g. a run manifest)."""
    cfg = SimConfig()
    for section, items in data.items():
        cfg = _update_section(cfg, section, {
            k: ",".join(str(x) for x in v) if isinstance(v, list) else str(v)
            for k, v in items.items()
        })
    return cfg


def _format_value(v) -> str:
    if isinstance(v, list):
        return ",".join(repr(x) for x in v)
    return v if isinstance(v, str) else repr(v)


def write_config(cfg: SimConfig, path: str | Path) -> None:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for section, items in cfg.to_dict().items():
        parser[section] = {k: _format_value(v) for k, v in items.items()}
    with open(path, "w") as fh:
        parser.write(fh)
