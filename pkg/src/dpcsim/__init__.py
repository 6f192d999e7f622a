"""Behavioral simulator of an LDO-powered constant-slope phase interpolator."""

__version__ = "0.1.0"

from dpcsim.analog import ComparatorModel, LdoParams, RampState
from dpcsim.config import SimConfig, load_config
from dpcsim.core import (
    ClockSpec,
    ConfigError,
    DeviceParams,
    NoiseParams,
    PhaseCode,
    SextantStep,
    code_phase_ideal,
    decode_code,
    validate_params,
)

__all__ = [
    "ClockSpec", "ComparatorModel", "ConfigError", "DeviceParams", "LdoParams", "NoiseParams",
    "PhaseCode", "RampState", "SextantStep", "SimConfig", "code_phase_ideal", "decode_code",
    "load_config", "validate_params",
]
