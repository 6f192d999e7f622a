"""Shared domain types and the ideal code-to-phase arithmetic.

Everything here is an immutable value object. Codes, sextants and steps are
0-indexed: the 22.5 degree example (code 2) is sextant 0, step 2, which a
1-indexed description calls "sextant 1, step 3".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from dpcsim.analog import LdoParams

N_CODES = 32
N_SEXTANTS = 6
PHASE_STEP_DEG = 360.0 / N_CODES  # 11.25
SEXTANT_DEG = 360.0 / N_SEXTANTS  # 60
STEPS_PER_SEXTANT = (6, 5, 5, 6, 5, 5)
SEXTANT_FIRST_CODE = (0, 6, 11, 16, 22, 27)
T_NOMINAL_C = 27.0

# absolute slack for floating-point range comparisons, in volts
_V_EPS = 1e-12


class ConfigError(ValueError):
    """Raised when a parameter set violates a physical or range constraint."""


@dataclass(frozen=True)
class ClockSpec:
    """Six-phase input clock from the external FLL.

    ``skew`` holds an optional per-phase timing error (seconds) added to the
    ideal edges of phase 0, 60, ..., 300 degrees.
    """

    frequency: float = 0.5e9
    skew: tuple[float, ...] = (0.0,) * N_SEXTANTS
    n_input_phases: int = field(default=N_SEXTANTS, init=False)
    phase_spacing: float = field(default=SEXTANT_DEG, init=False)

    def __post_init__(self):
        if not self.frequency > 0:
            raise ConfigError("clock frequency must be positive")
        if len(self.skew) != N_SEXTANTS:
            raise ConfigError(f"skew needs {N_SEXTANTS} entries, got {len(self.skew)}")
        object.__setattr__(self, "skew", tuple(float(s) for s in self.skew))

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    @property
    def step_time(self) -> float:
        return self.period / N_CODES


@dataclass(frozen=True)
class PhaseCode:
    code: int

    def __post_init__(self):
        if isinstance(self.code, bool) or int(self.code) != self.code:
            raise ValueError(f"phase code must be an integer, got {self.code!r}")
        if not 0 <= self.code < N_CODES:
            raise ValueError(f"phase code must be in [0, {N_CODES - 1}], got {self.code}")
        object.__setattr__(self, "code", int(self.code))

    def __int__(self):
        return self.code


@dataclass(frozen=True)
class SextantStep:
    sextant: int
    step: int
    fine_offset: float  # degrees

    def __post_init__(self):
        if not 0 <= self.sextant < N_SEXTANTS:
            raise ValueError(f"sextant must be in [0, 5], got {self.sextant}")
        if not 0 <= self.step < STEPS_PER_SEXTANT[self.sextant]:
            raise ValueError(
                f"step {self.step} invalid for sextant {self.sextant} "
                f"({STEPS_PER_SEXTANT[self.sextant]} steps)"
            )

    @property
    def code(self) -> int:
        return SEXTANT_FIRST_CODE[self.sextant] + self.step


@dataclass(frozen=True)
class DeviceParams:
    """Physical constants of one PI half-cell.

    Attributes:
        c_o: output capacitance (F).
        i_c: constant discharge current during Mode II (A).
        v_th: threshold voltage seen by the crossing detector (V).
        v_dd: supply voltage (V).
        current_variation_frac: bound on the discharge-current spread across steps.
        temp_c: operating temperature (degC); the defaults refer to 27 degC.
        alpha_vth: threshold temperature coefficient (V/degC).
        alpha_ic: fractional current temperature coefficient (1/degC).
        tau_charge: Mode I charge time constant of the set switches onto c_o (s).
        activity_factor: dimensionless switching-activity constant of the power model.
    """

    c_o: float = 100e-15
    i_c: float = 96e-6
    v_th: float = 0.39
    v_dd: float = 1.2
    current_variation_frac: float = 0.05
    temp_c: float = T_NOMINAL_C
    alpha_vth: float = -1e-3
    alpha_ic: float = 2e-3
    tau_charge: float = 10e-12
    activity_factor: float = 4.03

    @property
    def slope(self) -> float:
        """Magnitude of the Mode II ramp slope, I_c / C_o (V/s)."""
        return self.i_c / self.c_o


@dataclass(frozen=True)
class NoiseParams:
    """Per-half-cell mismatch sigmas and per-edge jitter.

    The defaults are calibration values that put the 200-trial worst INL in
    the few-ps range; they are not process data.
    """

    seed: int = 42
    sigma_vth: float = 1e-3
    sigma_ic_frac: float = 1e-3
    sigma_co_frac: float = 1e-3
    sigma_comp_offset: float = 0.1e-12
    jitter_sigma: float = 0.0

    def __post_init__(self):
        for name in ("sigma_vth", "sigma_ic_frac", "sigma_co_frac",
                     "sigma_comp_offset", "jitter_sigma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def is_quiet(self) -> bool:
        return not any((self.sigma_vth, self.sigma_ic_frac, self.sigma_co_frac,
                        self.sigma_comp_offset, self.jitter_sigma))


def decode_code(code: PhaseCode | int) -> SextantStep:
    """Split a 5-bit code into coarse sextant (MUX2) and fine step (MUX1)."""
    c = PhaseCode(int(code)).code
    # floor(code * 11.25 / 60) in exact integer arithmetic
    sextant = (c * 3) // 16
    step = c - SEXTANT_FIRST_CODE[sextant]
    return SextantStep(sextant, step, PHASE_STEP_DEG * c - SEXTANT_DEG * sextant)


def code_phase_ideal(code: PhaseCode | int, clock: ClockSpec) -> tuple[float, float]:
    """Return the ideal ``(phase_deg, delay_s)`` of a code."""
    c = PhaseCode(int(code)).code
    phase = PHASE_STEP_DEG * c
    return phase, phase / 360.0 * clock.period


def fine_offset_time(sextant: int, step: int, clock: ClockSpec) -> float:
    """Delay (s) that the LDO start voltage must add inside a sextant."""
    ss = SextantStep(sextant, step, 0.0)
    return (PHASE_STEP_DEG * ss.code - SEXTANT_DEG * sextant) / 360.0 * clock.period


def max_fine_offset_time(clock: ClockSpec) -> float:
    return max(fine_offset_time(s, n - 1, clock) for s, n in enumerate(STEPS_PER_SEXTANT))


def validate_params(device: DeviceParams, ldo: "LdoParams", clock: ClockSpec):
    """Check a device/LDO/clock combination and return it normalized.

    Raises:
        ConfigError: naming the first violated constraint.
    """
    if not device.c_o > 0:
        raise ConfigError("capacitance must be positive")
    if not device.i_c > 0:
        raise ConfigError("discharge current must be positive")
    if not 0 < device.v_th < device.v_dd:
        raise ConfigError("threshold must lie between 0 and the supply voltage")
    if not 0 <= device.current_variation_frac <= 0.2:
        raise ConfigError("current_variation_frac must be in [0, 0.2]")
    if device.tau_charge < 0:
        raise ConfigError("tau_charge must be non-negative")
    if device.activity_factor < 0:
        raise ConfigError("activity_factor must be non-negative")
    if not ldo.v_min < ldo.v_max:
        raise ConfigError("LDO v_min must be below v_max")
    if device.v_th >= ldo.v_min:
        raise ConfigError("threshold above minimum start voltage")
    span_needed = device.slope * max_fine_offset_time(clock)
    if span_needed > ldo.v_max - ldo.v_min + _V_EPS:
        raise ConfigError(
            f"LDO range insufficient: fine offsets need {span_needed:.6f} V, "
            f"range is {ldo.v_max - ldo.v_min:.6f} V"
        )
    return device, ldo, clock
