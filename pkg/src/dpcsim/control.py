"""Digital control plane: MUX selection, start-voltage ladder, variable-slope baseline."""

from __future__ import annotations

import csv
from dataclasses import dataclass

from dpcsim.analog import LdoParams
from dpcsim.core import (
    N_CODES,
    N_SEXTANTS,
    STEPS_PER_SEXTANT,
    ClockSpec,
    ConfigError,
    DeviceParams,
    PhaseCode,
    decode_code,
    fine_offset_time,
    validate_params,
)


@dataclass(frozen=True)
class VoltageLut:
    """Target start voltage for every ``(sextant, step)``.

    ``entries[s][k]`` is the voltage of step ``k`` in sextant ``s``. Sextants
    3-5 repeat sextants 0-2 when ``mirrored`` is set.
    """

    entries: tuple[tuple[float, ...], ...]
    mirrored: bool = True

    def __post_init__(self):
        if len(self.entries) != N_SEXTANTS:
            raise ValueError("LUT needs one row per sextant")
        for s, row in enumerate(self.entries):
            if len(row) != STEPS_PER_SEXTANT[s]:
                raise ValueError(f"sextant {s} needs {STEPS_PER_SEXTANT[s]} entries")
            if any(not b > a for a, b in zip(row, row[1:])):
                raise ValueError(f"sextant {s} entries must increase with step")
        if self.mirrored and any(self.entries[s] != self.entries[s + 3] for s in range(3)):
            raise ValueError("mirrored LUT halves differ")

    def voltage(self, sextant: int, step: int) -> float:
        return self.entries[sextant][step]

    def rows(self):
        for s, row in enumerate(self.entries):
            for k, v in enumerate(row):
                yield s, k, v


@dataclass(frozen=True)
class ControlWord:
    mux1_sel: int
    mux2_sel: int
    ldo_target: float


@dataclass(frozen=True)
class VariableSlopeConfig:
    """Per-code load capacitance of the variable-slope baseline at a fixed start voltage."""

    cap_per_code: tuple[float, ...]
    v_start_fixed: float

    def __post_init__(self):
        if len(self.cap_per_code) != N_CODES:
            raise ValueError(f"need {N_CODES} capacitances")
        if any(not c > 0 for c in self.cap_per_code):
            raise ValueError("capacitances must be positive")
        # monotone within each sextant; the fine delay restarts at every sextant
        for s in range(N_SEXTANTS):
            caps = [self.cap_per_code[c] for c in range(N_CODES) if decode_code(c).sextant == s]
            if any(not b > a for a, b in zip(caps, caps[1:])):
                raise ValueError("capacitance must increase with step inside a sextant")


def build_voltage_lut(device: DeviceParams, ldo: LdoParams, clock: ClockSpec) -> VoltageLut:
    """Start voltage for each step: v_min + slope * fine-offset delay."""
    validate_params(device, ldo, clock)
    slope = device.slope
    entries = []
    for s, n in enumerate(STEPS_PER_SEXTANT):
        row = tuple(ldo.v_min + slope * fine_offset_time(s, k, clock) for k in range(n))
        if max(row) > ldo.v_max + 1e-12:
            raise ConfigError("LDO range insufficient")
        entries.append(tuple(min(v, ldo.v_max) for v in row))
    return VoltageLut(tuple(entries), mirrored=True)


def select_muxes(code: PhaseCode | int, lut: VoltageLut) -> ControlWord:
    ss = decode_code(code)
    return ControlWord(mux1_sel=ss.step, mux2_sel=ss.sextant,
                       ldo_target=lut.voltage(ss.sextant, ss.step))


def variable_slope_lut(device: DeviceParams, clock: ClockSpec,
                       v_start_fixed: float = 1.0, ldo: LdoParams | None = None) -> VariableSlopeConfig:
    """Capacitances that reproduce the constant-slope delays from a fixed start voltage.

    With an ideal comparator both modes have the same transfer function;
    only the ramp slope differs from code to code.
    """
    ldo = ldo or LdoParams()
    if not v_start_fixed > device.v_th:
        raise ConfigError("fixed start voltage must exceed the threshold")
    caps = []
    for c in range(N_CODES):
        ss = decode_code(c)
        v_code = ldo.v_min + device.slope * fine_offset_time(ss.sextant, ss.step, clock)
        t_delay = (v_code - device.v_th) / device.slope
        caps.append(device.i_c * t_delay / (v_start_fixed - device.v_th))
    return VariableSlopeConfig(tuple(caps), v_start_fixed)


def write_lut_csv(lut: VoltageLut, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sextant", "step", "volts"])
        for s, k, v in lut.rows():
            w.writerow([s, k, f"{v:.6f}"])


def read_lut_csv(path) -> VoltageLut:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["sextant", "step", "volts"]:
            raise ValueError(f"unexpected LUT columns {reader.fieldnames}")
        table: dict[tuple[int, int], float] = {}
        for row in reader:
            key = (int(row["sextant"]), int(row["step"]))
            if key in table:
                raise ValueError(f"duplicate LUT entry {key}")
            table[key] = float(row["volts"])
    try:
        entries = tuple(tuple(table[(s, k)] for k in range(n))
                        for s, n in enumerate(STEPS_PER_SEXTANT))
    except KeyError as exc:
        raise ValueError(f"missing LUT entry {exc.args[0]}") from None
    if len(table) != N_CODES:
        raise ValueError("LUT has entries outside the valid (sextant, step) set")
    mirrored = all(entries[s] == entries[s + 3] for s in range(3))
    return VoltageLut(entries, mirrored=mirrored)
