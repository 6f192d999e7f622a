"""Event-level model of the PI half-cell, TFF pair, XOR and the six-cell bank.

Waveforms are :class:`EdgeList` objects: strictly increasing transition
times plus the level before the first transition. Threshold crossings are
solved in closed form, so no timestep is involved.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping

from dpcsim.analog import (
    ComparatorModel,
    RampState,
    comparator_delay,
    ramp_cross_analytic,
)
from dpcsim.core import N_SEXTANTS, SEXTANT_DEG, ClockSpec, DeviceParams

RISING = "rising"
FALLING = "falling"


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EdgeList:
    """Alternating transitions of a binary signal.

    Polarity is implied: edge ``i`` leaves the signal at level
    ``initial ^ ((i + 1) & 1)``.
    """

    times: tuple[float, ...] = ()
    initial: int = 0

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        for a, b in zip(times, times[1:]):
            if not b > a:
                raise ValueError("edge times must be strictly increasing")
        if self.initial not in (0, 1):
            raise ValueError("initial level must be 0 or 1")
        object.__setattr__(self, "times", times)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, str]]) -> "EdgeList":
        pairs = list(pairs)
        if not pairs:
            return cls()
        initial = 0 if pairs[0][1] == RISING else 1
        out = cls(tuple(t for t, _ in pairs), initial)
        if [p for _, p in pairs] != [p for _, p in out.edges]:
            raise ValueError("edge polarities must alternate")
        return out

    def __len__(self):
        return len(self.times)

    def polarity(self, i: int) -> str:
        return RISING if (self.initial + i) % 2 == 0 else FALLING

    @property
    def edges(self) -> list[tuple[float, str]]:
        return [(t, self.polarity(i)) for i, t in enumerate(self.times)]

    def rising(self) -> list[float]:
        start = 0 if self.initial == 0 else 1
        return list(self.times[start::2])

    def falling(self) -> list[float]:
        start = 1 if self.initial == 0 else 0
        return list(self.times[start::2])

    def inverted(self) -> "EdgeList":
        return EdgeList(self.times, 1 - self.initial)

    def level_at(self, t: float) -> int:
        """Level just after time ``t`` (an edge at exactly ``t`` counts)."""
        n = bisect_right(self.times, t)
        return self.initial ^ (n & 1)


def clock_edges(phase_deg: float, clock: ClockSpec, n_periods: int,
                skew: float = 0.0, duty: float = 0.5) -> EdgeList:
    """Square wave of the given phase over ``[0, n_periods * T)``.

    The signal is high on ``[phase, phase + duty*T)`` modulo the period.
    """
    if not 0 < duty < 1:
        raise ValueError("duty must be in (0, 1)")
    T = clock.period
    rise0 = (phase_deg % 360.0) / 360.0 * T + skew
    high = duty * T
    events = []
    for k in range(-1, n_periods + 1):
        r = rise0 + k * T
        events.append((r, RISING))
        events.append((r + high, FALLING))
    events = [(t, p) for t, p in events if 0.0 <= t < n_periods * T]
    # drop a leading edge at exactly t=0 into the initial level
    if events and events[0][0] == 0.0:
        initial = 1 if events[0][1] == RISING else 0
        events = events[1:]
    elif events:
        initial = 0 if events[0][1] == RISING else 1
    else:
        initial = 0
    return EdgeList(tuple(t for t, _ in events), initial)


def input_phase_clock(index: int, clock: ClockSpec, n_periods: int) -> EdgeList:
    """FLL output number ``index`` (phase 60 * index degrees)."""
    i = index % N_SEXTANTS
    return clock_edges(SEXTANT_DEG * i, clock, n_periods, skew=clock.skew[i])


@dataclass(frozen=True)
class CellVariation:
    """Mismatch of one half-cell relative to the nominal device."""

    dv_th: float = 0.0
    ic_frac: float = 0.0
    co_frac: float = 0.0
    t_offset: float = 0.0

    def apply(self, device: DeviceParams) -> DeviceParams:
        return replace(
            device,
            v_th=device.v_th + self.dv_th,
            i_c=device.i_c * (1.0 + self.ic_frac),
            c_o=device.c_o * (1.0 + self.co_frac),
        )


NOMINAL = CellVariation()

VoltageSource = float | Callable[[float], float]


@dataclass(frozen=True)
class HalfCellInputs:
    clk_a: EdgeList
    clk_b: EdgeList
    v_ldo: VoltageSource

    def sample_v(self, t: float) -> float:
        return float(self.v_ldo(t)) if callable(self.v_ldo) else float(self.v_ldo)


@dataclass(frozen=True)
class UnitCellOutput:
    tff_a: EdgeList
    tff_b: EdgeList
    out: EdgeList
    half_a: EdgeList
    half_b: EdgeList


def half_cell_cross_events(inputs: HalfCellInputs, device: DeviceParams,
                           comp: ComparatorModel, *, strict: bool = True,
                           variation: CellVariation = NOMINAL,
                           jitter: Callable[[], float] | None = None) -> EdgeList:
    """Comparator output of one half-cell.

    Each rising edge of ``clk_a`` starts a Mode II discharge from the sampled
    LDO voltage. The comparator output rises at the threshold crossing plus
    the comparator delay and falls again at the next Mode I entry, when C_o
    is recharged. In strict mode the crossing must precede the ``clk_b``
    rise and the preceding Mode I window must last at least 5 ``tau_charge``.
    Otherwise it only has to fall within the ``clk_a`` high phase.

    Raises:
        SimulationError: "crossing outside Mode II window" on a timing violation.
    """
    dev = variation.apply(device)
    slope = dev.slope
    v_trip = dev.v_th + comp.offset_v
    delay = comparator_delay(comp, slope) + variation.t_offset
    a_rise, a_fall = inputs.clk_a.rising(), inputs.clk_a.falling()
    b_rise, b_fall = inputs.clk_b.rising(), inputs.clk_b.falling()

    times: list[float] = []
    for t0 in a_rise:
        fall_a = _next_after(a_fall, t0)
        end = fall_a
        if strict:
            end = min(end, _next_after(b_rise, t0))
            _check_mode1_window(t0, a_fall, b_fall, inputs.clk_b, dev.tau_charge)
        try:
            t_cross = ramp_cross_analytic(RampState(inputs.sample_v(t0), slope, t0), v_trip)
        except ValueError as exc:
            raise SimulationError(str(exc)) from exc
        if not t_cross < end:
            raise SimulationError(
                f"crossing outside Mode II window: crossing at {t_cross:.6e} s, "
                f"window [{t0:.6e}, {end:.6e}) s"
            )
        t_out = t_cross + delay + (jitter() if jitter is not None else 0.0)
        # Mode I: both clocks low, C_o recharged, comparator output resets
        t_reset = _mode1_entry(t_cross, inputs.clk_a, inputs.clk_b)
        if times and not t_out > times[-1]:
            raise SimulationError("comparator edges overlap between periods")
        times.append(t_out)
        if t_reset is not None:
            if not t_reset > t_out:
                raise SimulationError("comparator output still low at Mode I entry")
            times.append(t_reset)
    return EdgeList(tuple(times), 0)


def _next_after(times: list[float], t: float) -> float:
    i = bisect_right(times, t)
    return times[i] if i < len(times) else math.inf


def _prev_before(times: list[float], t: float) -> float:
    i = bisect_left(times, t)
    return times[i - 1] if i > 0 else -math.inf


def _mode1_entry(t: float, clk_a: EdgeList, clk_b: EdgeList) -> float | None:
    # both clocks low: after the later of the next falls, if both end up low
    cand = sorted(x for x in (_next_after(clk_a.falling(), t),
                              _next_after(clk_b.falling(), t)) if x != math.inf)
    for x in cand:
        if clk_a.level_at(x) == 0 and clk_b.level_at(x) == 0:
            return x
    return None


def _check_mode1_window(t0, a_fall, b_fall, clk_b, tau):
    last_low = max(_prev_before(a_fall, t0), _prev_before(b_fall, t0))
    if last_low == -math.inf or clk_b.level_at(last_low) == 1:
        # no complete Mode I window inside the simulated span
        return
    if t0 - last_low < 5.0 * tau:
        raise SimulationError(
            f"Mode I window {t0 - last_low:.3e} s shorter than 5 tau_charge"
        )


def tff_toggle(in_edges: EdgeList, initial_state: int = 0) -> EdgeList:
    """Toggle flip-flop clocked by the rising input edges."""
    return EdgeList(tuple(in_edges.rising()), initial_state)


def xor_merge(a: EdgeList, b: EdgeList) -> EdgeList:
    merged = sorted(a.times + b.times)
    for x, y in zip(merged, merged[1:]):
        if x == y:
            raise SimulationError("degenerate XOR input: coincident edges")
    return EdgeList(tuple(merged), a.initial ^ b.initial)


def bank_select(sextant: int) -> tuple[float, float]:
    """Input-phase pair (clk_a, clk_b) in degrees for a sextant's unit cell."""
    if not 0 <= sextant < N_SEXTANTS:
        raise ValueError(f"sextant must be in [0, 5], got {sextant}")
    return SEXTANT_DEG * sextant, (SEXTANT_DEG * sextant + 120.0) % 360.0


def powered_cells(sextant: int) -> tuple[bool, ...]:
    """Only the selected unit cell is powered."""
    bank_select(sextant)
    return tuple(i == sextant for i in range(N_SEXTANTS))


def unit_cell_edges(code_voltage: VoltageSource, sextant: int, device: DeviceParams,
                    comp: ComparatorModel, clock: ClockSpec, *, n_periods: int = 8,
                    strict: bool = True,
                    variations: tuple[CellVariation, CellVariation] = (NOMINAL, NOMINAL),
                    jitter: Callable[[], float] | None = None) -> UnitCellOutput:
    """Simulate one unit cell: two half-cells, two TFFs and the XOR.

    Half-cell B is driven by the complements of half-cell A's clocks. The
    TFF B initial state is chosen so that the output's rising edges come
    from half-cell A, which fixes the 180 degree ambiguity of the XOR.
    """
    pa, pb = bank_select(sextant)
    ia, ib = round(pa / SEXTANT_DEG), round(pb / SEXTANT_DEG)
    clk_a = input_phase_clock(ia, clock, n_periods)
    clk_b = input_phase_clock(ib, clock, n_periods)
    half_a = half_cell_cross_events(HalfCellInputs(clk_a, clk_b, code_voltage), device, comp,
                                    strict=strict, variation=variations[0], jitter=jitter)
    half_b = half_cell_cross_events(HalfCellInputs(clk_a.inverted(), clk_b.inverted(),
                                                   code_voltage),
                                    device, comp, strict=strict, variation=variations[1],
                                    jitter=jitter)
    ra, rb = half_a.rising(), half_b.rising()
    b_init = 0
    if ra:
        b_init = bisect_left(rb, ra[0]) & 1
    tff_a = tff_toggle(half_a, 0)
    tff_b = tff_toggle(half_b, b_init)
    return UnitCellOutput(tff_a, tff_b, xor_merge(tff_a, tff_b), half_a, half_b)


def dump_waveforms(path, signals: Mapping[str, EdgeList]) -> None:
    """Write ``time_s,signal_name,value`` rows: initial levels at t=0 then every edge."""
    rows = []
    for name, edges in signals.items():
        rows.append((0.0, name, edges.initial))
        level = edges.initial
        for t in edges.times:
            level ^= 1
            rows.append((t, name, level))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "signal_name", "value"])
        for t, name, v in rows:
            w.writerow([f"{t:.15e}", name, v])
