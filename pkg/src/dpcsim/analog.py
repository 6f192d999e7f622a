"""Ramp discharge, comparator and LDO behavioral models."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dpcsim.core import SextantStep


class RampError(ValueError):
    pass


@dataclass(frozen=True)
class RampState:
    """Linear Mode II discharge of C_o starting from the LDO voltage.

    ``slope`` is the magnitude of dVo/dt = -I_c/C_o, in V/s.
    """

    v_start: float
    slope: float
    t_start: float = 0.0

    def __post_init__(self):
        if not self.slope > 0:
            raise RampError("ramp slope must be positive")


@dataclass(frozen=True)
class ComparatorModel:
    """Crossing detector with a first-order inverse-slope delay.

    delay = t_fixed + k_slope / slope; trip point = v_th + offset_v.
    """

    t_fixed: float = 20e-12
    k_slope: float = 9.6e-3
    offset_v: float = 0.0

    def __post_init__(self):
        if self.t_fixed < 0 or self.k_slope < 0:
            raise ValueError("comparator t_fixed and k_slope must be non-negative")


IDEAL_COMPARATOR = ComparatorModel(t_fixed=0.0, k_slope=0.0)


@dataclass(frozen=True)
class LdoParams:
    """Closed-loop behavior of the start-voltage regulator.

    ``omega_n`` is in rad/s; the default pair (zeta=0.6, omega_n=0.96 rad/ns)
    settles a 0.3 V step into a 1 % band in about 6.5 ns.
    """

    v_min: float = 0.7
    v_max: float = 1.0
    dc_gain_db: float = 50.0
    zeta: float = 0.6
    omega_n: float = 0.96e9
    ripple_amp: float = 2e-3
    ripple_freq: float = 0.5e9
    i_quiescent: float = 50e-6
    settle_tolerance_frac: float = 0.01
    dropout: float = 0.1

    def __post_init__(self):
        if not 0 < self.zeta < 1:
            raise ValueError("LDO model is underdamped second order: need 0 < zeta < 1")
        if not self.omega_n > 0:
            raise ValueError("omega_n must be positive")
        if self.ripple_amp < 0 or self.i_quiescent < 0:
            raise ValueError("ripple_amp and i_quiescent must be non-negative")

    @property
    def dc_gain(self) -> float:
        return 10.0 ** (self.dc_gain_db / 20.0)


def ramp_cross_analytic(ramp: RampState, v_th_eff: float) -> float:
    """Exact instant the linear discharge reaches ``v_th_eff``."""
    if ramp.v_start <= v_th_eff:
        raise RampError("ramp never crosses threshold")
    return ramp.t_start + (ramp.v_start - v_th_eff) / ramp.slope


def ramp_integrate_oracle(ramp: RampState, v_th_eff: float, dt: float,
                          max_time: float = 20e-9, chunk: int = 8192) -> float:
    """Forward-Euler reference for :func:`ramp_cross_analytic`.

    Steps v(t+dt) = v(t) - slope*dt from ``v_start`` and linearly
    interpolates inside the step where v first drops to ``v_th_eff``.
    ``max_time`` defaults to 10 periods of a 0.5 GHz clock.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if ramp.v_start <= v_th_eff:
        return ramp.t_start
    dv = ramp.slope * dt
    n_max = int(math.ceil(max_time / dt))
    v = ramp.v_start
    done = 0
    while done < n_max:
        n = min(chunk, n_max - done)
        trace = v - np.cumsum(np.full(n, dv))
        hit = np.flatnonzero(trace <= v_th_eff)
        if hit.size:
            i = hit[0]
            v_prev = v if i == 0 else trace[i - 1]
            frac = (v_prev - v_th_eff) / (v_prev - trace[i])
            return ramp.t_start + (done + i + frac) * dt
        v = trace[-1]
        done += n
    raise RampError("no threshold crossing within the integration horizon")


def comparator_delay(model: ComparatorModel, input_slope: float) -> float:
    if not input_slope > 0:
        raise ValueError("comparator input slope must be positive")
    return model.t_fixed + model.k_slope / input_slope


def ldo_target(ldo: LdoParams, sextant: int, step: int, lut) -> float:
    """Ladder voltage selected by MUX1 for ``(sextant, step)``."""
    SextantStep(sextant, step, 0.0)
    v = lut.voltage(sextant, step)
    if not ldo.v_min - 1e-12 <= v <= ldo.v_max + 1e-12:
        raise ValueError(f"LUT entry {v} V outside LDO range [{ldo.v_min}, {ldo.v_max}]")
    return v


def ldo_static_error(ldo: LdoParams, v_target: float) -> float:
    """Finite-loop-gain output error v_target / (1 + A)."""
    return v_target / (1.0 + ldo.dc_gain)


def ldo_step_response(ldo: LdoParams, v_from: float, v_to: float, t):
    """Ripple-free second-order step response; ``t`` may be an array."""
    t = np.asarray(t, dtype=float)
    z, wn = ldo.zeta, ldo.omega_n
    wd = wn * math.sqrt(1.0 - z * z)
    env = np.exp(-z * wn * t) * (np.cos(wd * t) + z / math.sqrt(1.0 - z * z) * np.sin(wd * t))
    v = v_to + (v_from - v_to) * env
    return np.where(t < 0, v_from, v)


def ldo_transient(ldo: LdoParams, v_from: float, v_to: float, t):
    """Output voltage ``t`` seconds after the target changes from ``v_from`` to ``v_to``.

    Ripple is a single sinusoid at ``ripple_freq``, phase-referenced to the
    step instant.
    """
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")
    v = ldo_step_response(ldo, v_from, v_to, t)
    ripple = ldo.ripple_amp * np.sin(2.0 * math.pi * ldo.ripple_freq * np.asarray(t, dtype=float))
    out = v + ripple
    return float(out) if out.ndim == 0 else out


def settling_time(ldo: LdoParams, v_from: float, v_to: float,
                  t_max: float = 50e-9, n: int = 500_001) -> float:
    """Last instant the ripple-free response lies outside the settle band.

    The band is ``settle_tolerance_frac`` of the step height around ``v_to``.
    """
    step = abs(v_to - v_from)
    if step == 0:
        return 0.0
    t = np.linspace(0.0, t_max, n)
    err = np.abs(ldo_step_response(ldo, v_from, v_to, t) - v_to)
    outside = np.flatnonzero(err > ldo.settle_tolerance_frac * step)
    if outside.size == 0:
        return 0.0
    i = outside[-1]
    if i + 1 >= n:
        return math.inf
    # refine the band exit between the two bracketing samples
    band = ldo.settle_tolerance_frac * step
    e0, e1 = err[i], err[i + 1]
    return float(t[i] + (e0 - band) / (e0 - e1) * (t[i + 1] - t[i]))


def ripple_peak_to_peak(ldo: LdoParams, v: float, t_start: float = 20e-9,
                        duration: float = 20e-9, n: int = 200_001) -> float:
    """Peak-to-peak output excursion over a steady-state window."""
    t = np.linspace(t_start, t_start + duration, n)
    trace = ldo_transient(ldo, v, v, t)
    return float(np.max(trace) - np.min(trace))
