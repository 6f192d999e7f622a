import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpcsim.analog import (
    ComparatorModel,
    LdoParams,
    RampError,
    RampState,
    comparator_delay,
    ldo_static_error,
    ldo_step_response,
    ldo_target,
    ldo_transient,
    ramp_cross_analytic,
    ramp_integrate_oracle,
    ripple_peak_to_peak,
    settling_time,
)
from dpcsim.control import build_voltage_lut
from dpcsim.core import ClockSpec, DeviceParams

SLOPE = 0.96e9


def test_ramp_examples():
    assert ramp_cross_analytic(RampState(0.82, SLOPE), 0.39) == pytest.approx(447.917e-12, abs=1e-15)
    assert ramp_cross_analytic(RampState(1.0, SLOPE), 0.39) == pytest.approx(635.417e-12, abs=1e-15)
    assert ramp_cross_analytic(RampState(0.39 + 1e-15, SLOPE, 5e-9), 0.39) == pytest.approx(5e-9, abs=1e-20)


def test_ramp_never_crosses():
    with pytest.raises(RampError, match="never crosses"):
        ramp_cross_analytic(RampState(0.3, SLOPE), 0.39)


def test_oracle_example_and_convergence():
    ramp = RampState(0.82, SLOPE)
    fine = ramp_integrate_oracle(ramp, 0.39, 10e-15)
    coarse = ramp_integrate_oracle(ramp, 0.39, 1e-12)
    assert fine == pytest.approx(447.917e-12, abs=0.01e-12)
    assert abs(fine - coarse) < 1e-12


def test_oracle_slope_doubling_halves_delay():
    t1 = ramp_integrate_oracle(RampState(0.82, SLOPE, 1e-9), 0.39, 10e-15)
    t2 = ramp_integrate_oracle(RampState(0.82, 2 * SLOPE, 1e-9), 0.39, 10e-15)
    assert (t2 - 1e-9) == pytest.approx((t1 - 1e-9) / 2, abs=10e-15)


def test_oracle_horizon_error():
    with pytest.raises(RampError):
        ramp_integrate_oracle(RampState(1.0, 1e6), 0.39, 1e-12, max_time=1e-9)
    with pytest.raises(ValueError):
        ramp_integrate_oracle(RampState(1.0, SLOPE), 0.39, 0.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 1.2), st.floats(0.2, 0.45), st.floats(0.3e9, 3e9), st.floats(0, 5e-9))
def test_analytic_matches_oracle(v_start, v_th, slope, t0):
    ramp = RampState(v_start, slope, t0)
    dt = 10e-15
    assert abs(ramp_cross_analytic(ramp, v_th) - ramp_integrate_oracle(ramp, v_th, dt)) <= dt


@given(st.floats(0.5, 1.0), st.floats(1e-4, 1e-2))
def test_delay_affine_in_start_voltage(v, dv):
    dev = DeviceParams()
    f = lambda x: ramp_cross_analytic(RampState(x, dev.slope), dev.v_th)
    fd = (f(v + dv) - f(v)) / dv
    assert fd == pytest.approx(dev.c_o / dev.i_c, rel=1e-6)


@pytest.mark.parametrize("model, slope, expected", [
    (ComparatorModel(20e-12, 0.0), 0.96e9, 20e-12),
    (ComparatorModel(20e-12, 0.0), 0.1e9, 20e-12),
    (ComparatorModel(20e-12, 9.6e-3), 0.96e9, 30e-12),
    (ComparatorModel(20e-12, 9.6e-3), 0.48e9, 40e-12),
])
def test_comparator_delay(model, slope, expected):
    assert comparator_delay(model, slope) == pytest.approx(expected, rel=1e-12)


def test_comparator_delay_constant_when_slope_constant():
    comp = ComparatorModel()
    delays = {comparator_delay(comp, DeviceParams().slope) for _ in range(32)}
    assert len(delays) == 1
    with pytest.raises(ValueError):
        comparator_delay(comp, 0.0)


def test_ldo_target_examples():
    ldo = LdoParams()
    lut = build_voltage_lut(DeviceParams(), ldo, ClockSpec())
    assert ldo_target(ldo, 0, 0, lut) == pytest.approx(0.7, abs=1e-12)
    assert ldo_target(ldo, 0, 5, lut) == pytest.approx(1.0, abs=1e-12)
    assert ldo_target(ldo, 0, 2, lut) == pytest.approx(0.82, abs=1e-12)
    with pytest.raises(ValueError):
        ldo_target(ldo, 1, 5, lut)


def _rk4_step_response(ldo, v_from, v_to, t_end, dt=1e-12):
    # independent oracle: integrate x'' + 2 zeta wn x' + wn^2 (x - v_to) = 0
    z, wn = ldo.zeta, ldo.omega_n
    x, v = v_from, 0.0
    ts, xs = [0.0], [x]

    def f(x, v):
        return v, -2 * z * wn * v - wn * wn * (x - v_to)

    for i in range(int(round(t_end / dt))):
        k1 = f(x, v)
        k2 = f(x + dt / 2 * k1[0], v + dt / 2 * k1[1])
        k3 = f(x + dt / 2 * k2[0], v + dt / 2 * k2[1])
        k4 = f(x + dt * k3[0], v + dt * k3[1])
        x += dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        v += dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        ts.append((i + 1) * dt)
        xs.append(x)
    return np.array(ts), np.array(xs)


def test_ldo_closed_form_matches_ode_oracle():
    ldo = LdoParams()
    t, x = _rk4_step_response(ldo, 0.7, 1.0, 15e-9)
    assert np.max(np.abs(ldo_step_response(ldo, 0.7, 1.0, t) - x)) < 1e-9
    # oracle's own settling instant
    outside = np.flatnonzero(np.abs(x - 1.0) > 0.01 * 0.3)
    assert settling_time(ldo, 0.7, 1.0) == pytest.approx(t[outside[-1]], abs=2e-12)


def test_ldo_transient_limits():
    ldo = LdoParams()
    assert abs(ldo_transient(ldo, 0.7, 1.0, 0.0) - 0.7) <= ldo.ripple_amp
    assert abs(ldo_transient(ldo, 0.7, 1.0, 200e-9) - 1.0) <= ldo.ripple_amp + 1e-12
    with pytest.raises(ValueError):
        ldo_transient(ldo, 0.7, 1.0, -1e-9)


def test_ldo_settles_within_8ns():
    ldo = LdoParams()
    t_s = settling_time(ldo, ldo.v_min, ldo.v_max)
    assert t_s <= 8e-9
    # consistent with the envelope estimate 4.6 / (zeta wn)
    assert t_s < 4.6 / (ldo.zeta * ldo.omega_n) * 1.05


def test_ripple_peak_to_peak():
    ldo = LdoParams()
    assert ripple_peak_to_peak(ldo, 0.82) == pytest.approx(2 * ldo.ripple_amp, rel=1e-3)
    assert ripple_peak_to_peak(ldo, 0.82) <= 4e-3 * (1 + 1e-9)


@given(st.floats(0.7, 1.0), st.floats(0.7, 1.0), st.floats(0.6, 0.95))
def test_ldo_bounded_without_ripple(v_from, v_to, zeta):
    ldo = LdoParams(zeta=zeta, ripple_amp=0.0)
    t = np.linspace(0, 30e-9, 3001)
    v = ldo_transient(ldo, v_from, v_to, t)
    assert np.all(np.abs(v - v_to) <= abs(v_from - v_to) + 1e-12)


def test_static_error_is_millivolt_scale():
    err = ldo_static_error(LdoParams(), 0.82)
    assert err == pytest.approx(0.82 / (1 + 10 ** 2.5), rel=1e-12)
    assert 2e-3 < err < 3e-3
