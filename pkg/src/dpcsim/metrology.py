"""Phase extraction, linearity, Monte Carlo, jitter histograms, power and sweeps.

Random draws: every trial ``i`` owns the generator
``numpy.random.default_rng([seed, i])`` (a SeedSequence over the pair) for
mismatch and ``default_rng([seed, i, 1])`` for edge jitter. Gaussians come
from ``Generator.standard_normal`` (ziggurat) scaled by the sigmas. Trial
results therefore do not depend on execution order or worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from dpcsim.analog import ldo_transient
from dpcsim.config import SimConfig
from dpcsim.control import (
    VariableSlopeConfig,
    VoltageLut,
    build_voltage_lut,
    select_muxes,
    variable_slope_lut,
)
from dpcsim.core import (
    N_CODES,
    N_SEXTANTS,
    SEXTANT_DEG,
    T_NOMINAL_C,
    ClockSpec,
    ConfigError,
    DeviceParams,
    NoiseParams,
    PhaseCode,
    code_phase_ideal,
    decode_code,
)
from dpcsim.datapath import (
    NOMINAL,
    CellVariation,
    EdgeList,
    SimulationError,
    input_phase_clock,
    unit_cell_edges,
)

TEMP_RANGE_C = (-40.0, 125.0)


@dataclass(frozen=True)
class PhaseMeasurement:
    code: int
    mean_phase_deg: float
    mean_delay_s: float
    edge_times: tuple[float, ...]
    std_delay_s: float = 0.0


@dataclass(frozen=True)
class LinearityReport:
    """Code-to-delay transfer function relative to code 0.

    ``inl_s`` is endpoint-referenced (line through codes 0 and 31);
    ``inl_fit_s`` is referenced to the least-squares line.
    """

    period: float
    ideal_s: np.ndarray
    delays_s: np.ndarray
    inl_s: np.ndarray
    dnl_s: np.ndarray
    inl_fit_s: np.ndarray

    @property
    def inl_max_s(self) -> float:
        return float(np.max(self.inl_s))

    @property
    def inl_min_s(self) -> float:
        return float(np.min(self.inl_s))

    @property
    def max_abs_inl_s(self) -> float:
        return float(np.max(np.abs(self.inl_s)))

    @property
    def inl_max_pct(self) -> float:
        return self.inl_max_s / self.period * 100.0

    @property
    def steps_s(self) -> np.ndarray:
        return np.diff(self.delays_s)


@dataclass(frozen=True)
class TrialSummary:
    trial: int
    max_inl_s: float = math.nan
    min_inl_s: float = math.nan
    argmax_code: int = -1
    argmin_code: int = -1
    vth_at_max_v: float = math.nan
    vth_at_min_v: float = math.nan
    error: str | None = None


@dataclass(frozen=True)
class McResult:
    n_trials: int
    seed: int
    per_trial: tuple[TrialSummary, ...]
    worst_max_inl_s: float
    worst_min_inl_s: float
    vth_at_worst_max_v: float
    vth_at_worst_min_v: float

    @property
    def failed(self) -> list[TrialSummary]:
        return [t for t in self.per_trial if t.error is not None]


@dataclass(frozen=True)
class ZeroCrossingStats:
    code: int
    mean_s: float
    std_s: float
    bin_width_s: float
    bin_centers_s: np.ndarray
    counts: np.ndarray
    samples: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PowerReport:
    p_pi_w: float
    p_ldo_w: float
    p_total_w: float
    energy_per_step_j: float
    active_sextant: int


@dataclass(frozen=True)
class SweepPoint:
    x_value: float
    worst_inl_s: float
    min_inl_s: float
    power_w: float


# -- phase extraction -------------------------------------------------------

def measure_phase(out: EdgeList | Sequence[float], ref: EdgeList, clock: ClockSpec, *,
                  code: int = 0, t_min: float = 0.0, n_edges: int | None = None,
                  min_edges: int = 4) -> PhaseMeasurement:
    """Mean phase of ``out``'s rising edges against the nearest ``ref`` rising edge.

    Edges before ``t_min`` are warm-up and ignored. The per-edge offsets are
    folded into one period and averaged on the circle.
    """
    T = clock.period
    t_out = out.rising() if isinstance(out, EdgeList) else list(out)
    t_out = np.array([t for t in t_out if t >= t_min])
    if n_edges is not None:
        t_out = t_out[:n_edges]
    if t_out.size < min_edges:
        raise SimulationError(f"insufficient edges: {t_out.size} < {min_edges}")
    r = np.asarray(ref.rising())
    if r.size == 0:
        raise SimulationError("insufficient edges: reference has no rising edges")
    idx = np.clip(np.searchsorted(r, t_out), 1, r.size - 1) if r.size > 1 else np.zeros(t_out.size, int)
    if r.size > 1:
        left, right = r[idx - 1], r[idx]
        nearest = np.where(np.abs(t_out - left) <= np.abs(right - t_out), left, right)
    else:
        nearest = np.full(t_out.size, r[0])
    offsets = np.mod(t_out - nearest, T)
    ang = 2.0 * np.pi * offsets / T
    mean_ang = math.atan2(float(np.mean(np.sin(ang))), float(np.mean(np.cos(ang))))
    mean_off = (mean_ang / (2.0 * np.pi) * T) % T
    # residuals around the circular mean, for a time-domain spread
    resid = np.mod(offsets - mean_off + T / 2, T) - T / 2
    phase = mean_off / T * 360.0
    return PhaseMeasurement(code, phase, mean_off, tuple(t_out.tolist()),
                            float(np.std(resid)))


# -- end-to-end sweeps -------------------------------------------------------

@dataclass(frozen=True)
class SweepSetup:
    """Everything that stays fixed across the codes of one sweep."""

    cfg: SimConfig
    lut: VoltageLut
    mode: str = "constant"  # constant | variable
    device: DeviceParams | None = None  # actual (e.g. temperature-shifted) device
    strict: bool | None = None
    variable: VariableSlopeConfig | None = None

    @property
    def actual_device(self) -> DeviceParams:
        return self.device or self.cfg.device


def make_setup(cfg: SimConfig, mode: str = "constant", device: DeviceParams | None = None,
               strict: bool | None = None) -> SweepSetup:
    if mode not in ("constant", "variable"):
        raise ValueError("mode must be 'constant' or 'variable'")
    # the ladder is designed for the nominal device
    lut = build_voltage_lut(cfg.device, cfg.ldo, cfg.clock)
    vs = None
    if mode == "variable":
        vs = variable_slope_lut(cfg.device, cfg.clock, cfg.ldo.v_max, cfg.ldo)
    return SweepSetup(cfg, lut, mode, device, strict, vs)


def simulate_code(setup: SweepSetup, code: int, *, prev_code: int | None = None,
                  variations: Sequence[tuple[CellVariation, CellVariation]] | None = None,
                  jitter=None) -> PhaseMeasurement:
    """Run one code through its unit cell and measure the settled output phase."""
    cfg = setup.cfg
    clock, ldo, sim = cfg.clock, cfg.ldo, cfg.sim
    ss = decode_code(code)
    device = setup.actual_device
    strict = sim.strict if setup.strict is None else setup.strict
    if setup.variable is not None:
        vs = setup.variable
        device = replace(device, c_o=device.c_o * vs.cap_per_code[code] / cfg.device.c_o)
        v_target = vs.v_start_fixed
        v_prev = v_target
    else:
        v_target = select_muxes(code, setup.lut).ldo_target
        v_prev = v_target if prev_code is None else select_muxes(prev_code, setup.lut).ldo_target

    if sim.ldo_mode == "transient" and v_prev != v_target:
        # the new control word takes effect at the active cell's first clk_a edge
        t_step = (ss.sextant * SEXTANT_DEG / 360.0) * clock.period + clock.skew[ss.sextant]

        def v_source(t, a=v_prev, b=v_target, t0=t_step):
            return a if t < t0 else ldo_transient(ldo, a, b, t - t0)
    else:
        v_source = v_target

    var = variations[ss.sextant] if variations is not None else (NOMINAL, NOMINAL)
    n_periods = sim.warmup_periods + sim.measure_periods + 2
    out = unit_cell_edges(v_source, ss.sextant, device, cfg.comparator, clock,
                          n_periods=n_periods, strict=strict, variations=var, jitter=jitter)
    ref = input_phase_clock(0, clock, n_periods + 1)
    return measure_phase(out.out, ref, clock, code=code,
                         t_min=sim.warmup_periods * clock.period,
                         n_edges=sim.measure_periods)


def sweep_sequence(setup: SweepSetup, codes: Iterable[int], **kwargs) -> list[PhaseMeasurement]:
    """Measure ``codes`` in order; each LDO transition starts from the previous code."""
    out = []
    prev = None
    for c in codes:
        out.append(simulate_code(setup, int(c), prev_code=prev, **kwargs))
        prev = int(c)
    return out


def sweep_codes(cfg: SimConfig, mode: str = "constant", **kwargs) -> LinearityReport:
    setup = make_setup(cfg, mode)
    return compute_inl_dnl(sweep_sequence(setup, range(N_CODES), **kwargs), cfg.clock)


def relative_delays(measurements: Sequence[PhaseMeasurement], clock: ClockSpec) -> np.ndarray:
    """Delays relative to the first measurement, unwrapped around the ideal code delays."""
    T = clock.period
    base = measurements[0].mean_delay_s
    ideal0 = code_phase_ideal(measurements[0].code, clock)[1]
    out = []
    for m in measurements:
        ideal = code_phase_ideal(m.code, clock)[1] - ideal0
        raw = m.mean_delay_s - base
        out.append(ideal + ((raw - ideal + T / 2) % T - T / 2))
    return np.array(out)


def compute_inl_dnl(measurements: Sequence[PhaseMeasurement], clock: ClockSpec) -> LinearityReport:
    """Endpoint INL, best-fit INL and DNL (against the ideal period/32 step)."""
    by_code = {}
    for m in measurements:
        if m.code in by_code:
            raise ValueError(f"duplicate measurement for code {m.code}")
        by_code[m.code] = m
    missing = [c for c in range(N_CODES) if c not in by_code]
    if missing:
        raise ValueError(f"missing code(s) {missing}")
    ordered = [by_code[c] for c in range(N_CODES)]
    d = relative_delays(ordered, clock)
    return linearity_from_delays(d, clock)


def linearity_from_delays(d: np.ndarray, clock: ClockSpec) -> LinearityReport:
    d = np.asarray(d, dtype=float)
    n = d.size
    k = np.arange(n)
    lsb = clock.period / N_CODES
    ideal = k * lsb
    line = d[0] + k * (d[-1] - d[0]) / (n - 1)
    inl = d - line
    inl[0] = inl[-1] = 0.0
    fit = np.polyval(np.polyfit(k, d, 1), k)
    dnl = np.concatenate([[0.0], np.diff(d) - lsb])
    return LinearityReport(clock.period, ideal, d, inl, dnl, d - fit)


# -- Monte Carlo --------------------------------------------------------------

def trial_rngs(seed: int, trial: int) -> tuple[np.random.Generator, np.random.Generator]:
    return np.random.default_rng([seed, trial]), np.random.default_rng([seed, trial, 1])


def draw_variations(rng: np.random.Generator, noise: NoiseParams):
    """Per half-cell mismatch for all six unit cells: ``[(A, B), ...]`` by sextant.

    A fixed block of 6x2x4 normals is always drawn, so zero sigmas do not
    shift the stream.
    """
    z = rng.standard_normal((N_SEXTANTS, 2, 4))
    sig = np.array([noise.sigma_vth, noise.sigma_ic_frac, noise.sigma_co_frac,
                    noise.sigma_comp_offset])
    x = z * sig
    return [tuple(CellVariation(*map(float, x[s, h])) for h in range(2))
            for s in range(N_SEXTANTS)]


def _jitter_source(rng: np.random.Generator, sigma: float):
    if sigma == 0:
        return None
    return lambda: float(rng.standard_normal()) * sigma


def _mc_trial(args) -> TrialSummary:
    cfg, noise, trial, device = args
    setup = make_setup(cfg, device=device, strict=False)
    rng, jrng = trial_rngs(noise.seed, trial)
    variations = draw_variations(rng, noise)
    try:
        rep = compute_inl_dnl(
            sweep_sequence(setup, range(N_CODES), variations=variations,
                           jitter=_jitter_source(jrng, noise.jitter_sigma)),
            cfg.clock)
    except (SimulationError, ValueError) as exc:
        return TrialSummary(trial, error=str(exc))
    i_max, i_min = int(np.argmax(rep.inl_s)), int(np.argmin(rep.inl_s))
    base_vth = (device or cfg.device).v_th

    def vth(code):
        return base_vth + variations[decode_code(code).sextant][0].dv_th

    return TrialSummary(trial, rep.inl_max_s, rep.inl_min_s, i_max, i_min, vth(i_max), vth(i_min))


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def run_monte_carlo(cfg: SimConfig, noise: NoiseParams | None = None, n_trials: int = 200, *,
                    workers: int | None = None, device: DeviceParams | None = None) -> McResult:
    """Mismatch Monte Carlo of the 32-code sweep.

    Failed trials (timing violations) are kept in ``per_trial`` with their
    error message and excluded from the worst-case aggregation.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    noise = noise or cfg.noise
    workers = cfg.sim.workers if workers is None else workers
    trials = _map(_mc_trial, [(cfg, noise, i, device) for i in range(n_trials)], workers)
    ok = [t for t in trials if t.error is None]
    if not ok:
        raise SimulationError(f"all {n_trials} Monte Carlo trials failed: {trials[0].error}")
    worst_max = max(ok, key=lambda t: (t.max_inl_s, -t.trial))
    worst_min = min(ok, key=lambda t: (t.min_inl_s, t.trial))
    return McResult(n_trials, noise.seed, tuple(trials), worst_max.max_inl_s,
                    worst_min.min_inl_s, worst_max.vth_at_max_v, worst_min.vth_at_min_v)


# -- zero-crossing histogram ---------------------------------------------------

def _zc_trial(args) -> float:
    cfg, noise, code, trial = args
    setup = make_setup(cfg, strict=False)
    rng, jrng = trial_rngs(noise.seed, trial)
    variations = draw_variations(rng, noise)
    m = simulate_code(setup, code, variations=variations,
                      jitter=_jitter_source(jrng, noise.jitter_sigma))
    return m.edge_times[0]


def zero_crossing_stats(code: PhaseCode | int, cfg: SimConfig, noise: NoiseParams | None = None,
                        n_trials: int = 1000, bin_width: float = 1e-12, *,
                        workers: int | None = None) -> ZeroCrossingStats:
    """Histogram of one settled output rising edge per trial."""
    code = PhaseCode(int(code)).code
    if n_trials < 2:
        raise ValueError("n_trials must be >= 2")
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    noise = noise or cfg.noise
    workers = cfg.sim.workers if workers is None else workers
    samples = np.array(_map(_zc_trial, [(cfg, noise, code, i) for i in range(n_trials)], workers))
    lo = math.floor(samples.min() / bin_width)
    hi = max(math.floor(samples.max() / bin_width) + 1, lo + 1)
    edges = np.arange(lo, hi + 1) * bin_width
    counts, _ = np.histogram(samples, bins=edges)
    return ZeroCrossingStats(code, float(np.mean(samples)), float(np.std(samples, ddof=1)),
                             bin_width, edges[:-1] + bin_width / 2, counts, samples)


# -- power -----------------------------------------------------------------------

def estimate_power(cfg: SimConfig, active_code: PhaseCode | int = 0,
                   device: DeviceParams | None = None) -> PowerReport:
    """Dynamic power of the single powered unit cell plus LDO quiescent power."""
    dev = device or cfg.device
    f = cfg.clock.frequency
    p_pi = dev.activity_factor * dev.c_o * dev.v_dd ** 2 * f
    p_ldo = cfg.ldo.i_quiescent * dev.v_dd
    total = p_pi + p_ldo
    return PowerReport(p_pi, p_ldo, total, total / f, decode_code(active_code).sextant)


# -- supply and temperature sweeps ------------------------------------------------

def sweep_supply(v_dd_values: Sequence[float], cfg: SimConfig, noise: NoiseParams | None = None,
                 n_trials: int = 200, *, workers: int | None = None) -> list[SweepPoint]:
    """Monte Carlo worst INL and power at each supply voltage."""
    need = cfg.ldo.v_max + cfg.ldo.dropout
    bad = [v for v in v_dd_values if v < need - 1e-12]
    if bad:
        raise ConfigError(
            f"insufficient headroom: v_dd {', '.join(f'{v:g}' for v in bad)} V below "
            f"v_max + dropout = {need:g} V"
        )
    points = []
    for v in v_dd_values:
        dev = replace(cfg.device, v_dd=float(v))
        mc = run_monte_carlo(replace(cfg, device=dev), noise, n_trials, workers=workers)
        p = estimate_power(cfg, device=dev)
        points.append(SweepPoint(float(v), mc.worst_max_inl_s, mc.worst_min_inl_s, p.p_total_w))
    return points


def at_temperature(device: DeviceParams, temp_c: float) -> DeviceParams:
    """Shift threshold and discharge current linearly from the device's reference temperature."""
    dt = temp_c - device.temp_c
    return replace(device, temp_c=temp_c,
                   v_th=device.v_th + device.alpha_vth * dt,
                   i_c=device.i_c * (1.0 + device.alpha_ic * dt))


def sweep_temperature(temps_c: Sequence[float], cfg: SimConfig) -> list[SweepPoint]:
    """Nominal (no mismatch) sweep at each temperature with the room-temperature ladder.

    ``worst_inl_s`` is the largest positive INL at that temperature.
    """
    lo, hi = TEMP_RANGE_C
    bad = [t for t in temps_c if not lo <= t <= hi]
    if bad:
        raise ConfigError(f"temperature(s) {bad} outside [{lo:g}, {hi:g}] degC")
    points = []
    for t in temps_c:
        dev = at_temperature(cfg.device, float(t))
        setup = make_setup(cfg, device=dev)
        rep = compute_inl_dnl(sweep_sequence(setup, range(N_CODES)), cfg.clock)
        p = estimate_power(cfg, device=dev)
        points.append(SweepPoint(float(t), rep.inl_max_s, rep.inl_min_s, p.p_total_w))
    return points


# -- CSV output ----------------------------------------------------------------

def _ps(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    s = f"{x * 1e12:.3f}"
    return "0.000" if s == "-0.000" else s


def _num(x: float, scale: float = 1.0) -> str:
    if math.isnan(x):
        return "nan"
    s = f"{x * scale:.3f}"
    return s[1:] if s.startswith("-") and float(s) == 0 else s


LINEARITY_HEADER = ["code", "ideal_ps", "measured_ps", "inl_ps", "dnl_ps"]
MC_HEADER = ["trial", "max_inl_ps", "min_inl_ps", "vth_at_max_mv"]
HISTOGRAM_HEADER = ["bin_center_ps", "count"]
SWEEP_HEADER = ["x_value", "worst_inl_ps", "power_uw"]


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_linearity_csv(report: LinearityReport, path) -> None:
    _write(path, LINEARITY_HEADER, [
        [k, _ps(report.ideal_s[k]), _ps(report.delays_s[k]), _ps(report.inl_s[k]),
         _ps(report.dnl_s[k])]
        for k in range(report.delays_s.size)
    ])


def write_mc_csv(result: McResult, path) -> None:
    _write(path, MC_HEADER, [
        [t.trial, _ps(t.max_inl_s), _ps(t.min_inl_s), _num(t.vth_at_max_v, 1e3)]
        for t in result.per_trial
    ])


def write_histogram_csv(stats: ZeroCrossingStats, path) -> None:
    _write(path, HISTOGRAM_HEADER,
           [[_ps(c), int(n)] for c, n in zip(stats.bin_centers_s, stats.counts)])


def write_sweep_csv(points: Sequence[SweepPoint], path) -> None:
    _write(path, SWEEP_HEADER,
           [[_num(p.x_value), _ps(p.worst_inl_s), _num(p.power_w, 1e6)] for p in points])
