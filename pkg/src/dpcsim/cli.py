"""Command-line scenario runner.

Every analysis writes one or more CSV files, an SVG plot per CSV and a
``manifest.json`` holding the fully resolved configuration. Exit status:
0 success, 1 configuration error, 2 simulation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dpcsim import __version__
from dpcsim.analog import RampError, ldo_transient, ripple_peak_to_peak, settling_time
from dpcsim.config import SimConfig, apply_overrides, load_config, override_keys
from dpcsim.core import ConfigError
from dpcsim.datapath import SimulationError
from dpcsim.metrology import (
    estimate_power,
    run_monte_carlo,
    sweep_codes,
    sweep_supply,
    sweep_temperature,
    write_histogram_csv,
    write_linearity_csv,
    write_mc_csv,
    write_sweep_csv,
    zero_crossing_stats,
)
from dpcsim.plot import PlotError, emit_plot

ANALYSES = ("sweep-codes", "monte-carlo", "histogram", "ldo-step", "sweep-supply",
            "sweep-temperature", "compare-slope-mode", "power")
OUTPUT_ENV = "DPCSIM_OUTPUT_DIR"

EXIT_OK, EXIT_CONFIG, EXIT_SIM, EXIT_IO = 0, 1, 2, 3


@dataclass(frozen=True)
class Scenario:
    name: str
    analysis: str
    config_path: str | None = None
    output_dir: str | None = None
    overrides: tuple[str, ...] = ()
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.analysis not in ANALYSES:
            raise ConfigError(f"unknown analysis {self.analysis!r}; choose from {', '.join(ANALYSES)}")


def _resolve_config(sc: Scenario) -> SimConfig:
    cfg = load_config(sc.config_path)
    opts = sc.options
    extra = []
    if opts.get("seed") is not None:
        extra.append(f"noise.seed={opts['seed']}")
    if opts.get("workers") is not None:
        extra.append(f"sim.workers={opts['workers']}")
    if opts.get("ldo") is not None:
        extra.append(f"sim.ldo_mode={opts['ldo']}")
    if opts.get("jitter_ps") is not None:
        extra.append(f"noise.jitter_sigma={opts['jitter_ps'] * 1e-12!r}")
    return apply_overrides(cfg, list(sc.overrides) + extra).validated()


def _r(x: float) -> float:
    # +0.0 folds negative zero
    return round(x, 6) + 0.0


def _lin_summary(rep) -> dict:
    return {"inl_max_ps": _r(rep.inl_max_s * 1e12), "inl_min_ps": _r(rep.inl_min_s * 1e12),
            "inl_max_pct": _r(rep.inl_max_pct)}


def _run_analysis(sc: Scenario, cfg: SimConfig, out: Path) -> tuple[list[tuple[Path, str]], dict]:
    opts = sc.options
    a = sc.analysis
    files: list[tuple[Path, str]] = []
    summary: dict = {}
    if a == "sweep-codes":
        rep = sweep_codes(cfg, opts.get("mode") or "constant")
        p = out / "linearity.csv"
        write_linearity_csv(rep, p)
        files.append((p, "line"))
        summary = _lin_summary(rep)
    elif a == "compare-slope-mode":
        for mode in ("constant", "variable"):
            rep = sweep_codes(cfg, mode)
            p = out / f"linearity_{mode}.csv"
            write_linearity_csv(rep, p)
            files.append((p, "line"))
            summary[mode] = _lin_summary(rep) | {"max_abs_inl_ps": _r(rep.max_abs_inl_s * 1e12)}
    elif a == "monte-carlo":
        mc = run_monte_carlo(cfg, cfg.noise, int(opts.get("trials") or 200))
        p = out / "mc.csv"
        write_mc_csv(mc, p)
        files.append((p, "line"))
        summary = {"worst_max_inl_ps": _r(mc.worst_max_inl_s * 1e12),
                   "worst_min_inl_ps": _r(mc.worst_min_inl_s * 1e12),
                   "vth_at_worst_max_mv": _r(mc.vth_at_worst_max_v * 1e3),
                   "failed_trials": len(mc.failed)}
    elif a == "histogram":
        st = zero_crossing_stats(int(opts.get("code") or 0), cfg, cfg.noise,
                                 int(opts.get("trials") or 1000),
                                 float(opts.get("bin_width_ps") or 1.0) * 1e-12)
        p = out / "histogram.csv"
        write_histogram_csv(st, p)
        files.append((p, "histogram"))
        summary = {"mean_ps": _r(st.mean_s * 1e12), "std_ps": _r(st.std_s * 1e12)}
    elif a == "ldo-step":
        ldo = cfg.ldo
        v_from = float(opts.get("v_from") if opts.get("v_from") is not None else ldo.v_min)
        v_to = float(opts.get("v_to") if opts.get("v_to") is not None else ldo.v_max)
        t = np.arange(0, 2001) * 10e-12
        v = ldo_transient(ldo, v_from, v_to, t)
        p = out / "ldo_step.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time_ps", "v_ldo_v"])
            w.writerows([f"{ti * 1e12:.3f}", f"{vi:.6f}"] for ti, vi in zip(t, v))
        files.append((p, "line"))
        summary = {"settling_time_ns": _r(settling_time(ldo, v_from, v_to) * 1e9),
                   "ripple_pp_mv": _r(ripple_peak_to_peak(ldo, v_to) * 1e3)}
    elif a == "sweep-supply":
        vdds = opts.get("vdd") or [1.1, 1.15, 1.2, 1.25, 1.3]
        pts = sweep_supply(vdds, cfg, cfg.noise, int(opts.get("trials") or 200))
        p = out / "sweep_supply.csv"
        write_sweep_csv(pts, p)
        files.append((p, "line"))
    elif a == "sweep-temperature":
        temps = opts.get("temps") or [-40.0, 0.0, 27.0, 85.0, 125.0]
        pts = sweep_temperature(temps, cfg)
        p = out / "sweep_temperature.csv"
        write_sweep_csv(pts, p)
        files.append((p, "line"))
    elif a == "power":
        pr = estimate_power(cfg, int(opts.get("code") or 0))
        p = out / "power.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quantity", "value"])
            w.writerow(["p_pi_uw", f"{pr.p_pi_w * 1e6:.3f}"])
            w.writerow(["p_ldo_uw", f"{pr.p_ldo_w * 1e6:.3f}"])
            w.writerow(["p_total_uw", f"{pr.p_total_w * 1e6:.3f}"])
            w.writerow(["energy_per_step_fj", f"{pr.energy_per_step_j * 1e15:.3f}"])
        files.append((p, "histogram"))
        summary = {"p_total_uw": _r(pr.p_total_w * 1e6)}
    return files, summary


def run_scenario(sc: Scenario) -> int:
    """Run one analysis; returns the process exit status."""
    try:
        cfg = _resolve_config(sc)
    except (ConfigError, FileNotFoundError, IsADirectoryError) as exc:
        _diag(f"config error: {exc}")
        return EXIT_CONFIG
    out = Path(sc.output_dir or os.environ.get(OUTPUT_ENV) or "dpcsim-out")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _diag(f"I/O error: cannot create {out}: {exc}")
        return EXIT_IO
    try:
        files, summary = _run_analysis(sc, cfg, out)
        for p, kind in files:
            emit_plot(p, kind)
        manifest = {
            "tool": "dpcsim",
            "tool_version": __version__,
            "scenario": sc.name,
            "analysis": sc.analysis,
            "seed": cfg.noise.seed,
            "options": {k: v for k, v in sorted(sc.options.items()) if v is not None},
            "config": cfg.to_dict(),
            "outputs": sorted(p.name for p, _ in files) + sorted(p.with_suffix(".svg").name for p, _ in files),
            "summary": summary,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except ConfigError as exc:
        _diag(f"config error: {exc}")
        return EXIT_CONFIG
    except (SimulationError, RampError) as exc:
        _diag(f"simulation error: {exc}")
        return EXIT_SIM
    except (OSError, PlotError) as exc:
        _diag(f"I/O error: {exc}")
        return EXIT_IO
    for p, _ in files:
        print(p)
    if summary:
        print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _diag(msg: str) -> None:
    print(f"dpcsim: {' '.join(str(msg).split())}", file=sys.stderr)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    keys = "\n  ".join(override_keys())
    epilog = f"override keys for --set (section.key=value):\n  {keys}"
    parser = argparse.ArgumentParser(prog="dpcsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dpcsim {__version__}")
    sub = parser.add_subparsers(dest="analysis", required=True, metavar="ANALYSIS")

    def add(name, help_):
        p = sub.add_parser(name, help=help_, epilog=epilog,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="INI config file ([clock] [device] [comparator] [ldo] [noise] [sim])")
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./dpcsim-out)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value, e.g. device.i_c=96e-6 (repeatable)")
        p.add_argument("--name", help="scenario name recorded in the manifest")
        return p

    p = add("sweep-codes", "32-code transfer function, INL and DNL")
    p.add_argument("--mode", choices=("constant", "variable"), default="constant")
    p.add_argument("--ldo", choices=("ideal", "transient"))
    p = add("compare-slope-mode", "constant-slope vs variable-slope linearity")
    p.add_argument("--ldo", choices=("ideal", "transient"))
    p = add("monte-carlo", "mismatch Monte Carlo of the code sweep")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p = add("histogram", "zero-crossing histogram of one code")
    p.add_argument("--code", type=int, default=2)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--bin-width-ps", type=float, default=1.0)
    p.add_argument("--jitter-ps", type=float, help="per-edge Gaussian jitter sigma in ps")
    p = add("ldo-step", "LDO step response, settling time and ripple")
    p.add_argument("--v-from", type=float)
    p.add_argument("--v-to", type=float)
    p = add("sweep-supply", "Monte Carlo worst INL and power versus supply")
    p.add_argument("--vdd", type=_floats, help="comma-separated supply voltages")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p = add("sweep-temperature", "nominal INL versus temperature")
    p.add_argument("--temps", type=_floats, help="comma-separated temperatures in degC")
    p = add("power", "power estimate at the configured supply and clock")
    p.add_argument("--code", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    common = {"analysis", "config", "out", "set", "name"}
    options = {k: v for k, v in vars(args).items() if k not in common}
    try:
        sc = Scenario(name=args.name or args.analysis, analysis=args.analysis,
                      config_path=args.config, output_dir=args.out,
                      overrides=tuple(args.set), options=options)
    except ConfigError as exc:
        _diag(f"config error: {exc}")
        return EXIT_CONFIG
    return run_scenario(sc)


if __name__ == "__main__":
    sys.exit(main())
