import csv
import json

import pytest

from dpcsim import __version__
from dpcsim.cli import ANALYSES, Scenario, build_parser, main, run_scenario
from dpcsim.core import ConfigError
from dpcsim.plot import PlotError, emit_plot


def _run(tmp_path, *args):
    return main(list(args) + ["--out", str(tmp_path)])


def test_sweep_codes_outputs(tmp_path, capsys):
    assert _run(tmp_path, "sweep-codes") == 0
    assert (tmp_path / "linearity.csv").exists()
    assert (tmp_path / "linearity.svg").read_text().startswith("<svg")
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["tool_version"] == __version__ and man["seed"] == 42
    assert man["outputs"] == ["linearity.csv", "linearity.svg"]
    assert man["summary"]["inl_max_ps"] == 0.0
    assert "inl_max_ps" in capsys.readouterr().out


def test_outputs_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run(d, "monte-carlo", "--trials", "4") == 0
    for name in ("mc.csv", "mc.svg", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("DPCSIM_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["power"]) == 0
    rows = dict(csv.reader((tmp_path / "env" / "power.csv").open()))
    assert float(rows["p_total_uw"]) == pytest.approx(350.16, abs=0.01)


@pytest.mark.parametrize("args, files", [
    (["compare-slope-mode"], ["linearity_constant.csv", "linearity_variable.csv"]),
    (["histogram", "--trials", "20", "--jitter-ps", "5"], ["histogram.csv"]),
    (["ldo-step"], ["ldo_step.csv"]),
    (["sweep-supply", "--vdd", "1.1,1.2", "--trials", "2"], ["sweep_supply.csv"]),
    (["sweep-temperature", "--temps=-40,125"], ["sweep_temperature.csv"]),
])
def test_each_analysis_writes_outputs(tmp_path, args, files):
    assert _run(tmp_path, *args) == 0
    for f in files:
        assert (tmp_path / f).exists()
        assert (tmp_path / f).with_suffix(".svg").exists()


def test_ldo_step_summary(tmp_path):
    assert _run(tmp_path, "ldo-step") == 0
    s = json.loads((tmp_path / "manifest.json").read_text())["summary"]
    assert s["settling_time_ns"] <= 8.0 and s["ripple_pp_mv"] <= 4.0


def test_config_error_exit_code(tmp_path, capsys):
    assert _run(tmp_path, "sweep-codes", "--set", "device.c_o=0") == 1
    assert "capacitance must be positive" in capsys.readouterr().err
    assert _run(tmp_path, "sweep-codes", "--set", "device.bogus=1") == 1
    assert _run(tmp_path, "sweep-codes", "--config", str(tmp_path / "missing.ini")) == 1
    assert _run(tmp_path, "sweep-supply", "--vdd", "1.0") == 1


def test_simulation_error_exit_code(tmp_path, capsys):
    # an input offset lifts the trip point above the lowest start voltage
    assert _run(tmp_path, "sweep-codes", "--set", "comparator.offset_v=0.35") == 2
    assert "simulation error" in capsys.readouterr().err


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["power", "--out", str(blocker / "sub")]) == 3


def test_scenario_rejects_unknown_analysis():
    with pytest.raises(ConfigError):
        Scenario("x", "nope")
    assert set(ANALYSES) >= {"sweep-codes", "monte-carlo", "histogram", "power"}


def test_run_scenario_api(tmp_path):
    sc = Scenario("api", "power", output_dir=str(tmp_path), options={"code": 5})
    assert run_scenario(sc) == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["scenario"] == "api"


def test_help_lists_override_keys(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["sweep-codes", "--help"])
    assert "device.c_o" in capsys.readouterr().out


def test_emit_plot_empty_and_mismatch(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("code,ideal_ps,measured_ps,inl_ps,dnl_ps\n")
    with pytest.raises(PlotError, match="no data"):
        emit_plot(empty)
    assert not empty.with_suffix(".svg").exists()
    odd = tmp_path / "odd.csv"
    odd.write_text("a,b\n1,2\n")
    with pytest.raises(PlotError, match="schema mismatch"):
        emit_plot(odd)
    assert not odd.with_suffix(".svg").exists()
    with pytest.raises(PlotError):
        emit_plot(odd, kind="pie")


def test_emit_plot_deterministic(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("bin_center_ps,count\n1.5,3\n2.5,7\n3.5,1\n")
    a = emit_plot(p, "histogram").read_bytes()
    b = emit_plot(p, "histogram", tmp_path / "h2.svg").read_bytes()
    assert a == b and b"<rect" in a
