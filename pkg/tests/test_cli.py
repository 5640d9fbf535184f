import csv
import json
import subprocess
import sys

import pytest

from eitfbs.cli import main
from eitfbs.io import format_config, parse_config

MEDIUM = """\
alpha = 130
gamma_over_Gamma = 0.003
Gamma_MHz = 6
omega_c_over_Gamma = 3.0
omega_d_over_Gamma = 3.0
"""

CONFIGS = {
    "scan-Delta": MEDIUM + "grid_start_MHz = -300\ngrid_stop_MHz = -100\ngrid_points = 201\n",
    "scan-delta": MEDIUM + "Delta_MHz = -135\ngrid_start_MHz = -2\ngrid_stop_MHz = 2\ngrid_points = 81\n",
    "propagate": MEDIUM.replace("130", "110")
    + "Delta_MHz = -205\npulse_e2_width_us = 3.0\nwindow_us = 24\nn_samples = 2048\n",
    "fidelity": "t1_sq = 0.46\nr1_sq = 0.46\nt2_sq = 0.51\nr2_sq = 0.39\ncos_phi = -0.944\n",
    "hom-scan": "t1_sq = 0.46\nr1_sq = 0.46\nt2_sq = 0.51\nr2_sq = 0.39\ncos_phi = -0.944\n"
    "pulse_e2_width_us = 1.7\nwindow_us = 24\ntau_start_us = -6\ntau_stop_us = 6\ntau_points = 121\n",
    "count-sim": "pulse_e2_width_us = 1.7\nwindow_us = 12\nn_samples = 2048\nphotons_per_pulse = 1.0\n"
    "eff_in = 0.17\nbaseline_rate = 2e4\nbin_width_ns = 225\nn_trials = 32000\n"
    "out_fractions = 0.45, 0.45\nout_effs = 0.17, 0.12\nseed = 3\n",
}


def _run(tmp_path, kind, text, *extra):
    cfg = tmp_path / f"{kind}.cfg"
    cfg.write_text(text)
    out = tmp_path / "out"
    return main([kind, "--config", str(cfg), "--out", str(out), *extra]), out


def test_delta_scan_row_count(tmp_path):
    code, out = _run(tmp_path, "scan-Delta", CONFIGS["scan-Delta"])
    assert code == 0
    rows = list(csv.reader((out / "scan-Delta.csv").open()))
    assert rows[0] == ["axis_MHz", "t_probe", "t_signal", "total", "split"]
    assert len(rows) == 202


def test_fidelity_report(tmp_path):
    code, out = _run(tmp_path, "fidelity", CONFIGS["fidelity"])
    assert code == 0
    report = json.loads((out / "fidelity.json").read_text())
    assert round(report["F"], 2) == 0.99
    assert report["F"] == pytest.approx(report["F_trace"], abs=1e-12)
    assert report["g2"] == pytest.approx(0.53, abs=0.005)


def test_fidelity_from_measured_minimum(tmp_path):
    text = CONFIGS["fidelity"].replace("cos_phi = -0.944\n", "g2_min = 0.53\ng2_err = 0.03\n")
    code, out = _run(tmp_path, "fidelity", text)
    assert code == 0
    report = json.loads((out / "fidelity.json").read_text())
    assert report["cos_phi"] == pytest.approx(-0.94, abs=0.01)
    assert report["cos_phi_err"] == pytest.approx(0.06, abs=0.01)
    assert 0.0 < report["F_err"] < 0.05


def test_negative_alpha_rejected(tmp_path, capsys):
    code, out = _run(tmp_path, "scan-Delta", CONFIGS["scan-Delta"].replace("alpha = 130", "alpha = -5"))
    assert code != 0
    err = capsys.readouterr().err.strip()
    assert "\n" not in err and "alpha" in err and err.startswith("error: ConfigError")
    assert not out.exists()


def test_missing_key_named(tmp_path, capsys):
    code, _ = _run(tmp_path, "scan-Delta", CONFIGS["scan-Delta"].replace("grid_points = 201\n", ""))
    assert code != 0
    assert "grid_points" in capsys.readouterr().err


def test_unknown_key_named(tmp_path, capsys):
    code, _ = _run(tmp_path, "fidelity", CONFIGS["fidelity"] + "colour = blue\n")
    assert code != 0
    assert "colour" in capsys.readouterr().err


def test_solver_failure_is_single_line(tmp_path, capsys):
    text = CONFIGS["scan-Delta"].replace("omega_c_over_Gamma = 3.0", "omega_c_over_Gamma = 0")
    code, _ = _run(tmp_path, "scan-Delta", text)
    err = capsys.readouterr().err
    assert code != 0 and err.count("\n") == 1 and "SingularSystemError" in err


@pytest.mark.parametrize("kind", sorted(CONFIGS))
def test_every_scenario_runs_with_provenance(tmp_path, kind):
    code, out = _run(tmp_path, kind, CONFIGS[kind])
    assert code == 0
    results = [p for p in out.iterdir() if not p.name.endswith(".provenance.json")]
    assert results
    for path in results:
        side = json.loads((out / f"{path.name}.provenance.json").read_text())
        assert side["kind"] == kind and side["output"] == path.name
        assert "tool_version" in side and "config" in side
        assert b"\r\n" not in path.read_bytes()


@pytest.mark.parametrize("kind", ["count-sim", "scan-Delta", "hom-scan"])
def test_outputs_byte_identical(tmp_path, kind):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    a, out_a = _run(tmp_path / "a", kind, CONFIGS[kind])
    b, out_b = _run(tmp_path / "b", kind, CONFIGS[kind])
    assert a == b == 0
    for path in out_a.iterdir():
        assert path.read_bytes() == (out_b / path.name).read_bytes()


def test_seed_flag_changes_counts(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    _, out_a = _run(tmp_path / "a", "count-sim", CONFIGS["count-sim"])
    _, out_b = _run(tmp_path / "b", "count-sim", CONFIGS["count-sim"], "--seed", "99")
    assert (out_a / "count-sim_in.csv").read_bytes() != (out_b / "count-sim_in.csv").read_bytes()
    assert json.loads((out_b / "count-sim_in.csv.provenance.json").read_text())["seed"] == 99


def test_provenance_reproduces_output(tmp_path):
    (tmp_path / "a").mkdir()
    _, out = _run(tmp_path / "a", "count-sim", CONFIGS["count-sim"])
    side = json.loads((out / "count-sim.json.provenance.json").read_text())
    cfg = {k: v for k, v in side["config"].items() if v is not None}
    (tmp_path / "b").mkdir()
    code, out2 = _run(tmp_path / "b", side["kind"], format_config(cfg), "--seed", str(side["seed"]))
    assert code == 0
    assert (out2 / "count-sim.json").read_bytes() == (out / "count-sim.json").read_bytes()


def test_config_parser_comments_and_case():
    cfg = parse_config("# header\nDelta_MHz = -205  # inline\nalpha=1\n")
    assert cfg == {"Delta_MHz": "-205", "alpha": "1"}


def test_console_entry_point(tmp_path):
    cfg = tmp_path / "f.cfg"
    cfg.write_text(CONFIGS["fidelity"])
    proc = subprocess.run([sys.executable, "-m", "eitfbs.cli", "fidelity", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip().endswith("fidelity.json")
