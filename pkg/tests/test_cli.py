import io
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qutrit_transfer import cli
from qutrit_transfer.io import read_csv
from qutrit_transfer.validation import CheckResult

ROOT = Path(__file__).resolve().parents[1]


def run(argv):
    out = io.StringIO()
    code = cli.main(argv, out=out)
    return code, out.getvalue()


def test_unknown_subcommand_exits_2(capsys):
    code, _ = run(["bogus"])
    assert code == 2
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand_exits_2():
    assert run([])[0] == 2


def test_config_errors_exit_2(tmp_path, capsys):
    assert run(["transfer", "--set", "delta_GHz=-1"])[0] == 2
    assert "delta_GHz" in capsys.readouterr().err
    assert run(["transfer", "--set", "novalue"])[0] == 2
    assert run(["transfer", "--config", str(tmp_path / "none.conf")])[0] == 2
    assert run(["validate", "--only", "nonsense"])[0] == 2


def test_transfer_prints_summary():
    code, text = run(["transfer"])
    assert code == 0
    values = dict(line.split(None, 1) for line in text.splitlines() if line)
    for key in ("fidelity", "t1", "t2", "Q_a", "Q_b"):
        assert key in values
    assert float(values["fidelity"]) == pytest.approx(0.9934, abs=0.005)
    assert "lambda1/2pi     10.000000 MHz" in text
    assert "peak <n_a>" in text and "peak <n_b>" in text


def test_transfer_with_config_file(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("D = 4\nalpha = 1\nbeta = 0\ngamma = 0\n")
    code, text = run(["transfer", "--config", str(conf)])
    assert code == 0
    assert "fidelity        1.000000000" in text


def test_sweep_writes_csv_and_svg(tmp_path):
    csv_path, svg_path = tmp_path / "d.csv", tmp_path / "d.svg"
    code, _ = run(["sweep-detuning", "--set", "D_min=4", "--set", "D_max=5",
                   "--set", "D_points=2", "--set", "kappa_inv_list_us=0.1",
                   "-o", str(csv_path), "--svg", str(svg_path), "--workers", "1"])
    assert code == 0
    meta, cols, rows = read_csv(csv_path)
    assert rows.shape == (2, len(cols))
    assert meta["config.D_points"] == "2"
    assert "wall_clock_s" not in meta
    assert svg_path.read_text().startswith("<svg")


def test_sweep_output_is_reproducible(tmp_path):
    args = ["sweep-coupling", "--set", "D=4", "--set", "c_points=1", "--set", "c_min=1",
            "--set", "c_max=1", "--set", "d_points=2", "--workers", "1"]
    a, b = run(args), run(args)
    assert a[0] == 0 and a[1] == b[1]


def test_timing_flag_adds_wall_clock(tmp_path):
    path = tmp_path / "s.csv"
    code, _ = run(["sweep-states", "--set", "D=4", "--set", "gamma_points=2",
                   "--set", "theta_points=3", "-o", str(path), "--timing"])
    assert code == 0
    meta, _, rows = read_csv(path)
    assert "wall_clock_s" in meta and rows.shape[0] == 6
    assert np.all(rows[:, -1] <= 1.0)


def test_validate_subset_passes():
    code, text = run(["validate", "--only", "pi_pulse", "--only", "decay_oracle"])
    assert code == 0
    assert text.count("PASS") == 2


def test_validate_failure_exits_1(monkeypatch):
    monkeypatch.setitem(cli.CHECKS, "pi_pulse",
                        lambda: CheckResult("pi_pulse", False, 1.0, 0.0, "forced"))
    code, text = run(["validate", "--only", "pi_pulse"])
    assert code == 1 and "FAIL" in text


def test_runtime_error_exits_1(monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("integration failed")
    monkeypatch.setattr(cli, "run_transfer", boom)
    assert run(["transfer"])[0] == 1


def test_default_config_matches_shipped_file():
    code, text = run(["default-config"])
    assert code == 0
    assert text == (ROOT / "configs" / "default.conf").read_text()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qutrit_transfer", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "sweep-detuning" in proc.stdout
