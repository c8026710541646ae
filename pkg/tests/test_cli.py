import csv
import subprocess
import sys

import pytest

from wpcn.cli import main


def test_simulate_writes_trace_and_summary(tmp_path, capsys):
    assert main(["simulate", "--seed", "3", "--epochs", "200", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "trace.csv").open()))
    assert len(rows) == 201 and rows[0][0] == "epoch"
    summary = list(csv.DictReader((tmp_path / "summary.csv").open()))
    assert summary[0]["seed"] == "3" and summary[0]["mode"] == "pf"
    assert "sum_rate=" in capsys.readouterr().out


def test_env_seed_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("WPCN_SEED", "11")
    assert main(["simulate", "--epochs", "50", "--mode", "maxsum", "--out", str(tmp_path)]) == 0
    row = next(csv.DictReader((tmp_path / "summary.csv").open()))
    assert row["seed"] == "11" and row["mode"] == "maxsum"
    # the flag wins over the environment
    assert main(["simulate", "--epochs", "50", "--seed", "2", "--out", str(tmp_path)]) == 0
    assert next(csv.DictReader((tmp_path / "summary.csv").open()))["seed"] == "2"
    monkeypatch.setenv("WPCN_SEED", "abc")
    assert main(["simulate", "--epochs", "50", "--out", str(tmp_path)]) == 2


def test_config_file_for_simulate(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("distances = 10, 12\np_c = 1e-5\nmode = maxsum\nM = 120\n")
    assert main(["simulate", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path)]) == 0
    row = next(csv.DictReader((tmp_path / "summary.csv").open()))
    assert row["K"] == "2" and row["M"] == "120" and row["mode"] == "maxsum"


@pytest.mark.parametrize(
    "content",
    ["P_avg = 7\n", "eta = 2\n", "bogus = 1\n", "M = x\n"],
)
def test_validation_failures_exit_nonzero(tmp_path, capsys, content):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(content)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_fig_commands(tmp_path):
    cfg = tmp_path / "f1.cfg"
    cfg.write_text("values = 0, 1e-5\nK_values = 2\nseeds = 1\n")
    assert main(["fig1", "--config", str(cfg), "--epochs", "300", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "fig1.csv").exists() and (tmp_path / "fig1.svg").exists()
    cfg2 = tmp_path / "f2.cfg"
    cfg2.write_text("values = 0.5, 1\nfixed_p_c = 0\nK_values = 2\n")
    assert main(["fig2", "--config", str(cfg2), "--epochs", "300", "--seed", "4",
                 "--mode", "pf", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "fig2.csv").open()))
    assert len(rows) == 2 and {r["mode"] for r in rows} == {"pf"}
    cfg.write_text("modes = \n")
    assert main(["fig1", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_oracle_quick(tmp_path):
    assert main(["oracle", "--quick", "--out", str(tmp_path)]) == 0
    report = (tmp_path / "oracle_report.txt").read_text()
    assert report.count("PASS") == 6


def test_console_entry_point_help():
    out = subprocess.run([sys.executable, "-m", "wpcn.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("simulate", "fig1", "fig2", "oracle"):
        assert cmd in out.stdout
    bad = subprocess.run([sys.executable, "-m", "wpcn.cli", "simulate", "--mode", "x"],
                         capture_output=True, text=True)
    assert bad.returncode != 0
