import csv
import json

import pytest

from secnoma.cli import run_cli
from secnoma.experiments import sample_channel


def rows(path):
    with open(path) as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def test_solve_both_share_the_channel(capsys):
    assert run_cli(["solve", "--seed", "7", "--algo", "both"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["algorithm"] for r in doc["reports"]] == ["sdr", "cost"]
    assert {r["channel_digest"] for r in doc["reports"]} == {sample_channel(7).digest()}
    assert all(r["status"] == "converged" for r in doc["reports"])


def test_solve_unattainable_exits_1(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('grid.upsilon_e = ["24 mW"]\n')
    assert run_cli(["solve", "--config", str(cfg), "--algo", "sdr"]) == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["reports"][0]["status"] == "unattainable-eh"


def test_solve_instance_file(tmp_path):
    ch = sample_channel(3)
    inst = tmp_path / "inst.json"
    inst.write_text(json.dumps({"channel": ch.to_dict(), "requirements": {"gamma1": 0, "gamma2": 0}}))
    out = tmp_path / "o" / "rep.json"
    assert run_cli(["solve", "--instance", str(inst), "--algo", "sdr", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["channel_digest"] == ch.digest()
    assert doc["requirements"]["gamma1"] == 0


def test_config_errors_exit_2(tmp_path, capsys):
    assert run_cli(["sweep", "--config", str(tmp_path / "missing.toml")]) == 2
    assert run_cli(["sweep"]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("run.trials = 2\nrun.nope = 1\n")
    assert run_cli(["sweep", "--config", str(bad)]) == 2
    assert f"{bad}:2:" in capsys.readouterr().err
    broken = tmp_path / "inst.json"
    broken.write_text("{")
    assert run_cli(["solve", "--instance", str(broken)]) == 2
    assert run_cli(["fig4", "--seed", "-1"]) == 2
    assert run_cli(["nonsense"]) == 2


def test_check_passes(capsys):
    assert run_cli(["check"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 6 and all(line.startswith("[PASS]") for line in out)


def test_sweep_outputs_are_reproducible(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("channel.n_antennas = 2\nrun.trials = 2\ngrid.gamma1 = [2, 3]\nsolver.rand_samples = 50\n")
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run_cli(["sweep", "--config", str(cfg), "--out", str(d), "--no-timestamp"]) == 0
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    assert len(rows(a / "results.csv")) == 2 * 2 * 2
    summary = json.loads((a / "summary.json").read_text())
    assert summary["config"]["trials"] == 2
    assert "run.trials = 2" in (a / "config.toml").read_text()
    # the dumped config reproduces the run
    c = tmp_path / "c2"
    assert run_cli(["sweep", "--config", str(a / "config.toml"), "--out", str(c), "--no-timestamp"]) == 0
    assert (c / "results.csv").read_bytes() == (a / "results.csv").read_bytes()


def test_workers_match_serial(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("channel.n_antennas = 2\nrun.trials = 3\nsolver.rand_samples = 50\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["sweep", "--config", str(cfg), "--out", str(a), "--no-timestamp"]) == 0
    assert run_cli(["sweep", "--config", str(cfg), "--out", str(b), "--no-timestamp", "--workers", "2"]) == 0
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()


def test_timestamp_header(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("channel.n_antennas = 2\nrun.trials = 1\nrun.algorithms = ['sdr']\n")
    assert run_cli(["sweep", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "results.csv").read_text().startswith("# generated ")


@pytest.mark.slow
def test_fig4_row_count(tmp_path):
    out = tmp_path / "r"
    assert run_cli(["fig4", "--trials", "2", "--out", str(out), "--no-timestamp"]) == 0
    got = rows(out / "results.csv")
    # trials x harvesting grid x (two algorithms + TDMA)
    assert len(got) == 2 * 6 * 2 + 2 * 6
    assert sum(r["algorithm"] == "tdma" for r in got) == 12


def test_fig2_writes_trajectories(tmp_path):
    out = tmp_path / "r"
    assert run_cli(["fig2", "--out", str(out), "--no-timestamp", "--algo", "sdr"]) == 0
    traj = rows(out / "trajectories.csv")
    assert {r["gamma1"] for r in traj} == {"3.0", "4.0"}
