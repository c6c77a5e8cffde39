import json
import subprocess
import sys

import pytest

from entropia import cli
from entropia.config import ExperimentConfig, load_config, parse_config, system_defaults
from entropia.errors import ConfigError
from entropia.runner import run

FAST = dict(system="doubling", eps_ladder=(1 / 8, 1 / 16, 1 / 32), grid_g=10, n_window=(2, 7))


def test_defaults_per_system():
    assert system_defaults("cat")[1] == 9
    assert system_defaults("identity:2") == system_defaults("cat")
    assert system_defaults("doubling")[2] == (4, 12)
    cfg = ExperimentConfig(system="cat").resolved()
    assert cfg.eps_ladder == (2**-3, 2**-4, 2**-5) and cfg.n_window == (3, 8)


def test_parse_config_roundtrip():
    cfg = ExperimentConfig(system="rotation:0.25", task="local-entropy", eps_ladder=(0.125, 0.0625),
                           grid_g=11, n_window=(1, 6), seed=4)
    assert parse_config(cfg.snapshot()) == cfg


def test_parse_config_accepts_fractions():
    text = "[system]\nname = doubling\n[experiment]\neps_ladder = 2^-3, 1/16\n"
    assert parse_config(text).eps_ladder == (0.125, 0.0625)


@pytest.mark.parametrize("text,needle", [
    ("[experiment]\nbogus = 1\n", "line 2"),
    ("[experiment]\ngrid_g = x\n", "grid_g"),
    ("[experiment]\n\neps_ladder = 0.1, 0.2\n", "line 3"),
    ("[experiment]\nn_window = 3, 5\n", "n_window"),
    ("[other]\nx = 1\n", "unknown section"),
    ("[experiment]\ntask = dance\n", "task"),
])
def test_config_errors_are_specific(text, needle):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "exp.ini")
    assert needle in str(info.value)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.ini")


def test_entropy_run_writes_outputs(tmp_path):
    cfg = ExperimentConfig(task="entropy", output_dir=str(tmp_path), **FAST)
    rec = run(cfg)
    assert {v.name for v in rec.verdicts} == {"final-estimate", "monotone-in-eps", "sandwich"}
    for name in ("entropy.csv", "entropy.plot", "entropy.txt", "config.ini", "verdicts.txt",
                 "record.json"):
        assert (tmp_path / name).exists()
    meta = json.loads((tmp_path / "record.json").read_text())
    assert meta["config"]["system"] == "doubling"
    assert load_config(tmp_path / "config.ini") == rec.config


def test_budget_env_marks_partial(monkeypatch, tmp_path):
    monkeypatch.setenv("ENTROPIA_BUDGET_SECONDS", "1e-9")
    rec = run(ExperimentConfig(task="entropy", output_dir=str(tmp_path), **FAST))
    assert rec.partial and rec.exit_code == 1
    monkeypatch.setenv("ENTROPIA_BUDGET_SECONDS", "soon")
    with pytest.raises(ConfigError):
        run(ExperimentConfig(task="entropy", output_dir=str(tmp_path), **FAST))


def test_count_columns_deterministic(tmp_path):
    a = run(ExperimentConfig(task="entropy", output_dir=str(tmp_path / "a"), **FAST))
    b = run(ExperimentConfig(task="entropy", output_dir=str(tmp_path / "b"), **FAST))
    assert (tmp_path / "a" / "entropy.csv").read_bytes() == (tmp_path / "b" / "entropy.csv").read_bytes()
    assert a.tables == b.tables


def test_schedule_and_curve_tasks(tmp_path):
    rec = run(ExperimentConfig(task="schedule-report", system="doubling",
                               output_dir=str(tmp_path)))
    assert rec.ok
    rec = run(ExperimentConfig(task="bound-curve", system="cat", curve_n_max=500,
                               output_dir=str(tmp_path)))
    assert rec.ok and len(rec.tables["bound_curve"]) == 500


def test_local_task(tmp_path):
    rec = run(ExperimentConfig(task="local-entropy", system="rotation", eps_ladder=(1 / 8, 1 / 16),
                               coarse=2, centers=4, output_dir=str(tmp_path)))
    assert rec.ok, rec.summary()
    assert len(rec.tables["local"]) == 2 * 6


def test_cli_exit_codes(tmp_path, capsys):
    out = str(tmp_path)
    assert cli.main(["schedule-report", "--system", "doubling", "--out", out, "-q"]) == 0
    assert cli.main(["entropy", "--system", "doubling", "--eps", "1/8,1/4", "--out", out]) == 2
    assert cli.main(["entropy", "--system", "nosuch", "--out", out]) == 2
    assert cli.main(["entropy", "--system", "doubling", "--eps", "1/8,1/16,1/32", "--grid-g", "10",
                     "--window", "2,7", "--budget", "1e-9", "--out", out, "-q"]) == 1
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[experiment]\nworkers = 0\n")
    assert cli.main(["entropy", "--config", str(cfg), "--out", out]) == 2
    err = capsys.readouterr().err
    assert "workers" in err and "line 2" in err


def test_cli_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "entropia.cli", "certify-envelopes", "--system",
                           "trig", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "envelope:trig" in proc.stdout
