from __future__ import annotations

import csv
import io
import json

import pytest

from otpsim.cli import CSV_COLUMNS, main

from small_configs import SMALL


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run(tmp_path, experiment, config, *extra, out="out.json"):
    cfg = write_config(tmp_path, config)
    target = tmp_path / out
    code = main([experiment, "--config", cfg, "--out", str(target), *extra])
    return code, target


def test_passing_run_exits_zero_and_writes_sidecar(tmp_path):
    code, out = run(tmp_path, "attack-gentle", SMALL["attack-gentle"])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["pass"] is True
    assert payload["config"]["trials"] == 50
    meta = json.loads((tmp_path / "out.json.meta.json").read_text())
    assert meta["jobs"] == 1 and "seconds" in meta


def test_failing_record_exits_one(tmp_path):
    config = {"family": "constant", "adversary": "constant", "trials": 20, "predicted": 0.0, "relation": "eq"}
    code, out = run(tmp_path, "learning-game", config)
    assert code == 1
    assert json.loads(out.read_text())["pass"] is False


@pytest.mark.parametrize(
    "experiment,config",
    [
        ("attack-gentle", {"trials": 5, "surprise": 1}),
        ("attack-gentle", {"trials": -1}),
        ("no-such-experiment", {}),
        ("attack-gentle", {"experiment": "correctness"}),
    ],
)
def test_config_errors_exit_two(tmp_path, experiment, config, capsys):
    code, _ = run(tmp_path, experiment, config)
    assert code == 2
    assert "otpsim:" in capsys.readouterr().err


def test_unreadable_config_exits_two(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["attack-gentle", "--config", str(bad)]) == 2


def test_attack_alias(tmp_path):
    code, out = run(tmp_path, "attack", {"name": "gentle", "trials": 10})
    assert code == 0
    assert json.loads(out.read_text())["experiment"] == "attack-gentle"


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_same_seed_gives_identical_bytes(tmp_path, fmt):
    config = {**SMALL["correctness"], "seed": 7}
    _, a = run(tmp_path, "correctness", config, "--format", fmt, out="a")
    _, b = run(tmp_path, "correctness", config, "--format", fmt, out="b")
    assert a.read_bytes() == b.read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    _, a = run(tmp_path, "correctness", {**SMALL["correctness"], "seed": 1}, "--seed", "2", out="a")
    assert json.loads(a.read_text())["seed"] == 2


def test_csv_columns(tmp_path):
    _, out = run(tmp_path, "attack-mr", SMALL["attack-mr"], "--format", "csv", out="mr.csv")
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) > 1
    for row in rows[1:]:
        assert row[0].startswith("attack-mr/")
        assert len(row[1]) == 12
        float(row[2])
        assert row[6] in ("true", "false", "")


def test_jobs_environment_override(tmp_path, monkeypatch):
    monkeypatch.setenv("OTPSIM_JOBS", "2")
    code, out = run(tmp_path, "correctness", SMALL["correctness"], "--jobs", "1")
    assert code == 0
    assert json.loads((tmp_path / "out.json.meta.json").read_text())["jobs"] == 2
    monkeypatch.setenv("OTPSIM_JOBS", "lots")
    assert run(tmp_path, "correctness", SMALL["correctness"])[0] == 2


def test_stdout_when_no_out(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL["attack-mr"])
    assert main(["attack-mr", "--config", cfg]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["experiment"] == "attack-mr"
    assert "PASS attack-mr/" in captured.err
