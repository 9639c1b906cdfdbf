from __future__ import annotations

import json

import pytest

from otpsim.experiments import EXPERIMENTS, ConfigError, resolve_params, run_experiment

from small_configs import SMALL

RECORD_KEYS = {
    "experiment", "check", "params", "estimate", "ci", "sigma", "predicted",
    "provenance", "relation", "bound", "trials", "pass", "details",
}


def test_every_experiment_has_a_small_config():
    assert set(SMALL) == set(EXPERIMENTS)


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_small_run_produces_wellformed_records(name):
    params = resolve_params(name, SMALL[name])
    records = run_experiment(name, params, seed=1)
    assert records
    for r in records:
        assert set(r) == RECORD_KEYS
        assert r["experiment"] == name
        assert r["relation"] in ("eq", "le", "ge")
        assert r["pass"] in (True, False, None)
        json.dumps(r)  # must serialize
    judged = [r for r in records if r["pass"] is not None]
    assert judged, "every experiment judges at least one record"


@pytest.mark.parametrize(
    "name,config",
    [
        ("correctness", {"bogus": 1}),
        ("correctness", {"trials": "many"}),
        ("correctness", {"trials": 0}),
        ("correctness", {"n": 5}),
        ("hybrids", {"pair": "2:9"}),
        ("hybrids", {"overlap_filter": 1}),
        ("learning-game", {"mode": "telepathy"}),
        ("prf-game", {"adversary": "oracle"}),
        ("weak-operational", {"family": "chaotic"}),
    ],
)
def test_bad_configs_are_rejected(name, config):
    with pytest.raises(ConfigError):
        resolve_params(name, config)


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        resolve_params("nope", {})


def test_nullable_keys():
    assert resolve_params("correctness", {"compare_n": None})["compare_n"] is None


def test_records_do_not_depend_on_jobs():
    params = resolve_params("correctness", SMALL["correctness"])
    assert run_experiment("correctness", params, 4, jobs=1) == run_experiment("correctness", params, 4, jobs=2)
