from __future__ import annotations


import numpy as np
import pytest

from otpsim.attacks import (
    birthday_probability,
    chaining_bound,
    chaining_experiment,
    collision_experiment,
    direct_product_baseline,
    direct_product_prediction,
    gentle_replay_experiment,
    mr_empirical_check,
    mr_exhaustive_check,
    pairwise_E_experiment,
    partial_det_experiment,
    preimage_knowledge_experiment,
    PartialDetParams,
)
from otpsim.corpus import seq_corpus
from otpsim.games import FamilySpec


def half_chain(N: int) -> float:
    """One recorded step of the chain: ``(2/N - 1/N^2) / 2``."""
    return 0.5 * (2 / N - 1 / N**2)


# chaining ---------------------------------------------------------------------


@pytest.mark.parametrize("y_bits", [2, 3, 4])
def test_orbit_reduced_chaining_matches_direct_engine(y_bits):
    direct = chaining_experiment(2, y_bits, symmetric=False)["violations"]
    reduced = chaining_experiment(2, y_bits, symmetric=True)["violations"]
    assert direct.keys() == reduced.keys()
    for name in direct:
        assert reduced[name] == pytest.approx(direct[name], abs=1e-12)


def test_orbit_reduced_chaining_matches_direct_engine_carried():
    direct = chaining_experiment(2, 2, carried=True, symmetric=False)["violations"]
    reduced = chaining_experiment(2, 2, carried=True, symmetric=True)["violations"]
    for name in direct:
        assert reduced[name] == pytest.approx(direct[name], abs=1e-12)


@pytest.mark.parametrize("y_bits", [3, 4, 6])
def test_classical_single_step_closed_form(y_bits):
    res = chaining_experiment(1, y_bits, classical=True)
    assert res["max_violation"] == pytest.approx(half_chain(1 << y_bits), abs=1e-15)


@pytest.mark.parametrize("y_bits", [4, 6])
def test_superposed_two_step_closed_form(y_bits):
    res = chaining_experiment(2, y_bits)
    assert res["violations"]["superposed-2"] == pytest.approx(half_chain(1 << y_bits), abs=1e-15)
    assert res["passed"]


def test_chaining_bound_formula():
    assert chaining_bound(2, 6) == pytest.approx(16 * (2 / 64 - 1 / 64**2))


# collisions and preimages -------------------------------------------------------------


def test_birthday_probability():
    assert birthday_probability(2, 4) == pytest.approx(0.25)
    assert birthday_probability(5, 4) == pytest.approx(1.0)


def test_collision_prediction_and_bound():
    rec = collision_experiment(4, 6, 3000, seed=1)
    assert rec.extra["birthday"] == pytest.approx(birthday_probability(4, 64))
    assert rec.predicted <= rec.extra["birthday"] <= rec.extra["bound"]
    assert rec.passed


def test_blind_preimage_is_exact():
    res = preimage_knowledge_experiment("blind", 4000, seed=2)
    assert res["p_exact_zero_query"] == pytest.approx(1 - (1 - 2.0**-8) ** 2, abs=1e-15)
    assert res["p_prime"] == 0.0
    assert res["passed"]


def test_echo_preimage_database_knowledge():
    # one computational-basis query records the answer except on the
    # empty-database and mismatched parts: p' = (1 - 1/|Y|)^2
    res = preimage_knowledge_experiment("echo", 200, seed=3)
    assert res["p"] == 1.0
    assert res["p_prime"] == pytest.approx((1 - 1 / 256) ** 2, abs=1e-12)
    assert res["passed"]


# replay and counterexamples -------------------------------------------------------------


def test_gentle_replay_on_deterministic_function():
    rec = gentle_replay_experiment(FamilySpec("deterministic", 1, 2, 2), 100, seed=0)
    assert rec.wins == rec.trials
    assert rec.extra["min_fidelity"] >= 1 - 1e-9


@pytest.mark.parametrize("r_bits", [1, 2, 3])
def test_gentle_replay_on_randomness_drops_to_one_over_R(r_bits):
    rec = gentle_replay_experiment(FamilySpec("randomness", 1, r_bits), 300, seed=r_bits)
    assert rec.predicted == pytest.approx(2.0**-r_bits)
    assert rec.exact_mean == pytest.approx(2.0**-r_bits, abs=1e-12)
    assert rec.passed


def test_partial_det_attack_seq_versus_single_physical():
    seq = partial_det_experiment(100, seed=0)
    phys = partial_det_experiment(100, seed=0, mode="single-physical")
    assert seq.wins == 100
    assert phys.wins == 0
    assert seq.extra["max_leftover_db_weight"] <= 1e-12


def test_partial_det_rejects_zero_a():
    with pytest.raises(ValueError):
        PartialDetParams(2, 0, 1, np.zeros((4, 4, 4), dtype=int))


@pytest.mark.parametrize("n", [4, 8])
def test_direct_product_predictions(n):
    k = 2 ** (n // 2) - 1
    assert direct_product_prediction(n, "blind") == pytest.approx((k / 2**n) ** 2)
    assert direct_product_prediction(n, "measure-one-guess-other") == pytest.approx((k / 2 ** (n // 2)) * (k / 2**n))


def test_direct_product_baseline_matches_prediction():
    rec = direct_product_baseline(4, "measure-one-guess-other", 3000, seed=1)
    assert rec.passed


# measure and reprogram -----------------------------------------------------------------


def test_measure_and_reprogram_exhaustive():
    res = mr_exhaustive_check()
    assert res["passed"]
    assert res["cases"] > 0
    assert res["min_ratio"] >= 1 / 9
    assert res["min_ratio"] == pytest.approx(1 / 3)


def test_measure_and_reprogram_empirical():
    res = mr_empirical_check(500, seed=0)
    assert res["factor"] == 25
    assert res["passed"]
    assert abs(res["lhs"] - res["lhs_exact"]) <= 4 * res["sigma"]


# consistency projection ----------------------------------------------------------------


def test_pairwise_e_norms():
    res = pairwise_E_experiment(seq_corpus(1, 2, random_count=2))
    assert res["passed"]
    by_name = {r["script"]: r for r in res["results"]}
    assert by_name["uncompute"]["final_norm"] == pytest.approx(1.0, abs=1e-9)
    assert by_name["phase-query"]["min_norm"] == pytest.approx(1.0, abs=1e-9)
    assert all(0 < r["min_norm"] <= 1 + 1e-9 for r in res["results"])
