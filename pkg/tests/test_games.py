from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otpsim.games import (
    FamilySpec,
    GameRecord,
    LearningAdversary,
    OracleMode,
    SinglePhysicalMachine,
    advantage_from_bits,
    map_trials,
    run_learning_game,
    run_prf_indistinguishability_game,
    run_weak_operational_game,
    wilson_ci,
)
from otpsim.script import QueryRefused, run_script
from otpsim.tables import FunctionTable


def test_wilson_interval_reference_value():
    lo, hi = wilson_ci(50, 100)
    assert lo == pytest.approx(0.40383, abs=1e-4)
    assert hi == pytest.approx(0.59617, abs=1e-4)


@given(st.integers(1, 500), st.data())
def test_wilson_interval_contains_estimate(trials, data):
    wins = data.draw(st.integers(0, trials))
    lo, hi = wilson_ci(wins, trials)
    assert 0 <= lo <= wins / trials <= hi <= 1


@pytest.mark.parametrize(
    "relation,estimate,expected",
    [("eq", 52, True), ("eq", 80, False), ("le", 20, True), ("le", 80, False), ("ge", 80, True), ("ge", 20, False)],
)
def test_game_record_relations(relation, estimate, expected):
    rec = GameRecord("g", {}, 100, estimate, predicted=0.5, relation=relation)
    assert rec.passed is expected


def test_game_record_without_prediction_is_unjudged():
    assert GameRecord("g", {}, 10, 3).passed is None
    with pytest.raises(ValueError):
        GameRecord("g", {}, 10, 11)


def test_advantage_of_identical_bits_is_zero():
    assert advantage_from_bits([0, 1, 1, 0], [0, 1, 1, 0])["advantage"] == 0.0


def _square(t):
    return (t, t * t)


def test_map_trials_is_independent_of_jobs():
    assert map_trials(_square, 40, 1) == map_trials(_square, 40, 2)


def test_single_physical_machine_refuses_second_query():
    m = SinglePhysicalMachine(FunctionTable.randomness(1, 1))
    ctx_script = LearningAdversary("replay")
    from otpsim.games import GameContext

    script = ctx_script.script(GameContext(OracleMode.SINGLE_PHYSICAL, FamilySpec("randomness", 1, 1)))
    with pytest.raises(QueryRefused):
        run_script(script, m, mode="sample", rng=np.random.default_rng(0))


def test_constant_adversary_wins_against_seq_on_constant_family():
    rec = run_learning_game(FamilySpec("constant", 1, 1, 2), "constant", "seq", 200, seed=1, exact=True)
    assert rec.wins == 200
    assert rec.exact_mean == pytest.approx(1.0)


def test_measure_then_guess_is_bounded_by_output_guessing():
    fam = FamilySpec("uniform", 1, 1, 4)
    rec = run_learning_game(fam, "measure-then-guess", "seq", 3000, seed=2, predicted=1 / 16, relation="le", exact=True)
    assert rec.passed
    assert rec.exact_mean <= 1 / 16 + 1e-12


def test_replay_on_revealing_family_under_seq():
    # f(x; r) = r || T[x, r].  Copying the first output records H(0), so the
    # second query is answered only on the empty-database part (weight 1/|R|).
    # A refused query leaves y2 = 0, which verifies iff T[1, 0] = 0.
    fam = FamilySpec("revealing", 1, 2, t_bits=2)
    rec = run_learning_game(fam, "replay", "seq", 400, seed=3, exact=True)
    assert rec.exact_mean == pytest.approx(0.25 + 0.75 * 0.25, abs=0.06)
    assert rec.passed


def test_weak_operational_game_needs_program_builder():
    with pytest.raises(ValueError):
        run_weak_operational_game(FamilySpec("randomness", 1, 1), "replay", "seq", 10, seed=0)


def test_weak_operational_replay_on_full_program_matches_exact():
    fam = FamilySpec("revealing", 1, 2, t_bits=2)
    rec = run_weak_operational_game(fam, "replay", "full-otp", 300, seed=4, exact=True)
    assert rec.passed


def test_prf_honest_compare_closed_form():
    # f(x; r) = r with |Y| = 4: comparing e1 with the first challenge is
    # right with probability 1/2 + (1/2)(1 - 1/4); the second bit is a guess
    fam = FamilySpec("randomness", 1, 2)
    rec = run_prf_indistinguishability_game(fam, "honest-compare", "seq", 2000, seed=5)
    assert rec.exact_mean == pytest.approx(0.5 * (0.5 + 0.5 * 0.75), abs=1e-12)
    assert rec.passed


def test_prf_random_guess_is_one_quarter():
    rec = run_prf_indistinguishability_game(FamilySpec("uniform", 1, 1, 2), "random-guess", "seq", 1000, seed=6)
    assert rec.exact_mean == pytest.approx(0.25)
    assert abs(rec.estimate - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / 1000)


def test_family_kinds():
    rng = np.random.default_rng(0)
    assert FamilySpec("randomness", 1, 3).sample(rng).is_deterministic() is False
    assert FamilySpec("deterministic", 2, 2, 3).sample(rng).is_deterministic()
    rev = FamilySpec("revealing", 1, 2, t_bits=3)
    f = rev.sample(rng)
    assert all(rev.r_of(f(x, r)) == r for x in range(2) for r in range(4))
    with pytest.raises(ValueError):
        FamilySpec("bogus", 1, 1)


def test_games_are_seed_deterministic():
    fam = FamilySpec("uniform", 1, 1, 2)
    a = run_learning_game(fam, "measure-then-guess", "full-otp", 50, seed=9).to_json()
    b = run_learning_game(fam, "measure-then-guess", "full-otp", 50, seed=9).to_json()
    assert a == b
