from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otpsim.croracle import (
    FunctionRegisterSpec,
    co_prime,
    db_from_json,
    db_get,
    db_remove,
    db_set,
    db_to_json,
    decomp,
    entry_histogram,
    prepare_function_register,
    project_E,
    query,
    switch_rename,
)
from otpsim.qsim import StateVector, apply_classical_oracle, new_state, reduced_density, tensor, trace_distance

from conftest import oracle_layout, random_db_state

seeds = st.integers(0, 2**32 - 1)


def closed_form_decomp(s: StateVector, y_bits: int) -> StateVector:
    """Decompression written out per basis vector with ``N = |Y|``.

    ``|D>`` (no entry at ``x``) goes to ``N**-1/2 sum_y |D + (x,y)>``.
    ``|D + (x,y)>`` goes to itself plus ``N**-1/2 |D>`` minus
    ``N**-1 sum_y' |D + (x,y')>``.
    """
    N = 1 << y_bits
    out: dict = {}

    def add(label, amp):
        out[label] = out.get(label, 0) + amp

    for (x, u, D), a in s.amps.items():
        y = db_get(D, x)
        base = db_remove(D, x)
        if y is None:
            for yy in range(N):
                add((x, u, db_set(base, x, yy)), a / math.sqrt(N))
        else:
            add((x, u, D), a)
            add((x, u, base), a / math.sqrt(N))
            for yy in range(N):
                add((x, u, db_set(base, x, yy)), -a / N)
    return StateVector(s.layout, {k: v for k, v in out.items() if abs(v) > 1e-15})


@given(seeds, st.integers(1, 2))
def test_decomp_matches_closed_form(seed, y_bits):
    s = random_db_state(np.random.default_rng(seed), y_bits=y_bits)
    assert decomp(s, "X", "D").distance(closed_form_decomp(s, y_bits)) <= 1e-12


def test_decomp_single_entry_at_two_outputs():
    layout = oracle_layout(1, 1)
    s = new_state(layout, (0, 0, ((0, 0),)))
    got = decomp(s, "X", "D")
    want = {(0, 0, ((0, 0),)): 0.5, (0, 0, ((0, 1),)): -0.5, (0, 0, ()): 1 / math.sqrt(2)}
    assert StateVector(layout, want).distance(got) <= 1e-12


@given(seeds)
def test_decomp_and_co_prime_are_involutions(seed):
    s = random_db_state(np.random.default_rng(seed), y_bits=2)
    assert decomp(decomp(s, "X", "D"), "X", "D").distance(s) <= 1e-12
    assert co_prime(co_prime(s, "X", "U", "D"), "X", "U", "D").distance(s) <= 1e-12


@given(seeds)
def test_operators_preserve_norm(seed):
    s = random_db_state(np.random.default_rng(seed))
    for t in (decomp(s, "X", "D"), co_prime(s, "X", "U", "D"), query(s, "X", "U", "D")):
        assert abs(t.norm() - 1) <= 1e-12


@given(seeds, st.integers(0, 3), st.integers(0, 3))
def test_renaming_commutes_with_query(seed, x1, x2):
    s = random_db_state(np.random.default_rng(seed))
    sw = lambda t: switch_rename(t, x1, x2, "X", "D")  # noqa: E731
    assert sw(query(sw(s), "X", "U", "D")).distance(query(s, "X", "U", "D")) <= 1e-12


def test_switch_moves_entry_names():
    layout = oracle_layout()
    s = new_state(layout, (1, 0, ((1, 1),)))
    assert switch_rename(s, 1, 2, "X", "D").amps == {(2, 0, ((2, 1),)): 1.0 + 0j}


def test_query_database_size_weights():
    # a computational-basis answer register leaves weight 1/|Y| on the empty
    # database; a Fourier answer register is always recorded
    layout = oracle_layout(2, 2)
    start = new_state(layout, {"X": 1})
    assert entry_histogram(query(start, "X", "U", "D"), "D") == pytest.approx({0: 0.25, 1: 0.75})
    fourier = StateVector(layout, {(1, u, ()): (-1) ** (u & 1) / 2 for u in range(4)})
    assert entry_histogram(query(fourier, "X", "U", "D"), "D") == pytest.approx({1: 1.0})


def _random_oracle_view(inputs: StateVector, queries: int, x_bits: int, y_bits: int):
    """Adversary state averaged over every function ``H`` (classical queries)."""
    rho = None
    tables = list(itertools.product(range(1 << y_bits), repeat=1 << x_bits))
    for H in tables:
        s = inputs
        for _ in range(queries):
            s = apply_classical_oracle(s, lambda x, H=H: H[x], ["X"], "U")
        part = reduced_density(s, ["X", "U"], 1 / len(tables))
        if rho is None:
            rho = part
        else:
            from otpsim.qsim import add_density

            rho = add_density(rho, part)
    return rho


@pytest.mark.parametrize("queries", [1, 2])
def test_compressed_oracle_matches_averaged_random_oracle(queries):
    rng = np.random.default_rng(11)
    layout = oracle_layout(2, 1)
    amps = {(x, u, ()): complex(rng.normal(), rng.normal()) for x in range(4) for u in range(2)}
    s = StateVector(layout, amps).normalized()
    t = s
    for _ in range(queries):
        t = query(t, "X", "U", "D")
    rho_c = reduced_density(t, ["X", "U"])
    rho_r = _random_oracle_view(s, queries, 2, 1)
    assert trace_distance(rho_c, rho_r) <= 1e-12


def test_database_json_round_trip():
    D = ((1, 3), (5, 0))
    assert db_from_json(db_to_json(D, 4, 2)) == D
    with pytest.raises(ValueError):
        db_from_json({"in_w": 4, "out_w": 2, "entries": [["1", "0"], ["1", "1"]]})


def test_project_E_keeps_consistent_states():
    spec = FunctionRegisterSpec.all_functions(1, 1, 1)
    reg = prepare_function_register(spec)
    empty = tensor(new_state(oracle_layout(2, 1)), reg)
    kept, _ = project_E(empty, "D", "F", spec)
    assert kept == pytest.approx(1.0)
    lay = empty.layout
    bad = StateVector(lay, {lay.zero_label(D=((0, 0), (1, 0)), F=0): 1.0})
    assert project_E(bad, "D", "F", spec)[0] == 0.0
