from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otpsim.gf2 import (
    BitWord,
    all_subspaces,
    contains,
    dual,
    enumerate_subspace,
    from_hex,
    intersect,
    rref,
    sample_subspace,
    span,
    subspace_count,
    to_hex,
)

from conftest import brute_dual, brute_span, rows_and_width


def test_rref_example():
    assert rref([0b1100, 0b0110, 0b1010], 4) == (0b1010, 0b0110)


def test_bit_order_is_leftmost_coordinate_first():
    assert str(BitWord(0b1000, 4)) == "1000"
    assert BitWord.from_str("0110").bits == 6


@given(rows_and_width())
def test_span_matches_brute_force(data):
    n, rows = data
    assert enumerate_subspace(span(rows, n)) == brute_span(rows, n)


@given(rows_and_width())
def test_rref_is_canonical_under_row_shuffles(data):
    n, rows = data
    rng = np.random.default_rng(len(rows))
    shuffled = list(rng.permutation(rows)) if rows else []
    mixed = [r ^ rows[0] for r in shuffled] + rows[:1] if rows else []
    assert span(rows, n) == span(shuffled, n) == span(mixed, n)


@given(rows_and_width())
def test_dual_matches_brute_force(data):
    n, rows = data
    A = span(rows, n)
    D = dual(A)
    assert enumerate_subspace(D) == brute_dual(A.basis, n)
    assert A.dim + D.dim == n
    assert dual(D) == A


@given(rows_and_width(), rows_and_width())
def test_intersection_matches_brute_force(a, b):
    n = min(a[0], b[0])
    mask = (1 << n) - 1
    A = span([r & mask for r in a[1]], n)
    B = span([r & mask for r in b[1]], n)
    expected = sorted(set(enumerate_subspace(A)) & set(enumerate_subspace(B)))
    assert enumerate_subspace(intersect(A, B)) == expected


@given(rows_and_width(), st.integers(0, 255))
def test_contains_agrees_with_enumeration(data, v):
    n, rows = data
    v &= (1 << n) - 1
    A = span(rows, n)
    assert contains(A, v) == (v in enumerate_subspace(A))
    assert contains(A, BitWord(v, n)) == contains(A, v)


@pytest.mark.parametrize("n,d,count", [(2, 1, 3), (4, 2, 35), (5, 2, 155), (6, 3, 1395), (8, 4, 200787)])
def test_subspace_count_gaussian_binomial(n, d, count):
    assert subspace_count(n, d) == count


@pytest.mark.parametrize("n,d", [(3, 1), (4, 2), (5, 2), (5, 3)])
def test_all_subspaces_enumerates_each_once(n, d):
    subs = list(all_subspaces(n, d))
    assert len(subs) == len(set(subs)) == subspace_count(n, d)
    assert all(S.dim == d for S in subs)


def test_sample_subspace_is_uniform():
    rng = np.random.default_rng(5)
    counts: dict = {}
    draws = 7000
    for _ in range(draws):
        S = sample_subspace(4, 2, rng)
        counts[S] = counts.get(S, 0) + 1
    assert len(counts) == 35
    expected = draws / 35
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < 70  # 34 degrees of freedom, p < 1e-3 above this


@given(rows_and_width())
def test_json_round_trip(data):
    n, rows = data
    A = span(rows, n)
    assert type(A).from_json(A.to_json()) == A


def test_hex_round_trip_and_overflow():
    assert to_hex(5, 9) == "005"
    assert from_hex("005", 9) == 5
    with pytest.raises(ValueError):
        from_hex("200", 9)
    with pytest.raises(ValueError):
        BitWord(16, 4)
