from __future__ import annotations

import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otpsim.gf2 import dual, sample_subspace
from otpsim.qsim import (
    BitReg,
    RegisterLayout,
    StateVector,
    apply_classical_oracle,
    apply_controlled,
    apply_hadamard_block,
    inner,
    measure,
    new_state,
    outcome_distribution,
    prepare_subspace_state,
    pure_trace_distance,
    reduced_density,
    split_outcomes,
    tensor,
    trace_distance,
)

WIDTHS = (2, 1, 2)
LAYOUT = RegisterLayout([("A", BitReg(2)), ("B", BitReg(1)), ("C", BitReg(2))])
H1 = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def dense(s: StateVector) -> np.ndarray:
    """Flatten to a vector indexed by A, B, C with A most significant."""
    v = np.zeros(1 << sum(WIDTHS), dtype=complex)
    for (a, b, c), amp in s.amps.items():
        v[(a << 3) | (b << 2) | c] = amp
    return v


def random_state(seed: int, terms: int = 10) -> StateVector:
    rng = np.random.default_rng(seed)
    amps = {}
    for _ in range(terms):
        label = (int(rng.integers(4)), int(rng.integers(2)), int(rng.integers(4)))
        amps[label] = complex(rng.normal(), rng.normal())
    return StateVector(LAYOUT, amps).normalized()


def hadamard_matrix(reg_mask: list[int]) -> np.ndarray:
    """Kronecker product over the five qubits; bit order is A1 A0 B C1 C0."""
    return reduce(np.kron, [H1 if m else np.eye(2) for m in reg_mask])


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_hadamard_matches_dense_kronecker(seed, mask):
    s = random_state(seed)
    got = dense(apply_hadamard_block(s, "C", mask))
    qubits = [0, 0, 0, mask >> 1 & 1, mask & 1]
    assert np.allclose(got, hadamard_matrix(qubits) @ dense(s), atol=1e-12)


@given(st.integers(0, 10**6))
def test_hadamard_is_an_involution(seed):
    s = random_state(seed)
    back = apply_hadamard_block(apply_hadamard_block(s, "A"), "A")
    assert back.distance(s) < 1e-12


@given(st.integers(0, 10**6), st.integers(1, 8), st.data())
def test_subspace_state_transforms_to_dual(seed, n, data):
    d = data.draw(st.integers(0, n))
    A = sample_subspace(n, d, np.random.default_rng(seed))
    got = apply_hadamard_block(prepare_subspace_state(A), "A")
    want = prepare_subspace_state(dual(A))
    assert got.distance(want) <= 1e-12


@given(st.integers(0, 10**6))
def test_classical_oracle_is_a_permutation(seed):
    s = random_state(seed)
    f = lambda a, b: (a ^ (3 * b)) & 3  # noqa: E731
    once = apply_classical_oracle(s, f, ["A", "B"], "C")
    assert abs(once.norm() - 1) < 1e-12
    assert apply_classical_oracle(once, f, ["A", "B"], "C").distance(s) < 1e-12


def test_classical_oracle_rejects_self_target():
    with pytest.raises(ValueError):
        apply_classical_oracle(new_state(LAYOUT), lambda a: a, ["A"], "A")


@given(st.integers(0, 10**6))
def test_controlled_hadamard_matches_dense(seed):
    s = random_state(seed)
    got = apply_controlled(s, lambda l: l[1] == 1, lambda t: apply_hadamard_block(t, "A"))
    full = hadamard_matrix([1, 1, 0, 0, 0])
    proj1 = np.diag([(i >> 2) & 1 for i in range(32)]).astype(complex)
    want = (full @ proj1 + (np.eye(32) - proj1)) @ dense(s)
    assert np.allclose(dense(got), want, atol=1e-12)


@given(st.integers(0, 10**6))
def test_split_outcomes_matches_born_rule(seed):
    s = random_state(seed)
    dist = outcome_distribution(s, "C", 0b10)
    parts = split_outcomes(s, "C", 0b10)
    assert set(parts) == set(dist)
    for o, (p, post) in parts.items():
        assert p == pytest.approx(dist[o], abs=1e-12)
        assert abs(post.norm() - 1) < 1e-12
        assert all(l[2] & 0b10 == o for l in post.amps)


def test_measure_frequencies():
    s = apply_hadamard_block(new_state(LAYOUT), "A")
    rng = np.random.default_rng(3)
    counts = np.zeros(4)
    for _ in range(4000):
        o, post = measure(s, "A", rng)
        counts[o] += 1
        assert post.amps == {(o, 0, 0): 1.0 + 0j}
    assert np.all(np.abs(counts / 4000 - 0.25) < 0.03)


@given(st.integers(0, 10**6))
def test_reduced_density_matches_numpy_partial_trace(seed):
    s = random_state(seed, terms=20)
    rho = reduced_density(s, ["A", "C"])
    psi = dense(s).reshape(4, 2, 4)
    full = np.einsum("abc,dbe->acde", psi, psi.conj()).reshape(16, 16)
    idx = [(a << 2) | c for a, c in rho.basis]
    assert np.allclose(rho.matrix, full[np.ix_(idx, idx)], atol=1e-12)
    assert rho.trace() == pytest.approx(1.0)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_trace_distance_of_pure_states(s1, s2):
    a, b = random_state(s1), random_state(s2)
    regs = ["A", "B", "C"]
    td = trace_distance(reduced_density(a, regs), reduced_density(b, regs))
    # sqrt(1 - overlap) loses half the digits near equal states
    assert td == pytest.approx(pure_trace_distance(a, b), abs=1e-7)


def test_trace_distance_is_contractive_under_partial_trace():
    a, b = random_state(1, 20), random_state(2, 20)
    full = trace_distance(reduced_density(a, ["A", "B", "C"]), reduced_density(b, ["A", "B", "C"]))
    part = trace_distance(reduced_density(a, ["A"]), reduced_density(b, ["A"]))
    assert part <= full + 1e-12


def test_tensor_and_inner():
    p = StateVector(RegisterLayout([("P", BitReg(1))]), {(0,): 0.6, (1,): 0.8j})
    q = StateVector(RegisterLayout([("Q", BitReg(1))]), {(1,): 1.0})
    pq = tensor(p, q)
    assert pq.layout.names == ("P", "Q")
    assert pq.amps == {(0, 1): 0.6, (1, 1): 0.8j}
    assert inner(pq, pq) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        tensor(p, p)


def test_new_state_validates_labels():
    with pytest.raises(ValueError):
        new_state(LAYOUT, {"A": 4})
