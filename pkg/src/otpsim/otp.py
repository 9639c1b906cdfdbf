"""One-time sampling programs from subspace states, their simulator, and
the sequence of intermediate oracles that connects the two.

Register conventions shared by every machine in this module:

``Qx``  (m bits)      the input ``x``; bit ``i`` (most significant first) is ``x_i``
``Qv``  (m*n bits)    the vectors ``v_1 .. v_m``; ``v_1`` occupies the top ``n`` bits
``Qu``  (y_bits)      the answer register

The program state ``|A_1> (x) ... (x) |A_m>`` lives in ``Qv``, so honest
evaluation applies Hadamards to the blocks with ``x_i = 1`` and queries
the oracle in place.

Machines and their internal registers (all start at zero / empty):

=====  ===========================================================
level  internal registers
=====  ===========================================================
0      none (the table ``G`` is classical)
1-3    ``DG`` database for ``G``, scratch ``Gv``, ``Gr``
4      as 1-3 plus the input cache ``Rx``
5-6    ``DH`` database for ``H``, scratch ``Hx``, ``Hr``, vector cache ``Vc``
7      as 5-6 plus the flag ``B7``
sim    the SEQ oracle (``DH``, ``Hx``, ``Hr``), ``Vc``, probe ``Px``, ``Pu``,
       ``Pb`` and the answer flag ``B``
=====  ===========================================================
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .croracle import query_by
from .gf2 import Subspace, dual, enumerate_subspace, intersect, sample_subspace
from .qsim import (
    BitReg,
    DbReg,
    DensityMatrix,
    FlagReg,
    Label,
    RegKind,
    RegisterLayout,
    StateVector,
    add_density,
    apply_basis_map,
    apply_controlled,
    apply_hadamard_block,
    measure,
    new_state,
    outcome_distribution,
    prepare_uniform,
    reduced_density,
    trace_distance,
)
from .script import (
    AdversaryScript,
    Branch,
    adversary_registers,
    load_register,
    run_script,
)
from .seq import SeqOracle, seq_new, seq_query
from .tables import FunctionTable, lane_rng

__all__ = [
    "VectorCheck",
    "OtpInstance",
    "SimInstance",
    "HybridMachine",
    "SimMachine",
    "generate",
    "otp_oracle_apply",
    "evaluate",
    "exact_output_distribution",
    "ideal_output_distribution",
    "total_variation",
    "correctness_experiment",
    "simulate_generate",
    "sim_oracle_apply",
    "hybrid_build",
    "hybrid_compare",
    "adversary_view",
    "program_state",
    "sample_subspaces",
    "PERFECT_PAIRS",
    "ProgramConsumed",
]

PERFECT_PAIRS = ((0, 1), (3, 4), (4, 5), (5, 6), (6, 7))


class ProgramConsumed(RuntimeError):
    """The program state was already used by an honest evaluation."""


def split_blocks(v: int, m: int, n: int) -> list[int]:
    """``[v_1, ..., v_m]`` from the packed vector register value."""
    mask = (1 << n) - 1
    return [(v >> (n * (m - 1 - i))) & mask for i in range(m)]


def x_bit(x: int, i: int, m: int) -> int:
    return (x >> (m - 1 - i)) & 1


def hadamard_mask(x: int, m: int, n: int) -> int:
    """Bits of ``Qv`` that honest evaluation on ``x`` sends through Hadamards."""
    block = (1 << n) - 1
    return sum(block << (n * (m - 1 - i)) for i in range(m) if x_bit(x, i, m))


def flip_last(x: int) -> int:
    """The probe input: ``x`` with its last bit flipped."""
    return x ^ 1


class VectorCheck:
    """Membership tests for ``v_i`` against ``A_i`` or its dual, chosen by ``x_i``."""

    def __init__(self, subspaces: Sequence[Subspace]):
        self.subspaces = tuple(subspaces)
        self.m = len(subspaces)
        self.n = subspaces[0].ambient_dim
        self.primal = [frozenset(enumerate_subspace(A)) for A in subspaces]
        self.duals = [frozenset(enumerate_subspace(dual(A))) for A in subspaces]
        self.overlap = [frozenset(enumerate_subspace(intersect(A, dual(A)))) for A in subspaces]

    def _sets(self, x: int):
        return [self.duals[i] if x_bit(x, i, self.m) else self.primal[i] for i in range(self.m)]

    def nonzero(self, x: int, v: int) -> bool:
        """Every ``v_i`` lies in ``A_i^{x_i}`` and is nonzero."""
        blocks = split_blocks(v, self.m, self.n)
        return all(b != 0 and b in S for b, S in zip(blocks, self._sets(x)))

    def strict(self, x: int, v: int) -> bool:
        """Every ``v_i`` lies in ``A_i^{x_i}`` but outside ``A_i & dual(A_i)``."""
        blocks = split_blocks(v, self.m, self.n)
        return all(b in S and b not in O for b, S, O in zip(blocks, self._sets(x), self.overlap))

    def early_return(self, x: int, v: int) -> bool:
        """Passes the nonzero check but fails the strict one."""
        return self.nonzero(x, v) and not self.strict(x, v)

    def valid_vectors(self) -> list[int]:
        """Every packed ``v`` that passes the nonzero check for some ``x``."""
        out = set()
        for x in range(1 << self.m):
            choices = [sorted(S - {0}) for S in self._sets(x)]
            for combo in itertools.product(*choices):
                v = 0
                for b in combo:
                    v = (v << self.n) | b
                out.add(v)
        return sorted(out)

    def trivial_overlap(self) -> bool:
        return all(len(O) == 1 for O in self.overlap)


def sample_subspaces(m: int, n: int, rng: np.random.Generator) -> list[Subspace]:
    if n % 2:
        raise ValueError("n must be even")
    return [sample_subspace(n, n // 2, rng) for _ in range(m)]


def program_state(subspaces: Sequence[Subspace], reg: str = "Qv") -> StateVector:
    """``|A_1> (x) ... (x) |A_m>`` packed into one register."""
    n = subspaces[0].ambient_dim
    vecs = [0]
    for A in subspaces:
        vecs = [(v << n) | a for v in vecs for a in enumerate_subspace(A)]
    return prepare_uniform(vecs, reg, n * len(subspaces))


def _check_sizes(f: FunctionTable, m: int, n: int) -> None:
    if n % 2 or n <= 0:
        raise ValueError("n must be a positive even number")
    if m * n > 16:
        raise ValueError("m * n must be at most 16")
    if f.x_bits != m:
        raise ValueError(f"f takes {f.x_bits}-bit inputs but m = {m}")


def _xor_into(i: int, value_of: Callable[[Label], int]) -> Callable[[Label], Label]:
    def step(label: Label) -> Label:
        return label[:i] + (label[i] ^ value_of(label),) + label[i + 1 :]

    return step


def _cnot(src: int, dst: int) -> Callable[[Label], Label]:
    return _xor_into(dst, lambda l: l[src])


def _lazy_evaluate(
    s: StateVector,
    db_reg: str,
    key_reg: str,
    r_reg: str,
    key_of: Callable[[Label], int],
    answer: Callable[[Label, int], int],
    u_reg: str,
) -> StateVector:
    """XOR ``answer(label, O(key))`` into ``u_reg`` for the compressed oracle ``O``.

    Queries ``O`` on a scratch pair ``(key, 0)``, applies the answer, and
    queries again so the scratch returns to zero.
    """
    lay = s.layout
    ki, ri, ui = lay.index(key_reg), lay.index(r_reg), lay.index(u_reg)
    load = _xor_into(ki, key_of)
    s = apply_basis_map(s, load)
    s = query_by(s, db_reg, lambda l: l[ki], r_reg)
    s = apply_basis_map(s, _xor_into(ui, lambda l: answer(l, l[ri])))
    s = query_by(s, db_reg, lambda l: l[ki], r_reg)
    s = apply_basis_map(s, load)
    leak = sum(abs(a) ** 2 for k, a in s.amps.items() if k[ri])
    if leak > 1e-18:
        raise RuntimeError(f"scratch register kept weight {leak:.3e}")
    return StateVector(s.layout, {k: a for k, a in s.amps.items() if k[ri] == 0})


@dataclass
class _Shared:
    f: FunctionTable
    m: int
    n: int
    subspaces: list[Subspace]
    check: VectorCheck = field(init=False)

    def __post_init__(self) -> None:
        _check_sizes(self.f, self.m, self.n)
        if len(self.subspaces) != self.m:
            raise ValueError("need one subspace per input bit")
        self.check = VectorCheck(self.subspaces)

    def query_registers(self) -> list[tuple[str, RegKind]]:
        return [("Qx", BitReg(self.m)), ("Qv", BitReg(self.m * self.n)), ("Qu", BitReg(self.f.y_bits))]

    def prepare(self, s: StateVector) -> StateVector:
        return load_register(s, "Qv", program_state(self.subspaces))


class HybridMachine(_Shared):
    """The oracle of intermediate experiment ``level`` (0 to 7)."""

    def __init__(
        self,
        level: int,
        f: FunctionTable,
        m: int,
        n: int,
        subspaces: Sequence[Subspace],
        G: np.ndarray | dict | None = None,
    ):
        if level not in range(8):
            raise ValueError(f"level must be in 0..7, got {level}")
        super().__init__(f, m, n, list(subspaces))
        self.level = level
        if level == 0:
            if G is None:
                raise ValueError("level 0 needs a concrete table G")
            self.G = G
        r_bits, mn = f.r_bits, m * n
        if 1 <= level <= 4:
            self._internal = [("DG", DbReg(mn, r_bits)), ("Gv", BitReg(mn)), ("Gr", BitReg(r_bits))]
            if level == 4:
                self._internal.append(("Rx", BitReg(m)))
        elif level >= 5:
            self._internal = [
                ("DH", DbReg(m, r_bits)),
                ("Hx", BitReg(m)),
                ("Hr", BitReg(r_bits)),
                ("Vc", BitReg(mn)),
            ]
            if level == 7:
                self._internal.append(("B7", FlagReg()))
        else:
            self._internal = []

    def internal_registers(self) -> list[tuple[str, RegKind]]:
        return list(self._internal)

    # predicates -----------------------------------------------------------

    def _gate(self, s: StateVector) -> Callable[[Label], bool]:
        lay = s.layout
        xi, vi = lay.index("Qx"), lay.index("Qv")
        chk = self.check
        level = self.level
        if level <= 1:
            return lambda l: chk.nonzero(l[xi], l[vi])
        if level == 2:
            return lambda l: chk.strict(l[xi], l[vi])
        if level in (3, 4):
            di = lay.index("DG")
            return lambda l: chk.strict(l[xi], l[vi]) and all(e[0] == l[vi] for e in l[di])
        if level == 5:
            ci = lay.index("Vc")
            return lambda l: chk.strict(l[xi], l[vi]) and l[ci] in (0, l[vi])
        di = lay.index("DH")
        return lambda l: chk.strict(l[xi], l[vi]) and all(e[0] == l[xi] for e in l[di])

    # evaluation steps -----------------------------------------------------

    def _eval_G(self, s: StateVector) -> StateVector:
        lay = s.layout
        xi, vi = lay.index("Qx"), lay.index("Qv")
        f = self.f
        return _lazy_evaluate(s, "DG", "Gv", "Gr", lambda l: l[vi], lambda l, r: f(l[xi], r), "Qu")

    def _eval_H(self, s: StateVector) -> StateVector:
        xi = s.layout.index("Qx")
        f = self.f
        return _lazy_evaluate(s, "DH", "Hx", "Hr", lambda l: l[xi], lambda l, r: f(l[xi], r), "Qu")

    def _cache_x(self, s: StateVector) -> StateVector:
        lay = s.layout
        di, xi, ri = lay.index("DG"), lay.index("Qx"), lay.index("Rx")
        step = _cnot(xi, ri)
        return apply_basis_map(s, lambda l: step(l) if l[di] else l)

    def _cache_v(self, s: StateVector) -> StateVector:
        lay = s.layout
        di, vi, ci = lay.index("DH"), lay.index("Qv"), lay.index("Vc")
        step = _cnot(vi, ci)
        return apply_basis_map(s, lambda l: step(l) if l[di] else l)

    def _cache_v_flag(self, s: StateVector) -> StateVector:
        """Set ``B7`` when ``H`` has an entry off ``x ^ 1``, CNOT ``Qv -> Vc`` on it, clear ``B7``."""
        lay = s.layout
        di, xi, vi, ci, bi = (lay.index(r) for r in ("DH", "Qx", "Qv", "Vc", "B7"))
        set_flag = _xor_into(bi, lambda l: int(any(e[0] != flip_last(l[xi]) for e in l[di])))
        cache = _cnot(vi, ci)
        s = apply_basis_map(s, set_flag)
        s = apply_basis_map(s, lambda l: cache(l) if l[bi] else l)
        return apply_basis_map(s, set_flag)

    def _action(self, s: StateVector) -> StateVector:
        level = self.level
        if level <= 3:
            return self._eval_G(s)
        if level == 4:
            return self._cache_x(self._eval_G(self._cache_x(s)))
        cache = self._cache_v_flag if level == 7 else self._cache_v
        return cache(self._eval_H(cache(s)))

    def apply(self, s: StateVector, branch: Branch | None = None) -> StateVector:
        if self.level == 0:
            return _apply_concrete(s, self.check, self.f, self.G)
        return apply_controlled(s, self._gate(s), self._action)

    # invariants -----------------------------------------------------------

    def out_of_span(self, s: StateVector) -> float:
        """Weight outside the span the cache and database are claimed to stay in.

        Level 4: ``(Rx, DG)`` is ``(0, {})`` or ``(x, {(v, r)})`` with ``v``
        valid for ``x``.  Levels 5 and 6: ``(Vc, DH)`` is ``(0, {})`` or
        ``(v, {(x, r)})`` with ``v`` valid for ``x``.
        """
        lay = s.layout
        chk = self.check
        if self.level == 4:
            ri, di = lay.index("Rx"), lay.index("DG")

            def ok(l):
                D = l[di]
                if not D:
                    return l[ri] == 0
                return len(D) == 1 and chk.strict(l[ri], D[0][0])

        elif self.level in (5, 6):
            ci, di = lay.index("Vc"), lay.index("DH")

            def ok(l):
                D = l[di]
                if not D:
                    return l[ci] == 0
                return len(D) == 1 and chk.strict(D[0][0], l[ci])

        else:
            raise ValueError("span invariant is stated for levels 4, 5 and 6")
        return math.fsum(abs(a) ** 2 for k, a in s.amps.items() if not ok(k))


def _apply_concrete(s: StateVector, chk: VectorCheck, f: FunctionTable, G) -> StateVector:
    lay = s.layout
    xi, vi, ui = lay.index("Qx"), lay.index("Qv"), lay.index("Qu")

    def step(l: Label) -> Label:
        x, v = l[xi], l[vi]
        if not chk.nonzero(x, v):
            return l
        return l[:ui] + (l[ui] ^ f(x, int(G[v])),) + l[ui + 1 :]

    return apply_basis_map(s, step)


@dataclass
class OtpInstance:
    """A generated program: subspaces, the oracle table and the program state."""

    f: FunctionTable
    m: int
    n: int
    subspaces: list[Subspace]
    g_mode: str
    G: np.ndarray | None
    program_state: StateVector
    consumed: bool = False
    residual: StateVector | None = None

    @property
    def duals(self) -> list[Subspace]:
        return [dual(A) for A in self.subspaces]

    def machine(self) -> HybridMachine:
        """The program's oracle: level 0 with ``G`` concrete, level 1 when purified."""
        if self.g_mode == "concrete":
            return HybridMachine(0, self.f, self.m, self.n, self.subspaces, self.G)
        return HybridMachine(1, self.f, self.m, self.n, self.subspaces)


def generate(
    f: FunctionTable, m: int, n: int, g_mode: str, rng: np.random.Generator
) -> OtpInstance:
    """Sample ``m`` subspaces of dimension ``n/2`` and, if concrete, the table ``G``."""
    _check_sizes(f, m, n)
    if g_mode not in ("concrete", "purified"):
        raise ValueError("g_mode must be 'concrete' or 'purified'")
    subspaces = sample_subspaces(m, n, rng)
    G = None
    if g_mode == "concrete":
        G = rng.integers(0, f.nr, size=1 << (m * n))
    return OtpInstance(f, m, n, subspaces, g_mode, G, program_state(subspaces))


def otp_oracle_apply(s: StateVector, inst: OtpInstance) -> StateVector:
    """Apply the program's oracle to a state holding ``Qx``, ``Qv`` and ``Qu``."""
    return inst.machine().apply(s)


def evaluate(inst: OtpInstance, x: int, rng: np.random.Generator, *, machine=None) -> int:
    """Honest evaluation on input ``x``: returns the measured output.

    The collapsed joint state is kept in ``inst.residual`` and the program
    is marked consumed.
    """
    if inst.consumed:
        raise ProgramConsumed("program state already consumed")
    s = _evaluated_state(machine or inst.machine(), inst.program_state, x, inst.m, inst.n)
    y, s = measure(s, "Qu", rng)
    inst.consumed = True
    inst.residual = s
    return int(y)


def _evaluated_state(machine, program: StateVector, x: int, m: int, n: int) -> StateVector:
    s = new_state(RegisterLayout(machine.query_registers() + machine.internal_registers()), {"Qx": x})
    s = load_register(s, "Qv", program)
    s = apply_hadamard_block(s, "Qv", hadamard_mask(x, m, n))
    return machine.apply(s)


def exact_output_distribution(f: FunctionTable, m: int, n: int, subspaces: Sequence[Subspace], x: int) -> dict[int, float]:
    """Law of the honest output on ``x``, averaged over the table ``G``.

    Uses the purified oracle, which equals the average over uniform ``G``
    of the concrete one.
    """
    machine = HybridMachine(1, f, m, n, list(subspaces))
    s = _evaluated_state(machine, program_state(subspaces), x, m, n)
    return {int(y): p for y, p in sorted(outcome_distribution(s, "Qu").items())}


def ideal_output_distribution(f: FunctionTable, x: int) -> dict[int, float]:
    """Law of ``f(x; R)`` for uniform ``R``."""
    out: dict[int, float] = {}
    for r in range(f.nr):
        out[f(x, r)] = out.get(f(x, r), 0.0) + 1.0 / f.nr
    return out


def total_variation(p: dict[int, float], q: dict[int, float]) -> float:
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in set(p) | set(q))


def _correctness_trial(trial: int, *, seed: int, f: FunctionTable, m: int, n: int) -> tuple[int, int]:
    x = int(lane_rng(seed, "inputs", trial).integers(0, f.nx))
    inst = generate(f, m, n, "concrete", lane_rng(seed, "instances", trial))
    return x, evaluate(inst, x, lane_rng(seed, "measure", trial))


def correctness_experiment(f: FunctionTable, m: int, n: int, trials: int, seed: int, *, jobs: int = 1) -> dict:
    """Measured and predicted distance of honest outputs from ``f(x; R)``.

    Each trial draws fresh subspaces and a fresh table ``G`` and evaluates
    on a uniform input.  The prediction is the exact ``G``-averaged law,
    averaged over the inputs, for one subspace draw; it does not depend on
    the draw.  The estimate is the signed sum
    ``sum_y s_y (phat_y - q_y) / 2`` with ``s_y`` the sign of the predicted
    deviation, which is unbiased once the signs are right; its standard
    error follows from the multinomial covariance.
    """
    from .games import map_trials  # games imports this module

    subs = sample_subspaces(m, n, lane_rng(seed, "prediction"))
    laws = [exact_output_distribution(f, m, n, subs, x) for x in range(f.nx)]
    ideals = [ideal_output_distribution(f, x) for x in range(f.nx)]
    predicted = math.fsum(total_variation(p, q) for p, q in zip(laws, ideals)) / f.nx
    results = map_trials(partial(_correctness_trial, seed=seed, f=f, m=m, n=n), trials, jobs)
    # per trial the contribution s_y(x) * (1[y] - q_y(x)) / 2 has mean TV(x)
    contrib = np.empty(trials)
    for i, (x, y) in enumerate(results):
        law, ideal = laws[x], ideals[x]
        keys = set(law) | set(ideal)
        sign = {k: math.copysign(1.0, law.get(k, 0.0) - ideal.get(k, 0.0)) if law.get(k, 0.0) != ideal.get(k, 0.0) else 0.0 for k in keys}
        offset = math.fsum(sign[k] * ideal.get(k, 0.0) for k in keys)
        contrib[i] = 0.5 * (sign.get(y, 0.0) - offset)
    estimate = float(contrib.mean())
    sigma = float(contrib.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    return {
        "m": m,
        "n": n,
        "trials": trials,
        "estimate": estimate,
        "sigma": sigma,
        "predicted": predicted,
        "passed": abs(estimate - predicted) <= 3 * sigma,
        "fallback_weight": 2.0 ** (-n // 2),
    }


# simulator ----------------------------------------------------------------


@dataclass
class SimInstance:
    """The simulator's program: fresh subspace states plus its own oracle."""

    f: FunctionTable
    m: int
    n: int
    subspaces: list[Subspace]
    seq: SeqOracle
    program_state: StateVector
    reset_answer_flag: bool = True

    def machine(self) -> SimMachine:
        return SimMachine(self.f, self.m, self.n, self.subspaces, self.seq, self.reset_answer_flag)


class SimMachine(_Shared):
    """Oracle built only from single-effective-query access to ``f``.

    With ``reset_answer_flag`` (the default) the flag ``B`` set by the main
    query is cleared again by querying the SEQ oracle on ``x`` and XORing
    that probe's flag into ``B``.  A query on ``x`` is answered exactly
    when the main query was, so ``B`` returns to zero.  With the flag left
    set, ``B`` keeps a record of which branches were answered.
    """

    def __init__(
        self,
        f: FunctionTable,
        m: int,
        n: int,
        subspaces: Sequence[Subspace],
        seq: SeqOracle | None = None,
        reset_answer_flag: bool = True,
    ):
        super().__init__(f, m, n, list(subspaces))
        self.seq = seq or seq_new(f, prefix="DH")
        self.reset_answer_flag = reset_answer_flag

    def internal_registers(self) -> list[tuple[str, RegKind]]:
        return self.seq.registers() + [
            ("Vc", BitReg(self.m * self.n)),
            ("Px", BitReg(self.m)),
            ("Pu", BitReg(self.f.y_bits)),
            ("Pb", FlagReg()),
            ("B", FlagReg()),
        ]

    def _probe(self, s: StateVector, probe_of: Callable[[Label], int], middle) -> StateVector:
        lay = s.layout
        pi = lay.index("Px")
        load = _xor_into(pi, probe_of)
        s = apply_basis_map(s, load)
        s = seq_query(s, self.seq, "Px", "Pu", "Pb")
        s = middle(s)
        s = seq_query(s, self.seq, "Px", "Pu", "Pb")
        s = apply_basis_map(s, load)
        ui, bi = lay.index("Pu"), lay.index("Pb")
        if any(k[ui] or k[bi] for k in s.amps):
            raise RuntimeError("probe registers were not restored")
        return s

    def _probe_and_cache(self, s: StateVector) -> StateVector:
        lay = s.layout
        xi, vi, ci, bi = lay.index("Qx"), lay.index("Qv"), lay.index("Vc"), lay.index("Pb")
        cache = _cnot(vi, ci)

        def middle(t: StateVector) -> StateVector:
            return apply_basis_map(t, lambda l: l if l[bi] else cache(l))

        return self._probe(s, lambda l: flip_last(l[xi]), middle)

    def _reset_flag(self, s: StateVector) -> StateVector:
        lay = s.layout
        xi, bi, flag = lay.index("Qx"), lay.index("Pb"), lay.index("B")
        clear = _xor_into(flag, lambda l: l[bi])
        s = self._probe(s, lambda l: l[xi], lambda t: apply_basis_map(t, clear))
        if any(k[flag] for k in s.amps):
            raise RuntimeError("answer flag was not cleared")
        return s

    def _action(self, s: StateVector) -> StateVector:
        s = self._probe_and_cache(s)
        s = seq_query(s, self.seq, "Qx", "Qu", "B")
        if self.reset_answer_flag:
            s = self._reset_flag(s)
        return self._probe_and_cache(s)

    def _gate(self, s: StateVector) -> Callable[[Label], bool]:
        lay = s.layout
        xi, vi, ci = lay.index("Qx"), lay.index("Qv"), lay.index("Vc")
        chk = self.check
        return lambda l: l[ci] in (0, l[vi]) and chk.nonzero(l[xi], l[vi])

    def apply(self, s: StateVector, branch: Branch | None = None) -> StateVector:
        return apply_controlled(s, self._gate(s), self._action)


def simulate_generate(
    f: FunctionTable, m: int, n: int, rng: np.random.Generator, *, reset_answer_flag: bool = True
) -> SimInstance:
    """Sample subspaces exactly as :func:`generate` does and wire up the simulator."""
    _check_sizes(f, m, n)
    subspaces = sample_subspaces(m, n, rng)
    seq = seq_new(f, prefix="DH")
    return SimInstance(f, m, n, subspaces, seq, program_state(subspaces), reset_answer_flag)


def sim_oracle_apply(s: StateVector, sim: SimInstance) -> StateVector:
    return sim.machine().apply(s)


def hybrid_build(
    level: int,
    f: FunctionTable,
    m: int,
    n: int,
    rng: np.random.Generator,
    subspaces: Sequence[Subspace] | None = None,
) -> HybridMachine:
    """Machine for ``level``; level 0 draws its table ``G`` from ``rng``."""
    subspaces = list(subspaces) if subspaces is not None else sample_subspaces(m, n, rng)
    G = rng.integers(0, f.nr, size=1 << (m * n)) if level == 0 else None
    return HybridMachine(level, f, m, n, subspaces, G)


# comparison -----------------------------------------------------------------


def _machine_for(level, f, m, n, subspaces, G=None):
    if level == "sim":
        return SimMachine(f, m, n, subspaces)
    return HybridMachine(level, f, m, n, subspaces, G)


MAX_TABLE_ENUM = 1 << 12


def adversary_view(
    level,
    script: AdversaryScript,
    f: FunctionTable,
    m: int,
    n: int,
    subspaces: Sequence[Subspace],
    *,
    on_query: Callable[[HybridMachine, Branch], None] | None = None,
) -> DensityMatrix:
    """Exact reduced state of the adversary's registers after running ``script``.

    Measurements are deferred into tag registers.  For level 0 the state
    is averaged over every table ``G`` restricted to the vectors the
    oracle can ever read.
    """
    if level != 0:
        machine = _machine_for(level, f, m, n, subspaces)
        hook = None if on_query is None else (lambda br: on_query(machine, br))
        (br,) = run_script(script, machine, mode="defer", on_query=hook)
        return reduced_density(br.state, adversary_registers(script, machine, defer=True))
    chk = VectorCheck(subspaces)
    domain = chk.valid_vectors()
    count = f.nr ** len(domain)
    if count > MAX_TABLE_ENUM:
        raise ValueError(f"averaging over {count} tables is too expensive")
    rho = None
    G = np.zeros(1 << (m * n), dtype=np.int64)
    for values in itertools.product(range(f.nr), repeat=len(domain)):
        G[domain] = values
        machine = HybridMachine(0, f, m, n, subspaces, G)
        (br,) = run_script(script, machine, mode="defer")
        part = reduced_density(br.state, adversary_registers(script, machine, defer=True), 1.0 / count)
        rho = add_density(rho, part)
    return rho


def _early_return_weight(machine: _Shared, s: StateVector) -> float:
    lay = s.layout
    xi, vi = lay.index("Qx"), lay.index("Qv")
    chk = machine.check
    return math.fsum(abs(a) ** 2 for k, a in s.amps.items() if chk.early_return(k[xi], k[vi]))


def _distinguisher_bit(br: Branch) -> int:
    """First output tag nonzero (or the first measured tag if none are declared)."""
    if br.outputs:
        return int(br.tags[br.outputs[0]] != 0)
    if br.tags:
        return int(next(iter(br.tags.values())) != 0)
    return 0


def hybrid_compare(
    level_a,
    level_b,
    script: AdversaryScript,
    trials: int,
    rng: np.random.Generator,
    *,
    f: FunctionTable,
    m: int = 1,
    n: int = 4,
    subspace_filter: Callable[[list[Subspace]], bool] | None = None,
    sampled: bool | None = None,
) -> dict:
    """Compare two machines on ``script`` over ``trials`` shared subspace draws.

    Always reports the largest trace distance between the adversary's
    reduced states.  When ``sampled`` (the default for pairs other than the
    perfectly matching ones) it also runs the script with sampled
    measurements against both machines and reports the empirical advantage
    of the script's distinguisher bit, plus the mean exact weight of
    queries that pass the nonzero check but fail the strict one, summed
    over the queries of a run.
    """
    from .games import advantage_from_bits

    pair = (level_a, level_b)
    if sampled is None:
        sampled = pair not in PERFECT_PAIRS and pair != (7, "sim")
    distances, early, bits_a, bits_b = [], [], [], []
    for _ in range(trials):
        while True:
            subs = sample_subspaces(m, n, rng)
            if subspace_filter is None or subspace_filter(subs):
                break
        rho_a = adversary_view(level_a, script, f, m, n, subs)
        rho_b = adversary_view(level_b, script, f, m, n, subs)
        distances.append(trace_distance(rho_a, rho_b))
        if sampled:
            for level, bits in ((level_a, bits_a), (level_b, bits_b)):
                G = rng.integers(0, f.nr, size=1 << (m * n)) if level == 0 else None
                machine = _machine_for(level, f, m, n, subs, G)
                (br,) = run_script(script, machine, mode="sample", rng=rng)
                bits.append(_distinguisher_bit(br))
            early.append(_script_early_weight(script, HybridMachine(1, f, m, n, subs)))
    out = {"max_distance": max(distances), "distances": distances}
    if sampled:
        out.update(advantage_from_bits(bits_a, bits_b))
        out["early_return"] = float(np.mean(early))
        out["early_return_sd"] = float(np.std(early, ddof=1)) if len(early) > 1 else 0.0
    return out


class _EarlyWeightProbe:
    """Wraps a machine and accumulates the early-return weight seen at each query."""

    def __init__(self, inner: HybridMachine):
        self.inner = inner
        self.total = 0.0

    def query_registers(self):
        return self.inner.query_registers()

    def internal_registers(self):
        return self.inner.internal_registers()

    def prepare(self, s):
        return self.inner.prepare(s)

    def apply(self, s, branch=None):
        self.total += _early_return_weight(self.inner, s)
        return self.inner.apply(s, branch)


def _script_early_weight(script: AdversaryScript, machine: HybridMachine) -> float:
    probe = _EarlyWeightProbe(machine)
    run_script(script, probe, mode="defer")
    return probe.total
