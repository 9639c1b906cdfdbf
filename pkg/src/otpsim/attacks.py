"""Concrete attacks and small-scale checks of the compressed-oracle lemmas.

* gentle replay of a program whose output does not depend on ``r``;
* learning a partially deterministic function with two effective queries;
* blind and measure-one baselines for producing vectors in ``A`` and ``A^perp``;
* the measure-and-reprogram extractor and both sides of its inequality;
* chaining, collision, preimage-knowledge and consistency-projection
  experiments for compressed oracles.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .croracle import (
    FunctionRegisterSpec,
    co_prime_by,
    decomp_by,
    prepare_function_register,
    project_E,
    query,
    query_by,
)
from .games import FamilySpec, GameRecord, SeqMachine, SinglePhysicalMachine, map_trials
from .gf2 import contains, dual
from .otp import generate, hadamard_mask, program_state, sample_subspaces
from .qsim import (
    BitReg,
    DbReg,
    FlagReg,
    Label,
    RegKind,
    StateVector,
    _prune,
    apply_basis_map,
    measure,
    outcome_distribution,
)
from .script import AdversaryScript, Branch, Instr, QueryRefused, initial_state, load_register, ops, run_script
from .seq import seq_new, seq_query
from .tables import FunctionTable, lane_rng

__all__ = [
    "ReplayResult",
    "gentle_replay",
    "gentle_replay_experiment",
    "PartialDetParams",
    "PartialDetResult",
    "seq_learn_partial_det",
    "partial_det_experiment",
    "direct_product_baseline",
    "direct_product_prediction",
    "MrChoice",
    "MrAdversary",
    "ReprogrammableOracle",
    "measure_and_reprogram",
    "mr_lhs_exact",
    "mr_rhs_exact",
    "mr_exhaustive_check",
    "mr_empirical_check",
    "ChainMachine",
    "chaining_bound",
    "chaining_violation",
    "chaining_experiment",
    "CompressedMachine",
    "ConcreteMachine",
    "collision_experiment",
    "birthday_probability",
    "preimage_knowledge_experiment",
    "preimage_slack_bound",
    "PurifiedSeqMachine",
    "pairwise_E_experiment",
]


# gentle replay ----------------------------------------------------------------


@dataclass
class ReplayResult:
    y1: int
    y2: int
    success: bool
    fidelity: float


def _replay_parts(f: FunctionTable, x1: int, x2: int, oracle: str, n: int):
    """Scripts for the evaluate-copy-uncompute half and the second evaluation."""
    program = oracle == "otp"
    regs = {"W": f.y_bits} if program else {"W": f.y_bits, "Wb": 1}

    def ev(x: int) -> list[Instr]:
        out = [Instr("XorConst", reg="Qx", val=x)] if x else []
        if program and hadamard_mask(x, f.x_bits, n):
            out.append(Instr("HadamardBlock", reg="Qv", mask=hadamard_mask(x, f.x_bits, n)))
        return out + [Instr("ApplyOracle")]

    first = ev(x1) + ops(("Copy", "Qu", "W"))
    if not program:
        first += ops(("Copy", "Qb", "Wb"))
    first += list(reversed(ev(x1)))
    second = ev(x2) + ops(("Measure", "Qu", "y2"), ("Measure", "W", "y1"))
    if not program:
        second += ops(("Measure", "Qb", "b2"), ("Measure", "Wb", "b1"))
    return AdversaryScript.of(first, regs, "replay-first"), AdversaryScript.of(second, regs, "replay-second")


def _replay_machine(f: FunctionTable, oracle: str, n: int, rng: np.random.Generator):
    if oracle == "seq":
        return SeqMachine(f)
    if oracle == "otp":
        return generate(f, f.x_bits, n, "concrete", rng).machine()
    raise ValueError(f"unknown replay target {oracle!r}")


def _fidelity_ignoring(reference: StateVector, state: StateVector, ignore: Sequence[str]) -> float:
    """``<ref| Tr_ignore(|state><state|) |ref>`` for a reference with ``ignore`` at zero."""
    idx = [state.layout.index(r) for r in ignore]
    groups: dict[tuple, complex] = {}
    for label, a in state.amps.items():
        base = list(label)
        for i in idx:
            base[i] = 0
        aux = tuple(label[i] for i in idx)
        ref = reference.amps.get(tuple(base))
        if ref is not None:
            groups[aux] = groups.get(aux, 0) + ref.conjugate() * a
    return math.fsum(abs(v) ** 2 for v in groups.values())


def _replay_success(f: FunctionTable, x1: int, x2: int, tags: dict) -> bool:
    ok = tags["y1"] in set(f.table[x1].tolist()) and tags["y2"] in set(f.table[x2].tolist())
    if "b1" in tags:
        ok = ok and tags["b1"] == 1 and tags["b2"] == 1
    return bool(ok)


def gentle_replay(
    f: FunctionTable,
    x1: int,
    x2: int,
    rng: np.random.Generator,
    *,
    oracle: str = "seq",
    n: int = 4,
    machine=None,
) -> ReplayResult:
    """Evaluate on ``x1``, copy the output, uncompute, then evaluate on ``x2``.

    ``oracle`` is ``"seq"`` (the single-effective-query oracle) or ``"otp"``
    (a freshly generated program over ``F_2^n``).  ``fidelity`` compares the
    oracle and program registers after the uncompute step with their
    initial state.  Success means both outputs are values ``f`` can take
    on their inputs and, for the oracle, that both queries were answered.
    A prebuilt ``machine`` may be passed in place of a fresh one.
    """
    machine = machine or _replay_machine(f, oracle, n, rng)
    first, second = _replay_parts(f, x1, x2, oracle, n)
    start = initial_state(first, machine)
    (br,) = run_script(first, machine, mode="sample", rng=rng, state=start)
    fidelity = _fidelity_ignoring(start, br.state, [name for name, _ in first.registers])
    (br,) = run_script(second, machine, mode="sample", rng=rng, state=br.state)
    return ReplayResult(br.tags["y1"], br.tags["y2"], _replay_success(f, x1, x2, br.tags), fidelity)


def replay_success_probability(f: FunctionTable, x1: int, x2: int, machine, oracle: str, n: int = 4) -> float:
    """Exact success probability of :func:`gentle_replay` against ``machine``."""
    first, second = _replay_parts(f, x1, x2, oracle, n)
    script = AdversaryScript.of(first.instructions + second.instructions, dict(first.registers))
    return math.fsum(b.prob * _replay_success(f, x1, x2, b.tags) for b in run_script(script, machine, mode="branch"))


def _replay_trial(trial: int, *, seed: int, family: FamilySpec, oracle: str, n: int):
    f = family.sample(lane_rng(seed, "tables", trial))
    x1, x2 = (0, 1) if f.x_bits else (0, 0)
    machine = _replay_machine(f, oracle, n, lane_rng(seed, "subspaces", trial))
    res = gentle_replay(f, x1, x2, lane_rng(seed, "measure", trial), oracle=oracle, n=n, machine=machine)
    exact = replay_success_probability(f, x1, x2, machine, oracle, n)
    return int(res.success), res.fidelity, exact


def gentle_replay_experiment(
    family: FamilySpec, trials: int, seed: int, *, oracle: str = "seq", n: int = 4, jobs: int = 1
) -> GameRecord:
    """Repeat :func:`gentle_replay` on fresh functions of ``family``.

    The prediction is 1 for deterministic families and ``1/|R|`` for
    ``f(x; r) = r`` against the oracle; otherwise it is the mean exact
    success probability.  Against a full program only deterministic
    families are meaningful, since the program gives no signal that a
    query went unanswered.
    """
    if oracle == "otp" and family.kind not in ("deterministic", "constant"):
        raise ValueError("replay against a full program needs a deterministic family")
    results = map_trials(_ReplayTrial(seed, family, oracle, n), trials, jobs)
    exact = float(np.mean([r[2] for r in results]))
    if oracle == "seq" and family.kind in ("deterministic", "constant"):
        predicted, prov = 1.0, "trivial"
    elif oracle == "seq" and family.kind == "randomness":
        predicted, prov = 1.0 / (1 << family.r_bits), "derived"
    else:
        predicted, prov = exact, "enumeration"
    return GameRecord(
        game="gentle-replay",
        params={"family": asdict(family), "oracle": oracle, "n": n, "seed": seed},
        trials=trials,
        wins=sum(r[0] for r in results),
        predicted=predicted,
        provenance=prov,
        exact_mean=exact,
        extra={"min_fidelity": float(min(r[1] for r in results))},
    )


@dataclass(frozen=True)
class _ReplayTrial:
    seed: int
    family: FamilySpec
    oracle: str
    n: int

    def __call__(self, trial: int):
        return _replay_trial(trial, seed=self.seed, family=self.family, oracle=self.oracle, n=self.n)


# partially deterministic counterexample ---------------------------------------------


@dataclass(frozen=True)
class PartialDetParams:
    """``f_{a,k}(x; r) = (h(x), P[k, x, r])`` with ``n_bits``-wide halves.

    ``h(0) = a``, ``h(a) = k`` and ``h(x) = 0`` elsewhere.  ``P`` is a
    public table of ``2^n_bits`` keyed functions standing in for a keyed
    pseudorandom function, and ``k`` is the secret key identifier.
    """

    n_bits: int
    a: int
    key: int
    prf: np.ndarray = field(compare=False, repr=False)

    def __post_init__(self) -> None:
        size = 1 << self.n_bits
        if not 0 < self.a < size:
            raise ValueError("a must be a nonzero input")
        if self.prf.shape != (size, size, size):
            raise ValueError("the keyed table must have shape (keys, inputs, randomness)")

    @classmethod
    def sample(cls, n_bits: int, rng: np.random.Generator) -> PartialDetParams:
        size = 1 << n_bits
        a = int(rng.integers(1, size))
        key = int(rng.integers(0, size))
        prf = rng.integers(0, size, size=(size, size, size))
        return cls(n_bits, a, key, prf)

    def first_half(self, x: int, a: int | None = None, key: int | None = None) -> int:
        a = self.a if a is None else a
        key = self.key if key is None else key
        if x == 0:
            return a
        return key if x == a else 0

    def table(self, a: int | None = None, key: int | None = None) -> FunctionTable:
        """``f_{a,k}``, or the function with the given ``a`` and ``key`` substituted."""
        a = self.a if a is None else a
        key = self.key if key is None else key
        size = 1 << self.n_bits
        hi = np.array([self.first_half(x, a, key) for x in range(size)]).reshape(-1, 1)
        return FunctionTable(self.n_bits, self.n_bits, 2 * self.n_bits, (hi << self.n_bits) | self.prf[key])


@dataclass
class PartialDetResult:
    success: bool
    a_hat: int | None
    key_hat: int | None
    leftover_db_weight: float | None
    aborted: bool = False


def _query(machine, br: Branch) -> None:
    br.state = machine.apply(br.state, br)
    br.queries += 1


def seq_learn_partial_det(
    params: PartialDetParams,
    rng: np.random.Generator,
    *,
    mode: str = "seq",
    f: FunctionTable | None = None,
) -> PartialDetResult:
    """Recover ``f_{a,k}`` from two effective queries.

    Query ``x = 0`` and measure only the first half of the output (which
    is ``a`` for every ``r``), uncompute, query ``x = a`` and read the key
    identifier from the first half.  ``mode`` is ``"seq"`` or
    ``"single-physical"``; ``f`` replaces the attacked function (the
    reconstruction is still compared against it).
    """
    f = params.table() if f is None else f
    machine = SeqMachine(f) if mode == "seq" else SinglePhysicalMachine(f)
    nb = params.n_bits
    top = ((1 << nb) - 1) << nb
    br = Branch(initial_state(AdversaryScript.of([]), machine))
    _query(machine, br)
    a_hat, br.state = measure(br.state, "Qu", rng, top)
    a_hat >>= nb
    try:
        _query(machine, br)
    except QueryRefused:
        return PartialDetResult(False, a_hat, None, None, aborted=True)
    leftover = None
    if mode == "seq":
        d = br.state.layout.index(machine.seq.db_reg)
        leftover = math.fsum(abs(a) ** 2 for k, a in br.state.amps.items() if k[d])
    xi = br.state.layout.index("Qx")
    br.state = apply_basis_map(br.state, lambda l: l[:xi] + (l[xi] ^ a_hat,) + l[xi + 1 :])
    try:
        _query(machine, br)
    except QueryRefused:
        return PartialDetResult(False, a_hat, None, leftover, aborted=True)
    key_hat, br.state = measure(br.state, "Qu", rng, top)
    key_hat >>= nb
    ok = 0 < a_hat < (1 << nb) and bool((params.table(a_hat, key_hat).table == f.table).all())
    return PartialDetResult(ok, a_hat, key_hat, leftover)


def partial_det_experiment(
    trials: int, seed: int, *, n_bits: int = 4, mode: str = "seq", random_function: bool = False
) -> GameRecord:
    """Success rate of :func:`seq_learn_partial_det` over fresh parameters."""
    wins, aborts, worst = 0, 0, 0.0
    for t in range(trials):
        params = PartialDetParams.sample(n_bits, lane_rng(seed, "tables", t))
        f = None
        if random_function:
            f = FunctionTable.uniform(lane_rng(seed, "random-function", t), n_bits, n_bits, 2 * n_bits)
        res = seq_learn_partial_det(params, lane_rng(seed, "measure", t), mode=mode, f=f)
        wins += res.success
        aborts += res.aborted
        if res.leftover_db_weight is not None:
            worst = max(worst, res.leftover_db_weight)
    predicted = 1.0 if mode == "seq" and not random_function else 0.0
    return GameRecord(
        game="partial-det",
        params={"n_bits": n_bits, "mode": mode, "random_function": random_function, "seed": seed},
        trials=trials,
        wins=wins,
        predicted=predicted,
        provenance="derived" if mode == "seq" else "trivial",
        aborts=aborts,
        extra={"max_leftover_db_weight": worst},
    )


# direct-product baselines -------------------------------------------------------


def direct_product_prediction(n: int, strategy: str) -> float:
    """Success of producing ``v in A \\ {0}`` and ``w in A^perp \\ {0}`` for ``dim A = n/2``."""
    hit = ((1 << (n // 2)) - 1) / (1 << n)
    if strategy == "blind":
        return hit * hit
    if strategy == "measure-one-guess-other":
        return (1 - 2.0 ** (-(n // 2))) * hit
    raise ValueError(f"unknown strategy {strategy!r}")


def direct_product_baseline(n: int, strategy: str, trials: int, seed: int) -> GameRecord:
    """Sample a subspace per trial and try to output one nonzero vector from each side.

    ``blind`` guesses both vectors; ``measure-one-guess-other`` measures the
    program state to get ``v`` and guesses ``w``.
    """
    predicted = direct_product_prediction(n, strategy)
    wins = 0
    for t in range(trials):
        (A,) = sample_subspaces(1, n, lane_rng(seed, "subspaces", t))
        rng = lane_rng(seed, "measure", t)
        if strategy == "blind":
            v = int(rng.integers(0, 1 << n))
        else:
            v, _ = measure(program_state([A], "Qv"), "Qv", rng)
        w = int(rng.integers(0, 1 << n))
        wins += v != 0 and w != 0 and contains(A, v) and contains(dual(A), w)
    return GameRecord(
        game="direct-product",
        params={"n": n, "strategy": strategy, "seed": seed},
        trials=trials,
        wins=wins,
        predicted=predicted,
        provenance="derived",
    )


# measure-and-reprogram ------------------------------------------------------------


@dataclass(frozen=True)
class MrChoice:
    """Per output ``j``: ``(i_j, b_j)`` with ``i_j`` a query index, or ``(None, None)``."""

    picks: tuple[tuple[int | None, int | None], ...]

    def __post_init__(self) -> None:
        hit = [i for i, _ in self.picks if i is not None]
        if len(hit) != len(set(hit)):
            raise ValueError("query indices must be distinct")
        for i, b in self.picks:
            if (i is None) != (b is None) or (b is not None and b not in (0, 1)):
                raise ValueError("each pick is (index, bit) or (None, None)")

    @staticmethod
    def all(q: int, k: int) -> list[MrChoice]:
        options = [(None, None)] + [(i, b) for i in range(q) for b in (0, 1)]
        return [MrChoice(p) for p in itertools.product(options, repeat=k) if _distinct(p)]

    @staticmethod
    def sample(q: int, k: int, rng: np.random.Generator) -> MrChoice:
        choices = MrChoice.all(q, k)
        return choices[int(rng.integers(len(choices)))]


def _distinct(picks) -> bool:
    hit = [i for i, _ in picks if i is not None]
    return len(hit) == len(set(hit))


@dataclass(frozen=True)
class MrAdversary:
    """A script with oracle registers ``Qx``/``Qu`` whose output is ``x_tags`` and ``z_tag``."""

    script: AdversaryScript
    x_tags: tuple[str, ...]
    z_tag: str

    @property
    def q(self) -> int:
        return self.script.query_count()

    @property
    def k(self) -> int:
        return len(self.x_tags)


class ReprogrammableOracle:
    """Classical oracle ``x -> f[x]`` that answers ``g[x]`` on reprogrammed points.

    The reprogrammed set is ``preset`` plus the points recorded on the
    branch by ``Reprogram`` instructions.
    """

    def __init__(self, f: Sequence[int], g: Sequence[int], x_bits: int, y_bits: int, preset: Sequence[int] = ()):
        self.f, self.g = list(f), list(g)
        self.x_bits, self.y_bits = x_bits, y_bits
        self.preset = frozenset(preset)

    def query_registers(self) -> list[tuple[str, RegKind]]:
        return [("Qx", BitReg(self.x_bits)), ("Qu", BitReg(self.y_bits))]

    def internal_registers(self) -> list[tuple[str, RegKind]]:
        return []

    def prepare(self, s: StateVector) -> StateVector:
        return s

    def apply(self, s: StateVector, branch: Branch | None = None) -> StateVector:
        moved = self.preset | frozenset(branch.reprogrammed if branch is not None else ())
        table = [self.g[x] if x in moved else self.f[x] for x in range(1 << self.x_bits)]
        xi, ui = s.layout.index("Qx"), s.layout.index("Qu")
        return apply_basis_map(s, lambda l: l[:ui] + (l[ui] ^ table[l[xi]],) + l[ui + 1 :])


def _mr_script(adv: MrAdversary, choice: MrChoice) -> AdversaryScript:
    """The adversary's script with measure/reprogram steps spliced in."""
    hits = {i: (j, b) for j, (i, b) in enumerate(choice.picks) if i is not None}
    out: list[Instr] = []
    qi = 0
    for ins in adv.script.instructions:
        if ins.op != "ApplyOracle":
            out.append(ins)
            continue
        if qi in hits:
            j, b = hits[qi]
            tag = f"mr{j}"
            out.append(Instr("Measure", reg="Qx", tag=tag))
            if b == 0:
                out += [Instr("Reprogram", tag=tag), ins]
            else:
                out += [ins, Instr("Reprogram", tag=tag)]
        else:
            out.append(ins)
        qi += 1
    return AdversaryScript.of(out, dict(adv.script.registers), adv.script.name + "+mr")


def _mr_outputs(adv: MrAdversary, choice: MrChoice, tags: dict) -> tuple[tuple[int, ...], int]:
    xs = tuple(
        tags[f"mr{j}"] if choice.picks[j][0] is not None else tags[t] for j, t in enumerate(adv.x_tags)
    )
    return xs, tags[adv.z_tag]


def measure_and_reprogram(
    adv: MrAdversary,
    f: Sequence[int],
    g: Sequence[int],
    x_bits: int,
    y_bits: int,
    rng: np.random.Generator,
    *,
    choice: MrChoice | None = None,
) -> tuple[tuple[int, ...], int, MrChoice]:
    """Run the extractor once and return ``(x', z, choice)``.

    A uniformly random valid choice is drawn unless ``choice`` is given.
    Outputs with no measured query keep the adversary's own ``x_j``.
    """
    if adv.q > 3 or adv.k > 2:
        raise ValueError("the extractor is limited to q <= 3 and k <= 2")
    choice = MrChoice.sample(adv.q, adv.k, rng) if choice is None else choice
    oracle = ReprogrammableOracle(f, g, x_bits, y_bits)
    (br,) = run_script(_mr_script(adv, choice), oracle, mode="sample", rng=rng)
    xs, z = _mr_outputs(adv, choice, br.tags)
    return xs, z, choice


Relation = Callable[[tuple[int, ...], tuple[int, ...], int], bool]


def z_matches_first(xs, ys, z) -> bool:
    """The default relation: ``z`` equals the oracle value on the first output point."""
    return z == ys[0]


def mr_lhs_exact(adv, f, g, x_bits, y_bits, xstar, relation: Relation = z_matches_first) -> float:
    """``Pr[x' = x* and R(x', g(x'), z)]`` for the extractor, averaged over choices."""
    total = 0.0
    choices = MrChoice.all(adv.q, adv.k)
    oracle = ReprogrammableOracle(f, g, x_bits, y_bits)
    for choice in choices:
        for b in run_script(_mr_script(adv, choice), oracle, mode="branch"):
            xs, z = _mr_outputs(adv, choice, b.tags)
            if xs == tuple(xstar) and relation(xs, tuple(g[x] for x in xs), z):
                total += b.prob
    return total / len(choices)


def mr_rhs_exact(adv, f, g, x_bits, y_bits, xstar, relation: Relation = z_matches_first) -> float:
    """``Pr[x = x* and R(x, g(x), z)]`` for the adversary against ``f`` reprogrammed on ``x*``."""
    oracle = ReprogrammableOracle(f, g, x_bits, y_bits, preset=xstar)
    total = 0.0
    for b in run_script(adv.script, oracle, mode="branch"):
        xs = tuple(b.tags[t] for t in adv.x_tags)
        if xs == tuple(xstar) and relation(xs, tuple(g[x] for x in xs), b.tags[adv.z_tag]):
            total += b.prob
    return total


def _echo_adversaries(x_bits: int, y_bits: int) -> list[MrAdversary]:
    fin = ops(("Measure", "Qx", "x"), ("Measure", "Qu", "z"))
    scripts = [
        AdversaryScript.of(ops(("ApplyOracle",)) + fin, name="classical-echo-0"),
        AdversaryScript.of(ops(("XorConst", "Qx", (1 << x_bits) - 1), ("ApplyOracle",)) + fin, name="classical-echo-1"),
        AdversaryScript.of(ops(("HadamardBlock", "Qx"), ("ApplyOracle",)) + fin, name="superposed-echo"),
        AdversaryScript.of(
            ops(("HadamardBlock", "Qx"), ("HadamardBlock", "Qu"), ("ApplyOracle",), ("HadamardBlock", "Qu"), ("HadamardBlock", "Qx")) + fin,
            name="phase-echo",
        ),
    ]
    return [MrAdversary(s, ("x",), "z") for s in scripts]


def mr_exhaustive_check(x_bits: int = 1, y_bits: int = 1) -> dict:
    """Check the ``(2q+1)^{-2k}`` inequality for every table pair, target and echo adversary.

    Returns the number of cases, the smallest ``LHS - RHS / (2q+1)^{2k}``,
    the smallest ``LHS / RHS`` over cases with ``RHS > 0`` and whether
    every case holds.
    """
    tables = list(itertools.product(range(1 << y_bits), repeat=1 << x_bits))
    worst, ratio, cases = math.inf, math.inf, 0
    for adv in _echo_adversaries(x_bits, y_bits):
        factor = (2 * adv.q + 1) ** (2 * adv.k)
        for f, g in itertools.product(tables, repeat=2):
            for xstar in itertools.product(range(1 << x_bits), repeat=adv.k):
                lhs = mr_lhs_exact(adv, f, g, x_bits, y_bits, xstar)
                rhs = mr_rhs_exact(adv, f, g, x_bits, y_bits, xstar)
                worst = min(worst, lhs - rhs / factor)
                if rhs > 1e-12:
                    ratio = min(ratio, lhs / rhs)
                cases += 1
    return {"cases": cases, "min_margin": worst, "min_ratio": ratio, "passed": worst >= -1e-12}


def random_mr_adversary(rng: np.random.Generator, q: int, x_bits: int, y_bits: int) -> MrAdversary:
    """A superposition-query adversary with ``q`` queries and random gates in between."""
    body: list[Instr] = ops(("HadamardBlock", "Qx"))
    for _ in range(q):
        for reg, w in (("Qx", x_bits), ("Qu", y_bits)):
            if rng.integers(2):
                body.append(Instr("HadamardBlock", reg=reg, mask=int(rng.integers(1, 1 << w))))
            if rng.integers(2):
                body.append(Instr("Phase", reg=reg, val=int(rng.integers(1, 1 << w))))
        body.append(Instr("ApplyOracle"))
    body += ops(("Measure", "Qx", "x"), ("Measure", "Qu", "z"))
    return MrAdversary(AdversaryScript.of(body, name="random-superposition"), ("x",), "z")


def mr_empirical_check(
    trials: int, seed: int, *, q: int = 2, x_bits: int = 1, y_bits: int = 1
) -> dict:
    """Estimate both sides of the inequality for one random adversary and instance.

    The inequality needs pairwise distinct measured inputs; the share of
    trials meeting that condition is reported as ``conditioning_rate``.
    """
    setup = lane_rng(seed, "scripts", q)
    adv = random_mr_adversary(setup, q, x_bits, y_bits)
    f = [int(v) for v in setup.integers(0, 1 << y_bits, size=1 << x_bits)]
    g = [int(v) for v in setup.integers(0, 1 << y_bits, size=1 << x_bits)]
    xstar = (int(setup.integers(0, 1 << x_bits)),)
    factor = (2 * q + 1) ** 2
    lhs_wins = distinct = 0
    for t in range(trials):
        xs, z, _ = measure_and_reprogram(adv, f, g, x_bits, y_bits, lane_rng(seed, "measure", t))
        distinct += len(set(xs)) == len(xs)
        lhs_wins += xs == xstar and z_matches_first(xs, tuple(g[x] for x in xs), z)
    oracle = ReprogrammableOracle(f, g, x_bits, y_bits, preset=xstar)
    rhs_wins = 0
    for t in range(trials):
        (br,) = run_script(adv.script, oracle, mode="sample", rng=lane_rng(seed, "reference", t))
        xs = (br.tags["x"],)
        rhs_wins += xs == xstar and br.tags["z"] == g[xs[0]]
    lhs, rhs = lhs_wins / trials, rhs_wins / trials
    sigma = math.sqrt(lhs * (1 - lhs) / trials + (rhs * (1 - rhs) / trials) / factor**2)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "factor": factor,
        "sigma": sigma,
        "lhs_exact": mr_lhs_exact(adv, f, g, x_bits, y_bits, xstar),
        "rhs_exact": mr_rhs_exact(adv, f, g, x_bits, y_bits, xstar),
        "passed": lhs >= rhs / factor - 3 * sigma,
        "conditioning_rate": distinct / trials,
        "trials": trials,
    }


# compressed oracle machines ----------------------------------------------------------


class CompressedMachine:
    """A compressed random oracle on ``(Qx, Qu)`` with database ``D``."""

    def __init__(self, x_bits: int, y_bits: int):
        self.x_bits, self.y_bits = x_bits, y_bits

    def query_registers(self) -> list[tuple[str, RegKind]]:
        return [("Qx", BitReg(self.x_bits)), ("Qu", BitReg(self.y_bits))]

    def internal_registers(self) -> list[tuple[str, RegKind]]:
        return [("D", DbReg(self.x_bits, self.y_bits))]

    def prepare(self, s: StateVector) -> StateVector:
        return s

    def apply(self, s: StateVector, branch: Branch | None = None) -> StateVector:
        return query(s, "Qx", "Qu", "D")


class ConcreteMachine:
    """A fixed table on ``(Qx, Qu)``."""

    def __init__(self, table: Sequence[int], x_bits: int, y_bits: int):
        self.table, self.x_bits, self.y_bits = list(table), x_bits, y_bits

    def query_registers(self) -> list[tuple[str, RegKind]]:
        return [("Qx", BitReg(self.x_bits)), ("Qu", BitReg(self.y_bits))]

    def internal_registers(self) -> list[tuple[str, RegKind]]:
        return []

    def prepare(self, s: StateVector) -> StateVector:
        return s

    def apply(self, s: StateVector, branch: Branch | None = None) -> StateVector:
        xi, ui = s.layout.index("Qx"), s.layout.index("Qu")
        t = self.table
        return apply_basis_map(s, lambda l: l[:ui] + (l[ui] ^ t[l[xi]],) + l[ui + 1 :])


# chaining ----------------------------------------------------------------------------


def chaining_bound(t: int, y_bits: int) -> float:
    ny = 1 << y_bits
    return 4 * t * t * (2 / ny - 1 / ny**2)


class ChainMachine:
    """Composed compressed oracles.

    Plain form: ``Qx -> H(G(x))`` into ``Qz``.  Carried form:
    ``(Qxg, Qx) -> H(xg || G(x))``.  ``G`` writes into the work register
    ``Ty``, which the final ``G`` query clears again.
    """

    def __init__(self, x_bits: int, y_bits: int, z_bits: int, *, carried: bool = False, xg_bits: int = 1):
        self.x_bits, self.y_bits, self.z_bits = x_bits, y_bits, z_bits
        self.carried, self.xg_bits = carried, xg_bits if carried else 0

    def query_registers(self) -> list[tuple[str, RegKind]]:
        regs: list[tuple[str, RegKind]] = [("Qx", BitReg(self.x_bits))]
        if self.carried:
            regs.append(("Qxg", BitReg(self.xg_bits)))
        return regs + [("Qz", BitReg(self.z_bits))]

    def internal_registers(self) -> list[tuple[str, RegKind]]:
        return [
            ("DG", DbReg(self.x_bits, self.y_bits)),
            ("DH", DbReg(self.xg_bits + self.y_bits, self.z_bits)),
            ("Ty", BitReg(self.y_bits)),
        ]

    def prepare(self, s: StateVector) -> StateVector:
        return s

    def _h_input(self, s: StateVector) -> Callable[[Label], int]:
        ti = s.layout.index("Ty")
        if not self.carried:
            return lambda l: l[ti]
        gi, yb = s.layout.index("Qxg"), self.y_bits
        return lambda l: (l[gi] << yb) | l[ti]

    def apply(self, s: StateVector, branch: Branch | None = None) -> StateVector:
        s = query(s, "Qx", "Ty", "DG")
        s = query_by(s, "DH", self._h_input(s), "Qz")
        return query(s, "Qx", "Ty", "DG")


class _XorBasis:
    """Incremental GF(2) basis that reports coordinates of each new vector."""

    __slots__ = ("rows", "size")

    def __init__(self, rows: dict[int, tuple[int, int]] | None = None, size: int = 0):
        self.rows = dict(rows or {})
        self.size = size

    def copy(self) -> _XorBasis:
        return _XorBasis(self.rows, self.size)

    def coords(self, v: int) -> int:
        """Coordinates of ``v`` over the basis, extending the basis when needed."""
        combo = 0
        while v:
            lead = v.bit_length() - 1
            row = self.rows.get(lead)
            if row is None:
                self.rows[lead] = (v, combo ^ (1 << self.size))
                self.size += 1
                return 1 << (self.size - 1)
            v ^= row[0]
            combo ^= row[1]
        return combo


class SymmetricChainMachine(ChainMachine):
    """``ChainMachine`` simulated on orbits of ``GL(F_2^n)`` acting on ``Y``.

    Every step commutes with an invertible linear map applied to all
    ``Y``-valued data at once (recorded ``G`` outputs, ``H`` keys and
    ``Ty``), and the starting state is invariant, so amplitudes are
    constant on orbits.  The state keeps one canonical label per orbit
    with amplitude ``a * sqrt(orbit size)``; norms and event weights are
    therefore read off directly.  The cost no longer grows with ``|Y|``
    to a power, which makes ``|Y| = 256`` reachable.  In the carried form
    the map acts on the ``y`` part of each ``H`` key only.
    """

    def __init__(self, x_bits: int, y_bits: int, z_bits: int, *, carried: bool = False, xg_bits: int = 1):
        super().__init__(x_bits, y_bits, z_bits, carried=carried, xg_bits=xg_bits)
        self.size = 1 << y_bits

    def _orbit(self, rank: int) -> float:
        out = 1.0
        for i in range(rank):
            out *= self.size - (1 << i)
        return out

    def canonical(self, label: Label, gi: int, hi: int, ti: int) -> tuple[Label, float]:
        """Canonical orbit label and the orbit size.

        The ``Y`` data are rewritten in coordinates of the basis met while
        reading ``G`` outputs, then ``Ty``, then the ``H`` keys; the key
        order is the one giving the smallest result.  The orbit size is the
        number of injective linear maps from the span, divided by the
        number of those that fix the label (``H`` is a set of entries).
        """
        basis = _XorBasis()
        dg = tuple((x, basis.coords(y)) for x, y in label[gi])
        ty = basis.coords(label[ti])
        entries = label[hi]
        best: tuple | None = None
        maps: set[tuple[int, ...]] = set()
        rank = basis.size
        yb, ymask = self.y_bits, self.size - 1
        for perm in itertools.permutations(range(len(entries))):
            b = basis.copy()
            coords = [0] * len(entries)
            for i in perm:
                key = entries[i][0]
                coords[i] = ((key >> yb) << yb) | b.coords(key & ymask)
            dh = tuple(sorted((c, z) for c, (_, z) in zip(coords, entries)))
            if best is None or dh < best:
                best, rank, maps = dh, b.size, set()
            if dh == best:
                maps.add(tuple(coords))
        out = list(label)
        out[gi], out[ti], out[hi] = dg, ty, best
        return tuple(out), self._orbit(rank) / len(maps)

    def _fold(self, s: StateVector, *, to_orbit_sum: bool) -> StateVector:
        gi, hi, ti = s.layout.index("DG"), s.layout.index("DH"), s.layout.index("Ty")
        out: dict[Label, complex] = {}
        sizes: dict[Label, float] = {}
        for label, a in s.amps.items():
            c, size = self.canonical(label, gi, hi, ti)
            out[c] = out.get(c, 0j) + a
            sizes[c] = size
        if to_orbit_sum:
            return StateVector(s.layout, {c: a * math.sqrt(sizes[c]) for c, a in out.items()})
        return StateVector(s.layout, {c: a / math.sqrt(sizes[c]) for c, a in out.items()})

    def apply(self, s: StateVector, branch: Branch | None = None) -> StateVector:
        # orbit sums transform linearly: apply the step to each canonical
        # label and fold every image back onto its own canonical label
        s = self._fold(s, to_orbit_sum=True)
        xi = s.layout.index("Qx")
        g_input = lambda l: l[xi]  # noqa: E731
        for db, key, out in (("DG", g_input, "Ty"), ("DH", self._h_input(s), "Qz"), ("DG", g_input, "Ty")):
            s = self._fold_sum(decomp_by(s, db, key))
            s = co_prime_by(s, db, key, out)
            s = self._fold_sum(decomp_by(s, db, key))
        return self._fold(s, to_orbit_sum=False)

    def _fold_sum(self, s: StateVector) -> StateVector:
        gi, hi, ti = s.layout.index("DG"), s.layout.index("DH"), s.layout.index("Ty")
        out: dict[Label, complex] = {}
        for label, a in s.amps.items():
            c, _ = self.canonical(label, gi, hi, ti)
            out[c] = out.get(c, 0j) + a
        return _prune(s.layout, out)


def chaining_violation(s: StateVector, machine: ChainMachine) -> float:
    """Weight of databases where some ``H`` entry's ``y`` part is not a ``G`` output."""
    gi, hi = s.layout.index("DG"), s.layout.index("DH")
    ymask = (1 << machine.y_bits) - 1
    bad = 0.0
    for label, a in s.amps.items():
        outputs = {y for _, y in label[gi]}
        if any((key & ymask) not in outputs for key, _ in label[hi]):
            bad += abs(a) ** 2
    return bad


def chaining_scripts(t: int, x_bits: int, *, carried: bool, seed: int, count: int = 4) -> list[AdversaryScript]:
    """Superposition scripts with ``t`` queries: a fixed pattern plus seeded random ones.

    Random scripts put ``Qz`` in the Hadamard basis before every query
    (a query on a computational-basis ``Qz`` of zero leaves the state
    alone) and otherwise mix Hadamards, phases and constant XORs on the
    input registers, with an occasional Hadamard on ``Qz`` afterwards.
    """
    inputs = {"Qx": x_bits, **({"Qxg": 1} if carried else {})}
    base: list[Instr] = []
    for _ in range(t):
        base += [Instr("HadamardBlock", reg=r, mask=(1 << w) - 1) for r, w in inputs.items()]
        base += ops(("HadamardBlock", "Qz"), ("ApplyOracle",))
    out = [AdversaryScript.of(base, name=f"superposed-{t}")]
    for i in range(count - 1):
        rng = lane_rng(seed, "chaining-scripts", t, x_bits, int(carried), i)
        body: list[Instr] = []
        for _ in range(t):
            for r, w in inputs.items():
                mask = int(rng.integers(1, 1 << w))
                kind = int(rng.integers(3))
                op = ("HadamardBlock", "XorConst", "Phase")[kind]
                body.append(Instr(op, reg=r, mask=mask) if kind == 0 else Instr(op, reg=r, val=mask))
            if rng.integers(2):
                body.append(Instr("Phase", reg="Qz", val=1))
            body += ops(("HadamardBlock", "Qz"), ("ApplyOracle",))
            if rng.integers(2):
                body += ops(("HadamardBlock", "Qz"))
        out.append(AdversaryScript.of(body, name=f"random-{t}-{i}"))
    return out


def classical_chaining_script(t: int, x_bits: int) -> AdversaryScript:
    """``t`` classical queries, each output measured and moved aside."""
    body: list[Instr] = []
    for i in range(t):
        x = i % (1 << x_bits)
        pre = ops(("XorConst", "Qx", x)) if x else []
        body += pre + ops(("ApplyOracle",), ("Measure", "Qz", f"z{i}"), ("Swap", "Qz", f"W{i}")) + pre
    return AdversaryScript.of(body, {f"W{i}": 1 for i in range(t)}, f"classical-{t}")


def chaining_experiment(
    t: int,
    y_bits: int,
    *,
    x_bits: int = 1,
    carried: bool = False,
    classical: bool = False,
    seed: int = 0,
    count: int = 4,
    symmetric: bool = True,
) -> dict:
    """Exact ``Pr[not E_t]`` for each script, against ``4t^2 (2/|Y| - 1/|Y|^2)``.

    Measurements inside scripts are deferred, so the violation is read
    from the final state without sampling.  The orbit-reduced simulator is
    the default; ``symmetric=False`` runs the direct one.
    """
    cls = SymmetricChainMachine if symmetric else ChainMachine
    machine = cls(x_bits, y_bits, 1, carried=carried)
    scripts = [classical_chaining_script(t, x_bits)] if classical else chaining_scripts(t, x_bits, carried=carried, seed=seed, count=count)
    per_script = {}
    for sc in scripts:
        (br,) = run_script(sc, machine, mode="defer")
        per_script[sc.name] = chaining_violation(br.state, machine)
    bound = chaining_bound(t, y_bits)
    worst = max(per_script.values(), default=0.0)
    return {"t": t, "y_bits": y_bits, "carried": carried, "classical": classical, "symmetric": symmetric, "violations": per_script, "max_violation": worst, "bound": bound, "passed": worst <= bound + 1e-12}


# collisions ------------------------------------------------------------------------------


def birthday_probability(q: int, ny: int) -> float:
    p = 1.0
    for i in range(q):
        p *= 1 - i / ny
    return 1 - p


@lru_cache(maxsize=None)
def fresh_round_distribution(y_bits: int) -> tuple[tuple[int, int | None], ...] | tuple:
    """Exact joint law of ``(measured output, measured database slot)`` for one round.

    A round is a classical query on an input the database has never seen,
    with the output measured at once.  The slot is ``None`` when the
    database came back empty.  Computed by enumerating every measurement
    branch of the simulator; returns ``(outcomes, probabilities)``.
    """
    machine = CompressedMachine(1, y_bits)
    script = AdversaryScript.of(ops(("ApplyOracle",), ("Measure", "Qu", "y")))
    outcomes, probs = [], []
    for br in run_script(script, machine, mode="branch"):
        for D, p in outcome_distribution(br.state, "D").items():
            outcomes.append((br.tags["y"], D[0][1] if D else None))
            probs.append(br.prob * p)
    return tuple(outcomes), tuple(probs)


@lru_cache(maxsize=None)
def _round_cdf(y_bits: int) -> tuple[tuple, np.ndarray]:
    outcomes, probs = fresh_round_distribution(y_bits)
    return outcomes, np.cumsum(probs)


def _collision_trial(trial: int, *, seed: int, q: int, y_bits: int) -> int:
    """Collision in the database after ``q`` measured classical rounds on distinct inputs.

    Rounds on distinct inputs touch disjoint database slots, so the final
    database is the product of ``q`` independent single-round draws.
    """
    outcomes, cdf = _round_cdf(y_bits)
    picks = np.searchsorted(cdf, lane_rng(seed, "measure", trial).random(q) * cdf[-1], side="right")
    values = [outcomes[i][1] for i in picks if outcomes[i][1] is not None]
    return int(len(values) != len(set(values)))


def collision_experiment(q: int, y_bits: int, trials: int, seed: int, *, x_bits: int = 6, jobs: int = 1) -> GameRecord:
    """Classical queries on ``q`` distinct inputs with outputs measured, then the database.

    Records how often two database entries share an output.  The
    prediction is the birthday probability over the entries actually
    recorded: each round leaves its slot empty with probability
    ``1/|Y|`` and otherwise records a uniform value.  ``extra`` holds the
    lemma's bound ``8 q^3 / |Y|`` and the plain birthday probability for
    ``q`` entries.
    """
    if q > (1 << x_bits):
        raise ValueError("not enough distinct inputs")
    fn = _CollisionTrial(seed, q, y_bits)
    wins = sum(map_trials(fn, trials, jobs))
    ny = 1 << y_bits
    outcomes, probs = fresh_round_distribution(y_bits)
    p_empty = math.fsum(p for (_, slot), p in zip(outcomes, probs) if slot is None)
    exact = math.fsum(
        math.comb(q, j) * p_empty ** (q - j) * (1 - p_empty) ** j * birthday_probability(j, ny) for j in range(q + 1)
    )
    return GameRecord(
        game="collision",
        params={"q": q, "y_bits": y_bits, "x_bits": x_bits, "seed": seed},
        trials=trials,
        wins=wins,
        predicted=exact,
        provenance="enumeration",
        extra={"bound": 8 * q**3 / ny, "birthday": birthday_probability(q, ny), "p_empty_round": p_empty},
    )


@dataclass(frozen=True)
class _CollisionTrial:
    seed: int
    q: int
    y_bits: int

    def __call__(self, trial: int) -> int:
        return _collision_trial(trial, seed=self.seed, q=self.q, y_bits=self.y_bits)


# preimage knowledge -------------------------------------------------------------------------


def preimage_slack_bound(p_prime: float, q: int, k: int, x2_bits: int, y_bits: int) -> float:
    """``(sqrt(8 q^3 |X2|^k / |Y| + p') + sqrt(k |X2|^k / |Y|))^2``."""
    ratio = (1 << (x2_bits * k)) / (1 << y_bits)
    return (math.sqrt(8 * q**3 * ratio + p_prime) + math.sqrt(k * ratio)) ** 2


@dataclass(frozen=True)
class PreimageAdversary:
    """Builtin adversaries outputting one ``(x1, y)`` pair (``k = 1``).

    ``echo`` queries ``(x1, 0)`` and outputs the answer.  ``superposed``
    queries ``x1`` with a uniform second half.  ``blind`` makes no
    query and guesses ``y``.
    """

    strategy: str
    x1: int = 0

    def script(self, x2_bits: int, y_bits: int) -> AdversaryScript:
        base = self.x1 << x2_bits
        if self.strategy == "echo":
            return AdversaryScript.of(ops(("XorConst", "Qx", base), ("ApplyOracle",), ("Measure", "Qu", "y")) if base else ops(("ApplyOracle",), ("Measure", "Qu", "y")), name="echo")
        if self.strategy == "superposed":
            pre = ops(("XorConst", "Qx", base)) if base else []
            return AdversaryScript.of(pre + ops(("HadamardBlock", "Qx", (1 << x2_bits) - 1), ("ApplyOracle",), ("Measure", "Qu", "y")), name="superposed")
        if self.strategy == "blind":
            return AdversaryScript.of(ops(("PrepUniform", "C"), ("Measure", "C", "y")), {"C": y_bits}, "blind")
        raise ValueError(f"unknown preimage adversary {self.strategy!r}")


def preimage_p_prime(script: AdversaryScript, x1: int, x1_bits: int, x2_bits: int, y_bits: int) -> float:
    """Exact ``p'``: the measured database holds ``(x1 || x2, y)`` for the output ``y``.

    The compressed oracle has no table to sample, so ``p'`` is the same
    for every trial and is computed once by enumerating measurement branches.
    """
    block = range(x1 << x2_bits, (x1 + 1) << x2_bits)
    total = 0.0
    for br in run_script(script, CompressedMachine(x1_bits + x2_bits, y_bits), mode="branch"):
        y = br.tags["y"]
        for D, p in outcome_distribution(br.state, "D").items():
            if any(x in block and v == y for x, v in D):
                total += br.prob * p
    return total


def preimage_knowledge_experiment(
    adversary: PreimageAdversary | str,
    trials: int,
    seed: int,
    *,
    x1_bits: int = 1,
    x2_bits: int = 1,
    y_bits: int = 8,
) -> dict:
    """Estimate ``p`` with sampled tables and compute ``p'`` for the compressed oracle.

    ``p``: the output ``y`` has a preimage ``(x1, x2)`` for some ``x2``.
    ``p'``: the measured database holds such a preimage.  Passes when
    ``p <= (sqrt(8 q^3 |X2| / |Y| + p') + sqrt(|X2| / |Y|))^2 + 3 sigma``.
    """
    if isinstance(adversary, str):
        adversary = PreimageAdversary(adversary)
    xb = x1_bits + x2_bits
    script = adversary.script(x2_bits, y_bits)
    q = script.query_count()
    x1 = adversary.x1
    block = range(x1 << x2_bits, (x1 + 1) << x2_bits)
    hits = 0
    for t in range(trials):
        table = lane_rng(seed, "tables", t).integers(0, 1 << y_bits, size=1 << xb)
        (br,) = run_script(script, ConcreteMachine(table, xb, y_bits), mode="sample", rng=lane_rng(seed, "measure", t))
        hits += br.tags["y"] in {int(table[x]) for x in block}
    p = hits / trials
    pp = preimage_p_prime(script, x1, x1_bits, x2_bits, y_bits)
    sigma = math.sqrt(max(p * (1 - p), 1 / trials) / trials)
    bound = preimage_slack_bound(pp, q, 1, x2_bits, y_bits)
    exact_blind = 1 - (1 - 2.0**-y_bits) ** (1 << x2_bits) if q == 0 else None
    return {
        "adversary": adversary.strategy,
        "q": q,
        "p": p,
        "p_prime": pp,
        "bound": bound,
        "sigma": sigma,
        "p_exact_zero_query": exact_blind,
        "passed": p <= bound + 3 * sigma,
        "trials": trials,
    }


# consistency projection -----------------------------------------------------------------------


class PurifiedSeqMachine:
    """The single-effective-query oracle over a function register in uniform superposition."""

    def __init__(self, spec: FunctionRegisterSpec):
        self.spec = spec
        self.seq = seq_new(family=spec, prefix="H")

    def query_registers(self) -> list[tuple[str, RegKind]]:
        return [("Qx", BitReg(self.spec.x_bits)), ("Qu", BitReg(self.spec.y_bits)), ("Qb", FlagReg())]

    def internal_registers(self) -> list[tuple[str, RegKind]]:
        return self.seq.registers()

    def prepare(self, s: StateVector) -> StateVector:
        return load_register(s, self.seq.func_reg, prepare_function_register(self.spec, self.seq.func_reg))

    def apply(self, s: StateVector, branch: Branch | None = None) -> StateVector:
        return seq_query(s, self.seq, "Qx", "Qu", "Qb")

    def e_norm(self, s: StateVector) -> float:
        norm_sq, _ = project_E(s, self.seq.db_reg, self.seq.func_reg, self.spec)
        return math.sqrt(max(norm_sq, 0.0))


def pairwise_E_experiment(
    scripts: Sequence[AdversaryScript],
    *,
    spec: FunctionRegisterSpec | None = None,
    max_tables: int = 256,
) -> dict:
    """Smallest ``||E psi||`` over the start and every query of every script.

    The bound ``1 - 2 q sqrt(2/|R|)`` is reported next to each result.
    """
    spec = spec or FunctionRegisterSpec.all_functions(1, 1, 2)
    if len(spec.tables) > max_tables:
        raise ValueError(f"family has {len(spec.tables)} functions, limit is {max_tables}")
    machine = PurifiedSeqMachine(spec)
    results = []
    for sc in scripts:
        norms = [machine.e_norm(initial_state(sc, machine))]
        # on_query sees the state just before each query; add the final state
        finals = run_script(sc, machine, mode="defer", on_query=lambda br: norms.append(machine.e_norm(br.state)))
        norms += [machine.e_norm(br.state) for br in finals]
        q = sc.query_count()
        bound = 1 - 2 * q * math.sqrt(2 / (1 << spec.r_bits))
        results.append({"script": sc.name, "queries": q, "min_norm": min(norms), "final_norm": norms[-1], "bound": bound, "passed": min(norms) >= bound - 1e-12})
    return {"results": results, "min_norm": min(r["min_norm"] for r in results), "passed": all(r["passed"] for r in results)}
