"""Security games: learning games, the weak operational game, and the
indistinguishability game for PRF-style programs.

Adversaries are scripts plus a classical decoder.  Their random choices
are measurements of registers prepared in uniform superposition, so one
adversary can be run with sampled measurements (the game itself) or with
every measurement branch followed.  The second mode gives its exact win
probability against the sampled instance, and averaging that over trials
gives the prediction the empirical rate is checked against.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from .otp import SimMachine, generate, hadamard_mask, sample_subspaces
from .qsim import BitReg, FlagReg, RegKind, StateVector, apply_basis_map, apply_hadamard_block
from .script import AdversaryScript, Branch, Instr, QueryRefused, ops, run_script
from .seq import seq_new, seq_query
from .tables import FunctionTable, lane_rng

__all__ = [
    "OracleMode",
    "FamilySpec",
    "GameRecord",
    "wilson_ci",
    "advantage_from_bits",
    "estimate_advantage",
    "SinglePhysicalMachine",
    "SeqMachine",
    "build_machine",
    "LearningAdversary",
    "PrfAdversary",
    "LEARNING_ADVERSARIES",
    "PRF_ADVERSARIES",
    "run_learning_game",
    "run_weak_operational_game",
    "run_prf_indistinguishability_game",
    "map_trials",
]


class OracleMode(str, Enum):
    SINGLE_PHYSICAL = "single-physical"
    SEQ = "seq"
    FULL_OTP = "full-otp"
    SIM = "sim"


# statistics -----------------------------------------------------------------


def wilson_ci(wins: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("need at least one trial")
    ci = binomtest(int(wins), int(trials)).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


def advantage_from_bits(bits_a: Sequence[int], bits_b: Sequence[int]) -> dict:
    """|mean(a) - mean(b)| with a normal-approximation 95% interval."""
    if not len(bits_a) or not len(bits_b):
        raise ValueError("need at least one trial per experiment")
    pa, pb = float(np.mean(bits_a)), float(np.mean(bits_b))
    sd = math.sqrt(pa * (1 - pa) / len(bits_a) + pb * (1 - pb) / len(bits_b))
    adv = abs(pa - pb)
    return {"advantage": adv, "p_a": pa, "p_b": pb, "sigma": sd, "ci": (max(0.0, adv - 1.96 * sd), adv + 1.96 * sd)}


def estimate_advantage(
    exp_a: Callable[[np.random.Generator], int],
    exp_b: Callable[[np.random.Generator], int],
    trials: int,
    rng: np.random.Generator,
) -> dict:
    """Empirical distinguishing advantage between two one-bit experiments."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    bits_a = [int(exp_a(rng)) for _ in range(trials)]
    bits_b = [int(exp_b(rng)) for _ in range(trials)]
    return advantage_from_bits(bits_a, bits_b)


@dataclass
class GameRecord:
    """Outcome of a batch of game trials, with the value it is checked against.

    ``relation`` says how the estimate must relate to ``predicted``:
    ``"eq"`` (within ``k_sigma`` standard errors), ``"le"`` or ``"ge"``.
    """

    game: str
    params: dict
    trials: int
    wins: int
    predicted: float | None = None
    provenance: str = ""
    relation: str = "eq"
    k_sigma: float = 3.0
    aborts: int = 0
    flagged: int = 0
    exact_mean: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 <= self.wins <= self.trials:
            raise ValueError("wins must lie between 0 and trials")

    @property
    def estimate(self) -> float:
        return self.wins / self.trials

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_ci(self.wins, self.trials)

    @property
    def sigma(self) -> float:
        p = self.predicted if self.predicted is not None else self.estimate
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)

    @property
    def passed(self) -> bool | None:
        if self.predicted is None:
            return None
        slack = self.k_sigma * self.sigma + 1e-12
        diff = self.estimate - self.predicted
        if self.relation == "le":
            return diff <= slack
        if self.relation == "ge":
            return diff >= -slack
        return abs(diff) <= slack

    def to_json(self) -> dict:
        out = asdict(self)
        lo, hi = self.ci
        out.update(estimate=self.estimate, ci=[lo, hi], sigma=self.sigma, passed=self.passed)
        return out


# families ---------------------------------------------------------------------


@dataclass(frozen=True)
class FamilySpec:
    """How to draw the function for each trial.

    ``kind`` is one of ``uniform``, ``constant``, ``randomness``
    (``f(x; r) = r``), ``revealing`` (``f(x; r) = r || T[x, r]``, output
    ``r_bits + t_bits`` wide) or ``deterministic`` (``f(x; r) = T[x]``).
    """

    kind: str
    x_bits: int
    r_bits: int
    y_bits: int = 0
    t_bits: int = 0

    def __post_init__(self) -> None:
        if self.kind not in {"uniform", "constant", "randomness", "revealing", "deterministic"}:
            raise ValueError(f"unknown family {self.kind!r}")

    @property
    def out_bits(self) -> int:
        if self.kind == "randomness":
            return self.r_bits
        if self.kind == "revealing":
            return self.r_bits + self.t_bits
        return self.y_bits

    def sample(self, rng: np.random.Generator) -> FunctionTable:
        x, r, y = self.x_bits, self.r_bits, self.y_bits
        if self.kind == "uniform":
            return FunctionTable.uniform(rng, x, r, y)
        if self.kind == "constant":
            return FunctionTable.constant(int(rng.integers(0, 1 << y)), x, r, y)
        if self.kind == "randomness":
            return FunctionTable.randomness(x, r)
        if self.kind == "revealing":
            return FunctionTable.revealing(rng, x, r, self.t_bits)
        return FunctionTable.deterministic(rng.integers(0, 1 << y, size=1 << x), x, r, y)

    def r_of(self, y: int) -> int:
        """The randomness an adversary reads off an output (0 if the family hides it)."""
        if self.kind == "revealing":
            return y >> self.t_bits
        if self.kind == "randomness":
            return y
        return 0


# oracle machines for the learning games -------------------------------------------


class SinglePhysicalMachine:
    """Answers one query with ``f(., r)`` for a hidden uniform ``r``, then refuses.

    ``r`` is held in superposition in an internal register, which has the
    same statistics as sampling it and lets exact enumeration see it.
    """

    def __init__(self, f: FunctionTable):
        self.f = f

    def query_registers(self) -> list[tuple[str, RegKind]]:
        return [("Qx", BitReg(self.f.x_bits)), ("Qu", BitReg(self.f.y_bits))]

    def internal_registers(self) -> list[tuple[str, RegKind]]:
        return [("R", BitReg(self.f.r_bits))]

    def prepare(self, s: StateVector) -> StateVector:
        return apply_hadamard_block(s, "R") if self.f.r_bits else s

    def apply(self, s: StateVector, branch: Branch | None = None) -> StateVector:
        if branch is not None and branch.queries >= 1:
            raise QueryRefused("the single physical query was already used")
        lay = s.layout
        xi, ui, ri = lay.index("Qx"), lay.index("Qu"), lay.index("R")
        f = self.f
        return apply_basis_map(s, lambda l: l[:ui] + (l[ui] ^ f(l[xi], l[ri]),) + l[ui + 1 :])


class SeqMachine:
    """The single-effective-query oracle on registers ``(Qx, Qu, Qb)``."""

    def __init__(self, f: FunctionTable):
        self.f = f
        self.seq = seq_new(f, prefix="H")

    def query_registers(self) -> list[tuple[str, RegKind]]:
        return [("Qx", BitReg(self.f.x_bits)), ("Qu", BitReg(self.f.y_bits)), ("Qb", FlagReg())]

    def internal_registers(self) -> list[tuple[str, RegKind]]:
        return self.seq.registers()

    def prepare(self, s: StateVector) -> StateVector:
        return s

    def apply(self, s: StateVector, branch: Branch | None = None) -> StateVector:
        return seq_query(s, self.seq, "Qx", "Qu", "Qb")


def build_machine(mode: OracleMode, f: FunctionTable, rng: np.random.Generator, n: int = 4):
    """Oracle for ``mode``; program-based modes use ``m = f.x_bits`` subspaces of F_2^n."""
    mode = OracleMode(mode)
    if mode is OracleMode.SINGLE_PHYSICAL:
        return SinglePhysicalMachine(f)
    if mode is OracleMode.SEQ:
        return SeqMachine(f)
    if mode is OracleMode.FULL_OTP:
        return generate(f, f.x_bits, n, "concrete", rng).machine()
    return SimMachine(f, f.x_bits, n, sample_subspaces(f.x_bits, n, rng))


# adversaries ------------------------------------------------------------------


@dataclass(frozen=True)
class GameContext:
    mode: OracleMode
    family: FamilySpec
    n: int = 4

    @property
    def program(self) -> bool:
        return self.mode in (OracleMode.FULL_OTP, OracleMode.SIM)


def eval_ops(ctx: GameContext, x: int) -> list[Instr]:
    """Honest evaluation on the classical input ``x``."""
    out = [Instr("XorConst", reg="Qx", val=x)] if x else []
    if ctx.program:
        mask = hadamard_mask(x, ctx.family.x_bits, ctx.n)
        if mask:
            out.append(Instr("HadamardBlock", reg="Qv", mask=mask))
    return out + [Instr("ApplyOracle")]


def uneval_ops(ctx: GameContext, x: int) -> list[Instr]:
    """Run :func:`eval_ops` backwards (the oracle is its own inverse)."""
    return list(reversed(eval_ops(ctx, x)))


def _second_input(ctx: GameContext, x1: int, r1: int) -> tuple[int, int]:
    if ctx.family.x_bits:
        return x1 ^ 1, 0
    return x1, r1 ^ 1


@dataclass(frozen=True)
class LearningAdversary:
    """A builtin adversary for the two-pair learning game.

    ``strategy`` names the behaviour:

    ``constant``            evaluate once and report the output for two inputs.
    ``measure-then-guess``  evaluate at 0, guess ``r_1`` at random, guess the second pair.
    ``echo-one-guess-one``  as above with ``r_1 = 0``.
    ``honest-eval-then-guess``  as above, reading ``r_1`` off the output when the family exposes it.
    ``replay``              evaluate at 0, copy the output, uncompute, evaluate at 1.
    ``forgery``             measure the program, query classically with that vector at
                            ``x = 0``, then with a uniformly random vector at ``x = 1``.
    """

    strategy: str

    def script(self, ctx: GameContext) -> AdversaryScript:
        fam = ctx.family
        ybits = fam.out_bits
        s = self.strategy
        if s == "constant":
            return AdversaryScript.of(eval_ops(ctx, 0) + ops(("Measure", "Qu", "y1")), name=s)
        if s in ("measure-then-guess", "echo-one-guess-one", "honest-eval-then-guess"):
            body = eval_ops(ctx, 0) + ops(("Measure", "Qu", "y1"))
            regs = {"Cy": ybits}
            if s == "measure-then-guess" and fam.r_bits:
                body += ops(("PrepUniform", "Cr"), ("Measure", "Cr", "r1"))
                regs["Cr"] = fam.r_bits
            body += ops(("PrepUniform", "Cy"), ("Measure", "Cy", "y2"))
            return AdversaryScript.of(body, regs, s)
        if s == "replay":
            body = (
                eval_ops(ctx, 0)
                + ops(("Copy", "Qu", "W"))
                + uneval_ops(ctx, 0)
                + eval_ops(ctx, 1)
                + ops(("Measure", "Qu", "y2"), ("Measure", "W", "y1"))
            )
            return AdversaryScript.of(body, {"W": ybits}, s)
        if s == "forgery":
            if not ctx.program or fam.x_bits != 1:
                raise ValueError("the forgery adversary needs a one-bit program")
            n = ctx.n
            body = ops(
                ("Measure", "Qv", "v"),
                ("ApplyOracle",),
                ("Measure", "Qu", "y1"),
                ("Copy", "Qu", "Wy"),
                ("Copy", "Wy", "Qu"),
                ("Copy", "Qv", "Wv"),
                ("Copy", "Wv", "Qv"),
                ("PrepUniform", "Ww"),
                ("Measure", "Ww", "w"),
                ("Copy", "Ww", "Qv"),
                ("XorConst", "Qx", 1),
                ("ApplyOracle",),
                ("Measure", "Qu", "y2"),
            )
            return AdversaryScript.of(body, {"Wy": ybits, "Wv": n, "Ww": n}, s)
        raise ValueError(f"unknown learning adversary {s!r}")

    def decode(self, tags: dict, ctx: GameContext) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
        fam = ctx.family
        s = self.strategy
        y1 = tags["y1"]
        if s == "constant":
            x2, r2 = _second_input(ctx, 0, 0)
            return (0, 0, y1), (x2, r2, y1)
        if s in ("measure-then-guess", "echo-one-guess-one", "honest-eval-then-guess"):
            r1 = tags.get("r1", 0) if s != "honest-eval-then-guess" else fam.r_of(y1)
            x2, r2 = _second_input(ctx, 0, r1)
            return (0, r1, y1), (x2, r2, tags["y2"])
        y2 = tags["y2"]
        if s == "replay":
            return (0, fam.r_of(y1), y1), (1 if fam.x_bits else 0, fam.r_of(y2), y2)
        return (0, fam.r_of(y1), y1), (1, fam.r_of(y2), y2)


LEARNING_ADVERSARIES = (
    "constant",
    "measure-then-guess",
    "echo-one-guess-one",
    "honest-eval-then-guess",
    "replay",
    "forgery",
)


def learning_win(f: FunctionTable, outputs) -> tuple[bool, bool]:
    """``(win, flagged)``; equal input pairs lose and are flagged."""
    (x1, r1, y1), (x2, r2, y2) = outputs
    if (x1, r1) == (x2, r2):
        return False, True
    ok = all(0 <= x < f.nx and 0 <= r < f.nr for x, r in ((x1, r1), (x2, r2)))
    return bool(ok and f(x1, r1) == y1 and f(x2, r2) == y2), False


def _learning_trial(
    trial: int, *, seed: int, adversary: LearningAdversary, ctx: GameContext, exact: bool
) -> tuple[int, int, int, float | None]:
    """One trial: ``(win, aborted, flagged, exact win probability)``."""
    f = ctx.family.sample(lane_rng(seed, "tables", trial))
    machine = build_machine(ctx.mode, f, lane_rng(seed, "subspaces", trial), ctx.n)
    script = adversary.script(ctx)
    try:
        (br,) = run_script(script, machine, mode="sample", rng=lane_rng(seed, "measure", trial))
    except QueryRefused:
        return 0, 1, 0, (0.0 if exact else None)
    win, flagged = learning_win(f, adversary.decode(br.tags, ctx))
    p = None
    if exact:
        p = 0.0
        for b in run_script(script, machine, mode="branch"):
            p += b.prob * learning_win(f, adversary.decode(b.tags, ctx))[0]
    return int(win), 0, int(flagged), p


def map_trials(fn: Callable[[int], tuple], trials: int, jobs: int = 1) -> list[tuple]:
    """``[fn(0), ..., fn(trials - 1)]``, fanned out over ``jobs`` processes.

    Each trial draws from its own seed lanes, so the result does not depend
    on ``jobs``.
    """
    if jobs <= 1 or trials < 2 * jobs:
        return [fn(t) for t in range(trials)]
    chunk = max(1, trials // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(trials), chunksize=chunk))


def run_learning_game(
    family: FamilySpec,
    adversary: LearningAdversary | str,
    mode: OracleMode | str,
    trials: int,
    seed: int,
    *,
    n: int = 4,
    predicted: float | None = None,
    provenance: str = "",
    relation: str = "eq",
    exact: bool = False,
    jobs: int = 1,
    game: str = "learning",
) -> GameRecord:
    """Play the two-pair learning game ``trials`` times.

    With ``exact`` the adversary's exact win probability against each
    sampled instance is also computed.  If no ``predicted`` value is
    given, the mean of those probabilities becomes the prediction.
    """
    if isinstance(adversary, str):
        adversary = LearningAdversary(adversary)
    ctx = GameContext(OracleMode(mode), family, n)
    fn = partial(_learning_trial, seed=seed, adversary=adversary, ctx=ctx, exact=exact)
    results = map_trials(fn, trials, jobs)
    wins = sum(r[0] for r in results)
    exact_mean = float(np.mean([r[3] for r in results])) if exact else None
    if predicted is None and exact_mean is not None:
        predicted, provenance = exact_mean, provenance or "enumeration"
    return GameRecord(
        game=game,
        params={"family": asdict(family), "adversary": adversary.strategy, "mode": ctx.mode.value, "n": n, "seed": seed},
        trials=trials,
        wins=wins,
        predicted=predicted,
        provenance=provenance,
        relation=relation,
        aborts=sum(r[1] for r in results),
        flagged=sum(r[2] for r in results),
        exact_mean=exact_mean,
    )


def run_weak_operational_game(
    family: FamilySpec,
    adversary: LearningAdversary | str,
    builder: OracleMode | str,
    trials: int,
    seed: int,
    **kwargs,
) -> GameRecord:
    """The learning game played against a full program (real or simulated)."""
    builder = OracleMode(builder)
    if builder not in (OracleMode.FULL_OTP, OracleMode.SIM):
        raise ValueError("the weak operational game needs a program builder")
    return run_learning_game(family, adversary, builder, trials, seed, game="weak-operational", **kwargs)


# indistinguishability game ----------------------------------------------------------


@dataclass(frozen=True)
class PrfAdversary:
    """Builtin adversaries for the two-challenge indistinguishability game.

    ``random-guess``    fixed pairs, both bits guessed.
    ``honest-compare``  evaluates at 0, answers the first challenge by
                        comparing it with its own output, guesses the second.
    ``replay``          evaluates at 0 and 1 by gentle replay and compares both.
    """

    strategy: str

    def script(self, ctx: GameContext) -> AdversaryScript:
        fam = ctx.family
        ybits = fam.out_bits
        coins = ops(("PrepUniform", "C"), ("Measure", "C", "coins"))
        if self.strategy == "random-guess":
            return AdversaryScript.of(coins, {"C": 2}, self.strategy)
        if self.strategy == "honest-compare":
            return AdversaryScript.of(eval_ops(ctx, 0) + ops(("Measure", "Qu", "e1")) + coins, {"C": 2}, self.strategy)
        if self.strategy == "replay":
            body = (
                eval_ops(ctx, 0)
                + ops(("Copy", "Qu", "W"))
                + uneval_ops(ctx, 0)
                + eval_ops(ctx, 1)
                + ops(("Measure", "Qu", "e2"), ("Measure", "W", "e1"))
            )
            return AdversaryScript.of(body, {"W": ybits}, self.strategy)
        raise ValueError(f"unknown indistinguishability adversary {self.strategy!r}")

    def plan(self, tags: dict, ctx: GameContext):
        """``(pairs, answers)``; an answer is ``("compare", e)`` or ``("guess", bit)``."""
        fam = ctx.family
        coins = tags.get("coins", 0)
        if self.strategy == "random-guess":
            return ((0, 0), (1, 0)), (("guess", coins >> 1 & 1), ("guess", coins & 1))
        e1 = tags["e1"]
        if self.strategy == "honest-compare":
            return ((0, fam.r_of(e1)), (1, 0)), (("compare", e1), ("guess", coins & 1))
        e2 = tags["e2"]
        return ((0, fam.r_of(e1)), (1, fam.r_of(e2))), (("compare", e1), ("compare", e2))


PRF_ADVERSARIES = ("random-guess", "honest-compare", "replay")


def _answer(kind, value, y):
    return value if kind == "guess" else int(y != value)


def _prf_exact(f: FunctionTable, pairs, answers) -> float:
    """Win probability over the challenger's coins for a fixed adversary plan."""
    if pairs[0] == pairs[1]:
        return 0.0
    p = 1.0
    for (x, r), (kind, value) in zip(pairs, answers):
        if kind == "guess":
            p *= 0.5
        else:
            real_ok = f(x, r) == value
            p *= 0.5 * real_ok + 0.5 * (1 - 1 / f.ny)
    return p


def _prf_trial(trial: int, *, seed: int, adversary: PrfAdversary, ctx: GameContext, exact: bool):
    f = ctx.family.sample(lane_rng(seed, "tables", trial))
    machine = build_machine(ctx.mode, f, lane_rng(seed, "subspaces", trial), ctx.n)
    script = adversary.script(ctx)
    rng = lane_rng(seed, "measure", trial)
    (br,) = run_script(script, machine, mode="sample", rng=rng)
    pairs, answers = adversary.plan(br.tags, ctx)
    challenger = lane_rng(seed, "challenge", trial)
    win = pairs[0] != pairs[1]
    for (x, r), (kind, value) in zip(pairs, answers):
        b = int(challenger.integers(0, 2))
        y = f(x, r) if b == 0 else int(challenger.integers(0, f.ny))
        win = win and _answer(kind, value, y) == b
    p = None
    if exact:
        p = sum(b.prob * _prf_exact(f, *adversary.plan(b.tags, ctx)) for b in run_script(script, machine, mode="branch"))
    return int(win), 0, 0, p


def run_prf_indistinguishability_game(
    family: FamilySpec,
    adversary: PrfAdversary | str,
    builder: OracleMode | str,
    trials: int,
    seed: int,
    *,
    n: int = 4,
    predicted: float | None = None,
    provenance: str = "",
    exact: bool = True,
    jobs: int = 1,
) -> GameRecord:
    """Challenger flips two bits; each challenge is the real output or a uniform value."""
    if isinstance(adversary, str):
        adversary = PrfAdversary(adversary)
    ctx = GameContext(OracleMode(builder), family, n)
    fn = partial(_prf_trial, seed=seed, adversary=adversary, ctx=ctx, exact=exact)
    results = map_trials(fn, trials, jobs)
    wins = sum(r[0] for r in results)
    exact_mean = float(np.mean([r[3] for r in results])) if exact else None
    if predicted is None and exact_mean is not None:
        predicted, provenance = exact_mean, provenance or "enumeration"
    return GameRecord(
        game="prf-indistinguishability",
        params={"family": asdict(family), "adversary": adversary.strategy, "builder": ctx.mode.value, "n": n, "seed": seed},
        trials=trials,
        wins=wins,
        predicted=predicted,
        provenance=provenance,
        exact_mean=exact_mean,
    )
