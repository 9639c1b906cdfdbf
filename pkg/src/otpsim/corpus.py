"""Fixed adversary script corpora used by the invariant and hybrid checks.

``program_corpus`` targets machines with query registers ``Qx`` (one bit),
``Qv`` (``n`` bits) and ``Qu``.  ``seq_corpus`` targets the bare oracle on
``Qx``, ``Qu`` and ``Qb``.  Each corpus mixes hand-written scripts
(honest use, replay, superposition queries, partial measurements, register
shuffles) with scripts drawn by a seeded generator.
"""

from __future__ import annotations

import numpy as np

from .script import AdversaryScript, Instr, ops
from .tables import lane_rng

__all__ = ["program_corpus", "seq_corpus", "random_script", "CORPUS_SEED"]

CORPUS_SEED = 20240611


def _named(name: str, items: list[Instr], regs: dict[str, int] | None = None) -> AdversaryScript:
    return AdversaryScript.of(items, regs or {}, name)


def random_script(
    rng: np.random.Generator,
    regs: dict[str, int],
    aux: dict[str, int],
    queries: int,
    name: str,
    max_ops: int = 3,
) -> AdversaryScript:
    """``queries`` oracle calls separated by random single-register gates.

    Gates are drawn from Hadamard blocks, constant XORs, phases, copies
    and swaps between equal-width registers, and partial measurements.
    The script ends by measuring every query register.
    """
    names = list(regs) + list(aux)
    widths = {**regs, **aux}
    body: list[Instr] = []
    tag = 0

    def gate() -> Instr:
        nonlocal tag
        reg = names[int(rng.integers(len(names)))]
        w = widths[reg]
        mask = int(rng.integers(1, 1 << w))
        kind = int(rng.integers(6))
        if kind == 0:
            return Instr("HadamardBlock", reg=reg, mask=mask)
        if kind == 1:
            return Instr("XorConst", reg=reg, val=mask)
        if kind == 2:
            return Instr("Phase", reg=reg, val=mask)
        if kind == 5:
            tag += 1
            return Instr("Measure", reg=reg, tag=f"m{tag}", mask=mask)
        peers = [p for p in names if p != reg and widths[p] == w]
        if not peers:
            return Instr("HadamardBlock", reg=reg, mask=mask)
        peer = peers[int(rng.integers(len(peers)))]
        if kind == 3:
            return Instr("Copy", src=reg, dst=peer, mask=mask)
        return Instr("Swap", src=reg, dst=peer)

    for _ in range(queries):
        body += [gate() for _ in range(int(rng.integers(0, max_ops + 1)))]
        body.append(Instr("ApplyOracle"))
    body += [gate() for _ in range(int(rng.integers(0, max_ops + 1)))]
    finals = [f"out_{r}" for r in regs]
    body += [Instr("Measure", reg=r, tag=t) for r, t in zip(regs, finals)]
    body.append(Instr("OutputTags", tags=tuple(finals)))
    return AdversaryScript.of(body, aux, name)


def program_corpus(n: int = 4, y_bits: int = 2, *, random_count: int = 8, seed: int = CORPUS_SEED) -> list[AdversaryScript]:
    """Scripts for one-bit programs over ``F_2^n`` with ``y_bits`` outputs."""
    full = (1 << n) - 1
    half = (1 << (n // 2)) - 1
    w = {"W": y_bits}
    out = [
        _named("eval-0", ops(("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y"))),
        _named("eval-1", ops(("XorConst", "Qx", 1), ("HadamardBlock", "Qv"), ("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y"))),
        _named("superposed-x", ops(("HadamardBlock", "Qx"), ("ApplyOracle",), ("Measure", "Qu", "y"), ("Measure", "Qx", "x"), ("OutputTags", "y", "x"))),
        _named(
            "replay",
            ops(
                ("ApplyOracle",), ("Copy", "Qu", "W"), ("ApplyOracle",),
                ("XorConst", "Qx", 1), ("HadamardBlock", "Qv"), ("ApplyOracle",),
                ("Measure", "Qu", "y2"), ("Measure", "W", "y1"), ("OutputTags", "y2", "y1"),
            ),
            w,
        ),
        _named("uncompute-then-measure-program", ops(("ApplyOracle",), ("ApplyOracle",), ("Measure", "Qv", "v"), ("OutputTags", "v"))),
        _named("measure-program-first", ops(("Measure", "Qv", "v"), ("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y", "v"))),
        _named("phase-query", ops(("HadamardBlock", "Qu"), ("ApplyOracle",), ("HadamardBlock", "Qu"), ("Measure", "Qu", "y"), ("OutputTags", "y"))),
        _named("partial-program-measurement", ops(("Measure", "Qv", "v", half), ("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y", "v"))),
        _named(
            "copy-output-uncompute-measure-program",
            ops(("ApplyOracle",), ("Copy", "Qu", "W"), ("ApplyOracle",), ("Measure", "Qv", "v"), ("OutputTags", "v")),
            w,
        ),
        _named("swap-output", ops(("ApplyOracle",), ("Swap", "Qu", "W"), ("ApplyOracle",), ("Measure", "Qu", "y"), ("Measure", "W", "w"), ("OutputTags", "y", "w")), w),
        _named("phase-on-program", ops(("Phase", "Qv", full), ("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y"))),
        _named(
            "three-queries",
            ops(
                ("ApplyOracle",), ("HadamardBlock", "Qv"), ("XorConst", "Qx", 1), ("ApplyOracle",),
                ("HadamardBlock", "Qv", half), ("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y"),
            ),
        ),
        _named(
            "superposed-x-phase-kickback",
            ops(("HadamardBlock", "Qx"), ("HadamardBlock", "Qu"), ("ApplyOracle",), ("HadamardBlock", "Qx"), ("Measure", "Qx", "x"), ("OutputTags", "x")),
        ),
        _named("tampered-program", ops(("XorConst", "Qv", 1), ("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y"))),
        _named("wrong-basis", ops(("HadamardBlock", "Qv"), ("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y"))),
        _named("partial-hadamard", ops(("HadamardBlock", "Qv", 0b11), ("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y"))),
        _named(
            "full-budget",
            ops(*([("ApplyOracle",), ("HadamardBlock", "Qv"), ("XorConst", "Qx", 1)] * 8), ("Measure", "Qu", "y"), ("OutputTags", "y")),
        ),
        _named(
            "eval-measure-then-second",
            ops(
                ("ApplyOracle",), ("Measure", "Qu", "y1"), ("Copy", "Qu", "W"), ("Copy", "W", "Qu"),
                ("XorConst", "Qx", 1), ("HadamardBlock", "Qv"), ("ApplyOracle",), ("Measure", "Qu", "y2"), ("OutputTags", "y2"),
            ),
            w,
        ),
    ]
    regs = {"Qx": 1, "Qv": n, "Qu": y_bits}
    for i in range(random_count):
        rng = lane_rng(seed, "scripts", n, y_bits, i)
        out.append(random_script(rng, regs, {"W": y_bits, "Z": n}, 1 + i % 3, f"random-{i}"))
    return out


def seq_corpus(x_bits: int = 1, y_bits: int = 2, *, random_count: int = 10, seed: int = CORPUS_SEED) -> list[AdversaryScript]:
    """Scripts for the bare single-effective-query oracle on ``(Qx, Qu, Qb)``."""
    w = {"W": y_bits}
    xmask = (1 << x_bits) - 1
    out = [
        _named("query", ops(("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y"))),
        _named("query-superposed", ops(("HadamardBlock", "Qx"), ("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y"))),
        _named("uncompute", ops(("ApplyOracle",), ("ApplyOracle",), ("Measure", "Qb", "b"), ("OutputTags", "b"))),
        _named(
            "copy-then-other-input",
            ops(("ApplyOracle",), ("Copy", "Qu", "W"), ("ApplyOracle",), ("XorConst", "Qx", xmask), ("ApplyOracle",), ("Measure", "Qu", "y"), ("OutputTags", "y")),
            w,
        ),
        _named(
            "measured-then-other-input",
            ops(("ApplyOracle",), ("Measure", "Qu", "y1"), ("XorConst", "Qx", xmask), ("ApplyOracle",), ("Measure", "Qu", "y2"), ("OutputTags", "y2")),
        ),
        _named("phase-query", ops(("HadamardBlock", "Qu"), ("ApplyOracle",), ("HadamardBlock", "Qu"), ("Measure", "Qu", "y"), ("OutputTags", "y"))),
        _named(
            "superposed-twice",
            ops(("HadamardBlock", "Qx"), ("ApplyOracle",), ("HadamardBlock", "Qx"), ("ApplyOracle",), ("Measure", "Qx", "x"), ("OutputTags", "x")),
        ),
        _named("flag-kickback", ops(("HadamardBlock", "Qb"), ("Phase", "Qb", 1), ("ApplyOracle",), ("HadamardBlock", "Qb"), ("Measure", "Qb", "b"), ("OutputTags", "b"))),
        _named(
            "full-budget",
            ops(*([("HadamardBlock", "Qx"), ("ApplyOracle",), ("HadamardBlock", "Qu", 1)] * 8), ("Measure", "Qu", "y"), ("OutputTags", "y")),
        ),
        _named(
            "swap-and-requery",
            ops(("ApplyOracle",), ("Swap", "Qu", "W"), ("XorConst", "Qx", xmask), ("ApplyOracle",), ("Measure", "W", "w"), ("Measure", "Qu", "y"), ("OutputTags", "y", "w")),
            w,
        ),
    ]
    regs = {"Qx": x_bits, "Qu": y_bits, "Qb": 1}
    for i in range(random_count):
        rng = lane_rng(seed, "seq-scripts", x_bits, y_bits, i)
        out.append(random_script(rng, regs, {"W": y_bits, "C": 1}, 1 + i % 8, f"random-{i}"))
    return out
