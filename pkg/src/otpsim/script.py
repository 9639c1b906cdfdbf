"""Replayable adversary scripts and the interpreter that runs them.

A script is a list of instructions acting on the oracle's query registers
and on any auxiliary registers it declares.  ``ApplyOracle`` hands the
joint state to a *machine*, meaning any object with the :class:`Machine`
methods.  Measurements can be handled in three ways:

``sample``
    draw an outcome with the supplied generator (one branch).
``defer``
    copy the measured bits into a fresh tag register with a CNOT.  The
    run stays a pure state and the tag registers count as
    adversary-visible, so two machines can be compared exactly.
``branch``
    follow every outcome and return the full list of weighted branches.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .qsim import (
    BitReg,
    RegisterLayout,
    RegKind,
    StateVector,
    apply_basis_map,
    apply_hadamard_block,
    apply_phase,
    new_state,
    outcome_distribution,
    project,
    split_outcomes,
)

__all__ = [
    "Instr",
    "AdversaryScript",
    "Machine",
    "Branch",
    "ScriptError",
    "QueryRefused",
    "run_script",
    "script_layout",
    "initial_state",
    "tag_register",
    "load_register",
    "DEFAULT_BUDGET",
    "OPS",
    "ops",
    "adversary_registers",
]

DEFAULT_BUDGET = 8

OPS = {
    "PrepConst",
    "PrepUniform",
    "HadamardBlock",
    "XorConst",
    "Copy",
    "Swap",
    "Phase",
    "ApplyOracle",
    "Measure",
    "OutputTags",
    "Reprogram",
}


class ScriptError(ValueError):
    """Malformed script or a script that broke one of its own preconditions."""


class QueryRefused(RuntimeError):
    """Raised by machines that refuse further queries (a one-query oracle)."""


def _parse_value(val) -> int | None:
    """Script constants are bit strings (``"0110"``), ``0x``-prefixed hex, or ints."""
    if val is None or isinstance(val, int):
        return val
    text = str(val).strip()
    if text.lower().startswith("0x"):
        return int(text, 16)
    if text and set(text) <= {"0", "1"}:
        return int(text, 2)
    raise ScriptError(f"cannot parse constant {val!r}")


@dataclass(frozen=True)
class Instr:
    op: str
    reg: str | None = None
    val: int | None = None
    tag: str | None = None
    mask: int | None = None
    src: str | None = None
    dst: str | None = None
    tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.op not in OPS:
            raise ScriptError(f"unknown instruction {self.op!r}")
        needs_reg = {"PrepConst", "PrepUniform", "HadamardBlock", "XorConst", "Phase", "Measure"}
        if self.op in needs_reg and not self.reg:
            raise ScriptError(f"{self.op} needs a register")
        if self.op in {"PrepConst", "XorConst", "Phase"} and self.val is None:
            raise ScriptError(f"{self.op} needs a value")
        if self.op in {"Copy", "Swap"} and not (self.src and self.dst):
            raise ScriptError(f"{self.op} needs src and dst")
        if self.op in {"Measure", "Reprogram"} and not self.tag:
            raise ScriptError(f"{self.op} needs a tag")

    def to_json(self) -> dict:
        out: dict = {"op": self.op}
        for key in ("reg", "tag", "src", "dst"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.val is not None:
            out["val"] = hex(self.val)
        if self.mask is not None:
            out["mask"] = hex(self.mask)
        if self.tags:
            out["tags"] = list(self.tags)
        return out

    @classmethod
    def from_json(cls, data: dict) -> Instr:
        unknown = set(data) - {"op", "reg", "val", "tag", "mask", "src", "dst", "tags"}
        if unknown:
            raise ScriptError(f"unknown instruction fields {sorted(unknown)}")
        return cls(
            op=data["op"],
            reg=data.get("reg"),
            val=_parse_value(data.get("val")),
            tag=data.get("tag"),
            mask=_parse_value(data.get("mask")),
            src=data.get("src"),
            dst=data.get("dst"),
            tags=tuple(data.get("tags", ())),
        )


@dataclass(frozen=True)
class AdversaryScript:
    """An instruction list plus the widths of the auxiliary registers it uses."""

    instructions: tuple[Instr, ...]
    registers: tuple[tuple[str, int], ...] = ()
    name: str = ""

    @classmethod
    def of(cls, instructions: Iterable[Instr], registers: dict[str, int] | None = None, name: str = ""):
        return cls(tuple(instructions), tuple(sorted((registers or {}).items())), name)

    def query_count(self) -> int:
        return sum(1 for ins in self.instructions if ins.op == "ApplyOracle")

    def measure_tags(self) -> list[tuple[str, str, int | None]]:
        return [(i.tag, i.reg, i.mask) for i in self.instructions if i.op == "Measure"]

    def output_tags(self) -> tuple[str, ...]:
        for ins in reversed(self.instructions):
            if ins.op == "OutputTags":
                return ins.tags
        return ()

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "registers": dict(self.registers),
            "instructions": [i.to_json() for i in self.instructions],
        }

    @classmethod
    def from_json(cls, data) -> AdversaryScript:
        if isinstance(data, list):
            return cls(tuple(Instr.from_json(d) for d in data))
        unknown = set(data) - {"name", "registers", "instructions"}
        if unknown:
            raise ScriptError(f"unknown script fields {sorted(unknown)}")
        return cls.of(
            (Instr.from_json(d) for d in data["instructions"]),
            {k: int(v) for k, v in data.get("registers", {}).items()},
            data.get("name", ""),
        )

    @classmethod
    def load(cls, path: str | Path) -> AdversaryScript:
        path = Path(path)
        script = cls.from_json(json.loads(path.read_text()))
        return script if script.name else replace(script, name=path.stem)


class Machine(Protocol):
    """What the interpreter needs from an oracle implementation."""

    def query_registers(self) -> list[tuple[str, RegKind]]: ...

    def internal_registers(self) -> list[tuple[str, RegKind]]: ...

    def prepare(self, s: StateVector) -> StateVector: ...

    def apply(self, s: StateVector, branch: "Branch") -> StateVector: ...


@dataclass
class Branch:
    """One line of a script run: the state plus the classical record so far."""

    state: StateVector
    prob: float = 1.0
    tags: dict[str, int] = field(default_factory=dict)
    queries: int = 0
    reprogrammed: list[int] = field(default_factory=list)
    outputs: tuple[str, ...] = ()

    def fork(self, state: StateVector, prob: float) -> Branch:
        return Branch(state, prob, dict(self.tags), self.queries, list(self.reprogrammed), self.outputs)

    def output_values(self) -> tuple[int, ...]:
        return tuple(self.tags[t] for t in self.outputs)


def tag_register(tag: str) -> str:
    return f"T:{tag}"


def script_layout(script: AdversaryScript, machine: Machine, defer: bool = False) -> RegisterLayout:
    regs: list[tuple[str, RegKind]] = list(machine.query_registers())
    regs += [(name, BitReg(w)) for name, w in script.registers]
    if defer:
        widths = dict((n, k.width) for n, k in regs)
        seen = set()
        for tag, reg, _ in script.measure_tags():
            if tag in seen:
                raise ScriptError(f"tag {tag!r} measured twice")
            seen.add(tag)
            if reg not in widths:
                raise ScriptError(f"measurement of unknown register {reg!r}")
            regs.append((tag_register(tag), BitReg(widths[reg])))
    regs += list(machine.internal_registers())
    return RegisterLayout(regs)


def adversary_registers(script: AdversaryScript, machine: Machine, defer: bool = False) -> list[str]:
    """Registers visible to the adversary: query, auxiliary and (when deferred) tag registers."""
    names = [n for n, _ in machine.query_registers()] + [n for n, _ in script.registers]
    if defer:
        names += [tag_register(t) for t, _, _ in script.measure_tags()]
    return names


def load_register(s: StateVector, reg: str, content: StateVector) -> StateVector:
    """Replace the all-zero content of ``reg`` by the single-register state ``content``."""
    i = s.layout.index(reg)
    if len(content.layout) != 1:
        raise ValueError("content must be a single-register state")
    if s.layout.kind(reg) != content.layout.regs[0][1]:
        raise ValueError("register kinds differ")
    out = {}
    for label, a in s.amps.items():
        if label[i] != 0:
            raise ScriptError(f"register {reg!r} is not in its zero state")
        for (v,), b in content.amps.items():
            out[label[:i] + (v,) + label[i + 1 :]] = a * b
    return StateVector(s.layout, out)


def initial_state(script: AdversaryScript, machine: Machine, defer: bool = False) -> StateVector:
    layout = script_layout(script, machine, defer)
    return machine.prepare(new_state(layout))


def _require_zero(s: StateVector, reg: str) -> None:
    i = s.layout.index(reg)
    if any(label[i] for label in s.amps):
        raise ScriptError(f"register {reg!r} must be zero before preparation")


def _set_bits(label: tuple, i: int, value: int) -> tuple:
    return label[:i] + (value,) + label[i + 1 :]


def _apply_unitary(s: StateVector, ins: Instr) -> StateVector:
    lay = s.layout
    op = ins.op
    if op in {"PrepConst", "XorConst"}:
        if op == "PrepConst":
            _require_zero(s, ins.reg)
        i = lay.index(ins.reg)
        if ins.val >> lay.width(ins.reg):
            raise ScriptError(f"constant does not fit {ins.reg!r}")
        return apply_basis_map(s, lambda l: _set_bits(l, i, l[i] ^ ins.val))
    if op == "PrepUniform":
        _require_zero(s, ins.reg)
        return apply_hadamard_block(s, ins.reg, ins.mask)
    if op == "HadamardBlock":
        return apply_hadamard_block(s, ins.reg, ins.mask)
    if op == "Phase":
        i = lay.index(ins.reg)
        return apply_phase(s, lambda l: -1.0 if (l[i] & ins.val).bit_count() & 1 else 1.0)
    if op in {"Copy", "Swap"}:
        a, b = lay.index(ins.src), lay.index(ins.dst)
        if lay.width(ins.src) != lay.width(ins.dst):
            raise ScriptError(f"{op} needs registers of equal width")
        if a == b:
            raise ScriptError(f"{op} needs two distinct registers")
        if op == "Copy":
            mask = -1 if ins.mask is None else ins.mask
            return apply_basis_map(s, lambda l: _set_bits(l, b, l[b] ^ (l[a] & mask)))

        def swap(l):
            new = list(l)
            new[a], new[b] = l[b], l[a]
            return tuple(new)

        return apply_basis_map(s, swap)
    raise ScriptError(f"{op} is not a unitary instruction")


def run_script(
    script: AdversaryScript,
    machine: Machine,
    *,
    mode: str = "sample",
    rng: np.random.Generator | None = None,
    budget: int = DEFAULT_BUDGET,
    on_query: Callable[[Branch], None] | None = None,
    state: StateVector | None = None,
    min_prob: float = 1e-15,
) -> list[Branch]:
    """Execute ``script`` against ``machine``.

    ``on_query`` is called with the branch after every oracle call, which
    is where invariant checks hook in.  Returns one branch for ``sample``
    and ``defer`` and all outcome branches for ``branch``.
    """
    if mode not in {"sample", "defer", "branch"}:
        raise ValueError(f"unknown measurement mode {mode!r}")
    if mode == "sample" and rng is None:
        raise ValueError("sampling mode needs a generator")
    if script.query_count() > budget:
        raise ScriptError(f"script makes {script.query_count()} queries, budget is {budget}")
    defer = mode == "defer"
    if state is None:
        state = initial_state(script, machine, defer)
    branches = [Branch(state)]
    instructions = script.instructions
    skip = False
    for pos, ins in enumerate(instructions):
        if skip:
            skip = False
            continue
        if mode == "sample" and _is_coin(ins, instructions[pos + 1 : pos + 2]):
            # a uniform register measured at once is a classical coin flip
            (br,) = branches
            value = int(rng.integers(0, 1 << br.state.layout.width(ins.reg)))
            _require_zero(br.state, ins.reg)
            br.state = _apply_unitary(br.state, Instr("XorConst", reg=ins.reg, val=value))
            br.tags[instructions[pos + 1].tag] = value
            skip = True
            continue
        nxt: list[Branch] = []
        for br in branches:
            if ins.op == "ApplyOracle":
                br.state = machine.apply(br.state, br)
                br.queries += 1
                if on_query is not None:
                    on_query(br)
                nxt.append(br)
            elif ins.op == "OutputTags":
                br.outputs = tuple(ins.tags)
                nxt.append(br)
            elif ins.op == "Reprogram":
                br.reprogrammed.append(br.tags[ins.tag])
                nxt.append(br)
            elif ins.op == "Measure":
                nxt.extend(_measure(br, ins, mode, rng, min_prob))
            else:
                br.state = _apply_unitary(br.state, ins)
                nxt.append(br)
        branches = nxt
    return branches


def _is_coin(ins: Instr, following: Sequence[Instr]) -> bool:
    if ins.op != "PrepUniform" or ins.mask is not None or not following:
        return False
    nxt = following[0]
    return nxt.op == "Measure" and nxt.reg == ins.reg and nxt.mask is None


def _measure(br: Branch, ins: Instr, mode: str, rng, min_prob: float) -> list[Branch]:
    s = br.state
    if mode == "defer":
        src = s.layout.index(ins.reg)
        dst = s.layout.index(tag_register(ins.tag))
        mask = -1 if ins.mask is None else ins.mask
        br.state = apply_basis_map(s, lambda l: _set_bits(l, dst, l[dst] ^ (l[src] & mask)))
        return [br]
    if mode == "sample":
        dist = outcome_distribution(s, ins.reg, ins.mask)
        outcomes = list(dist)
        cdf = np.cumsum([dist[o] for o in outcomes])
        j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        outcome = outcomes[min(j, len(outcomes) - 1)]
        br.state = project(s, ins.reg, outcome, ins.mask).normalized()
        br.tags[ins.tag] = outcome
        return [br]
    out = []
    for outcome, (p, collapsed) in split_outcomes(s, ins.reg, ins.mask).items():
        if p * br.prob < min_prob:
            continue
        child = br.fork(collapsed, br.prob * p)
        child.tags[ins.tag] = outcome
        out.append(child)
    return out


def ops(*items: Sequence) -> list[Instr]:
    """Shorthand: ``ops(("XorConst", "Qx", 1), ("ApplyOracle",))``."""
    built = []
    for item in items:
        op, *rest = item
        kw: dict = {}
        if op in {"PrepConst", "XorConst", "Phase"}:
            kw = {"reg": rest[0], "val": rest[1]}
        elif op in {"PrepUniform", "HadamardBlock"}:
            kw = {"reg": rest[0], "mask": rest[1] if len(rest) > 1 else None}
        elif op == "Measure":
            kw = {"reg": rest[0], "tag": rest[1], "mask": rest[2] if len(rest) > 2 else None}
        elif op in {"Copy", "Swap"}:
            kw = {"src": rest[0], "dst": rest[1], "mask": rest[2] if len(rest) > 2 else None}
        elif op == "OutputTags":
            kw = {"tags": tuple(rest)}
        elif op == "Reprogram":
            kw = {"tag": rest[0]}
        built.append(Instr(op, **kw))
    return built
