"""Compressed random oracle acting on a database-valued register.

A database is a sorted tuple of ``(input, output)`` pairs with unique
inputs.  Missing inputs read as ``None``, written ⊥ in comments.  The range
is ``{0, 1}**out_w``, so its size is a power of two.

The three primitive maps follow the usual recipe:

* ``decomp`` moves the x-slot of the database between the recorded form
  and the lazily sampled form.  It fixes slot vectors orthogonal to the
  uniform superposition, swaps the uniform superposition with ⊥, and is
  its own inverse.
* ``co_prime`` XORs the recorded value ``D(x)`` into the answer register
  and does nothing when ``D(x)`` is ⊥.
* ``query = decomp . co_prime . decomp``.

Every operator takes the query input either from a named register or, via
the ``*_by`` variants, from any function of the basis label.  That lets a
caller feed a concatenation of registers to the oracle.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .gf2 import from_hex, to_hex
from .qsim import PRUNE, BitReg, DbReg, Label, RegisterLayout, StateVector, _prune

__all__ = [
    "db_get",
    "db_set",
    "db_remove",
    "db_to_json",
    "db_from_json",
    "decomp",
    "decomp_by",
    "co_prime",
    "co_prime_by",
    "query",
    "query_by",
    "switch_rename",
    "FunctionRegisterSpec",
    "prepare_function_register",
    "project_E",
    "max_entries",
    "entry_histogram",
]

Database = tuple


def db_get(D: Database, x: int) -> int | None:
    """``D(x)``, or ``None`` when ``x`` is not recorded."""
    for xx, y in D:
        if xx == x:
            return y
        if xx > x:
            return None
    return None


def db_remove(D: Database, x: int) -> Database:
    return tuple(e for e in D if e[0] != x)


def db_set(D: Database, x: int, y: int) -> Database:
    """Database with ``x`` mapped to ``y``; any previous entry for ``x`` is replaced."""
    entries = list(db_remove(D, x))
    bisect.insort(entries, (x, y))
    return tuple(entries)


def db_to_json(D: Database, in_w: int, out_w: int) -> dict:
    return {"in_w": in_w, "out_w": out_w, "entries": [[to_hex(x, in_w), to_hex(y, out_w)] for x, y in D]}


def db_from_json(data: dict) -> Database:
    in_w, out_w = int(data["in_w"]), int(data["out_w"])
    entries = sorted((from_hex(x, in_w), from_hex(y, out_w)) for x, y in data["entries"])
    if len({x for x, _ in entries}) != len(entries):
        raise ValueError("database inputs must be unique")
    return tuple(entries)


def _db_kind(s: StateVector, db_reg: str) -> tuple[int, DbReg]:
    d = s.layout.index(db_reg)
    kind = s.layout.regs[d][1]
    if not isinstance(kind, DbReg):
        raise TypeError(f"register {db_reg!r} is not a database register")
    return d, kind


def _reader(s: StateVector, reg: str, width: int) -> Callable[[Label], int]:
    i = s.layout.index(reg)
    kind = s.layout.regs[i][1]
    if not isinstance(kind, BitReg) or kind.width != width:
        raise ValueError(f"register {reg!r} must be a {width}-bit register")
    return lambda label: label[i]


def decomp_by(s: StateVector, db_reg: str, x_of: Callable[[Label], int]) -> StateVector:
    """Decompress the slot ``x_of(label)`` of the database in every component.

    Per slot, write the amplitudes as ``a_bot`` (no entry) and ``a_y``.
    With ``N = |Y|`` and ``t = sum_y a_y / sqrt(N)`` the map is
    ``a_y -> a_y + (a_bot - t) / sqrt(N)`` and ``a_bot -> t``.
    ``x_of`` must not read the database register itself.
    """
    d, kind = _db_kind(s, db_reg)
    size = kind.range_size
    inv = 1.0 / math.sqrt(size)
    groups: dict[tuple, list] = {}
    for label, a in s.amps.items():
        x = x_of(label)
        D = label[d]
        y = db_get(D, x)
        if y is None:
            key = (label, x)
            slot = groups.setdefault(key, [0j, {}])
            slot[0] += a
        else:
            base = label[:d] + (db_remove(D, x),) + label[d + 1 :]
            slot = groups.setdefault((base, x), [0j, {}])
            slot[1][y] = slot[1].get(y, 0j) + a
    out: dict[Label, complex] = {}
    for (base, x), (a_bot, ay) in groups.items():
        t = sum(ay.values()) * inv
        shift = (a_bot - t) * inv
        D0 = base[d]
        head, tail = base[:d], base[d + 1 :]
        if abs(t) >= PRUNE:
            out[base] = out.get(base, 0j) + t
        if abs(shift) >= PRUNE:
            ys: Sequence[int] = range(size)
        else:
            ys = list(ay)
        for y in ys:
            val = ay.get(y, 0j) + shift
            if abs(val) >= PRUNE:
                lab = head + (db_set(D0, x, y),) + tail
                out[lab] = out.get(lab, 0j) + val
    return _prune(s.layout, out, s.norm())


def decomp(s: StateVector, x_reg: str, db_reg: str) -> StateVector:
    """Decompress the database slot named by the value of ``x_reg``."""
    _, kind = _db_kind(s, db_reg)
    return decomp_by(s, db_reg, _reader(s, x_reg, kind.in_w))


def co_prime_by(s: StateVector, db_reg: str, x_of: Callable[[Label], int], u_reg: str) -> StateVector:
    """XOR ``D(x)`` into ``u_reg``; identity where ``D(x)`` is absent."""
    d, kind = _db_kind(s, db_reg)
    u = s.layout.index(u_reg)
    if s.layout.width(u_reg) != kind.out_w:
        raise ValueError("answer register width differs from the database output width")
    out: dict[Label, complex] = {}
    for label, a in s.amps.items():
        y = db_get(label[d], x_of(label))
        if y is not None:
            label = label[:u] + (label[u] ^ y,) + label[u + 1 :]
        out[label] = a
    return StateVector(s.layout, out)


def co_prime(s: StateVector, x_reg: str, u_reg: str, db_reg: str) -> StateVector:
    _, kind = _db_kind(s, db_reg)
    return co_prime_by(s, db_reg, _reader(s, x_reg, kind.in_w), u_reg)


def query_by(s: StateVector, db_reg: str, x_of: Callable[[Label], int], u_reg: str) -> StateVector:
    """One compressed-oracle query: decomp, then co_prime, then decomp."""
    s = decomp_by(s, db_reg, x_of)
    s = co_prime_by(s, db_reg, x_of, u_reg)
    return decomp_by(s, db_reg, x_of)


def query(s: StateVector, x_reg: str, u_reg: str, db_reg: str) -> StateVector:
    _, kind = _db_kind(s, db_reg)
    return query_by(s, db_reg, _reader(s, x_reg, kind.in_w), u_reg)


def switch_rename(s: StateVector, x1: int, x2: int, x_reg: str, db_reg: str) -> StateVector:
    """Exchange the names ``x1`` and ``x2`` in the query register and the database."""
    i = s.layout.index(x_reg)
    d, _ = _db_kind(s, db_reg)

    def swap(v: int) -> int:
        return x2 if v == x1 else x1 if v == x2 else v

    out: dict[Label, complex] = {}
    for label, a in s.amps.items():
        D = tuple(sorted((swap(x), y) for x, y in label[d]))
        new = list(label)
        new[i] = swap(label[i])
        new[d] = D
        out[tuple(new)] = a
    return StateVector(s.layout, out)


def max_entries(s: StateVector, db_reg: str) -> int:
    d = s.layout.index(db_reg)
    return max((len(label[d]) for label in s.amps), default=0)


def entry_histogram(s: StateVector, db_reg: str) -> dict[int, float]:
    """Total squared amplitude on databases of each size."""
    d = s.layout.index(db_reg)
    hist: dict[int, float] = {}
    for label, a in s.amps.items():
        k = len(label[d])
        hist[k] = hist.get(k, 0.0) + abs(a) ** 2
    return dict(sorted(hist.items()))


@dataclass(frozen=True)
class FunctionRegisterSpec:
    """A finite family of functions ``X x R -> Y`` given by truth tables.

    ``tables[i][x * |R| + r]`` is the value of the ``i``-th function.  A
    register holding index ``i`` stands for that function.
    """

    x_bits: int
    r_bits: int
    y_bits: int
    tables: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        size = 1 << (self.x_bits + self.r_bits)
        if not self.tables:
            raise ValueError("family must contain at least one function")
        if len(self.tables) > 1 << 16:
            raise ValueError("family too large")
        for t in self.tables:
            if len(t) != size or any(v < 0 or v >> self.y_bits for v in t):
                raise ValueError("truth tables must share domain and range")

    @property
    def index_bits(self) -> int:
        return max(1, (len(self.tables) - 1).bit_length())

    def value(self, index: int, x: int, r: int) -> int:
        return self.tables[index][(x << self.r_bits) | r]

    @classmethod
    def all_functions(cls, x_bits: int, r_bits: int, y_bits: int) -> FunctionRegisterSpec:
        size = 1 << (x_bits + r_bits)
        if size * y_bits > 16:
            raise ValueError("family of all functions would exceed 2**16 tables")
        tables = tuple(product(range(1 << y_bits), repeat=size))
        return cls(x_bits, r_bits, y_bits, tables)

    def preimage_classes(self) -> dict[tuple[int, int, int], np.ndarray]:
        """Indices of the functions with ``f(x, r) = y``, keyed by ``(x, r, y)``."""
        arr = np.asarray(self.tables)
        classes = {}
        for x in range(1 << self.x_bits):
            for r in range(1 << self.r_bits):
                col = arr[:, (x << self.r_bits) | r]
                for y in range(1 << self.y_bits):
                    classes[(x, r, y)] = np.nonzero(col == y)[0]
        return classes


def prepare_function_register(spec: FunctionRegisterSpec, reg: str = "F") -> StateVector:
    """Equal superposition over the indices of ``spec``'s functions."""
    amp = complex(1 / math.sqrt(len(spec.tables)))
    layout = RegisterLayout([(reg, BitReg(spec.index_bits))])
    return StateVector(layout, {(i,): amp for i in range(len(spec.tables))})


def project_E(
    s: StateVector, db_reg: str, func_reg: str, spec: FunctionRegisterSpec
) -> tuple[float, StateVector]:
    """Project the (database, function) pair onto the consistent subspace.

    The subspace is spanned by the empty database next to the uniform
    superposition of all functions, together with ``{(x, r)}`` next to the
    uniform superposition over the functions with ``f(x, r) = y``, for
    every ``y``.  Databases with two or more entries project to zero.
    Returns ``(squared norm kept, unnormalized projection)``.
    """
    d = s.layout.index(db_reg)
    fi = s.layout.index(func_reg)
    size = len(spec.tables)
    groups: dict[tuple, dict[int, complex]] = {}
    for label, a in s.amps.items():
        if len(label[d]) > 1:
            continue
        key = label[:fi] + (0,) + label[fi + 1 :]
        groups.setdefault(key, {})[label[fi]] = a
    classes: dict | None = None
    out: dict[Label, complex] = {}
    for key, comp in groups.items():
        D = key[d]
        if not D:
            c = sum(comp.values()) / size
            if abs(c) >= PRUNE:
                for i in range(size):
                    out[key[:fi] + (i,) + key[fi + 1 :]] = c
            continue
        if classes is None:
            classes = spec.preimage_classes()
        (x, r), = D
        by_y: dict[int, complex] = {}
        for i, a in comp.items():
            y = spec.value(i, x, r)
            by_y[y] = by_y.get(y, 0j) + a
        for y, total in by_y.items():
            members = classes[(x, r, y)]
            c = total / len(members)
            if abs(c) < PRUNE:
                continue
            for i in members.tolist():
                out[key[:fi] + (i,) + key[fi + 1 :]] = c
    proj = StateVector(s.layout, out)
    return proj.norm_sq(), proj
