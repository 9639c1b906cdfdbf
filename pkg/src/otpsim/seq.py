"""The single-effective-query oracle.

The oracle evaluates ``f(x; H(x))`` where ``H`` is a compressed random
oracle kept inside the oracle.  A query is answered only if ``H``'s
database has no entry on an input other than ``x``.  Because the answer
is computed by querying ``H`` on a scratch register and then uncomputing
that query, a query that is reversed before anything is measured leaves
no record.  The database therefore never holds more than one entry.

The function can be a fixed truth table or, when ``family`` is set, the
function named by an index register kept in superposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .croracle import FunctionRegisterSpec, entry_histogram, query_by
from .qsim import (
    BitReg,
    DbReg,
    FlagReg,
    Label,
    RegKind,
    StateVector,
    apply_basis_map,
    apply_controlled,
)
from .tables import FunctionTable

__all__ = ["SeqOracle", "seq_new", "seq_query", "seq_db_support_check", "ScratchLeak"]

SCRATCH_TOL = 1e-18


class ScratchLeak(RuntimeError):
    """The oracle's scratch register failed to return to zero."""


@dataclass(frozen=True)
class SeqOracle:
    """Register names and function data for one single-effective-query oracle."""

    x_bits: int
    r_bits: int
    y_bits: int
    f: FunctionTable | None = None
    family: FunctionRegisterSpec | None = None
    db_reg: str = "H"
    scratch_x: str = "Hx"
    scratch_r: str = "Hr"
    func_reg: str = "F"

    def registers(self) -> list[tuple[str, RegKind]]:
        """Internal registers to add to a layout that hosts this oracle."""
        regs: list[tuple[str, RegKind]] = [
            (self.db_reg, DbReg(self.x_bits, self.r_bits)),
            (self.scratch_x, BitReg(self.x_bits)),
            (self.scratch_r, BitReg(self.r_bits)),
        ]
        if self.family is not None:
            regs.append((self.func_reg, BitReg(self.family.index_bits)))
        return regs

    def evaluator(self, s: StateVector, x_reg: str) -> Callable[[Label], int]:
        """``label -> f(x; r)`` reading ``x`` from ``x_reg`` and ``r`` from the scratch."""
        xi = s.layout.index(x_reg)
        ri = s.layout.index(self.scratch_r)
        if self.family is None:
            f = self.f
            return lambda label: f(label[xi], label[ri])
        fi = s.layout.index(self.func_reg)
        fam = self.family
        return lambda label: fam.value(label[fi], label[xi], label[ri])


def seq_new(
    f: FunctionTable | None = None,
    *,
    family: FunctionRegisterSpec | None = None,
    prefix: str = "H",
) -> SeqOracle:
    """A fresh oracle for the fixed table ``f`` or the purified ``family``.

    Its database starts empty once its registers are added to a layout at
    their zero value.
    """
    if (f is None) == (family is None):
        raise ValueError("give exactly one of a truth table or a function family")
    src = f if f is not None else family
    return SeqOracle(
        src.x_bits,
        src.r_bits,
        src.y_bits,
        f=f,
        family=family,
        db_reg=prefix,
        scratch_x=prefix + "x",
        scratch_r=prefix + "r",
        func_reg=prefix + "F",
    )


def _check_widths(s: StateVector, o: SeqOracle, x_reg: str, u_reg: str, b_reg: str) -> None:
    if s.layout.width(x_reg) != o.x_bits:
        raise ValueError(f"{x_reg!r} must have {o.x_bits} bits")
    if s.layout.width(u_reg) != o.y_bits:
        raise ValueError(f"{u_reg!r} must have {o.y_bits} bits")
    if not isinstance(s.layout.kind(b_reg), FlagReg):
        raise TypeError(f"{b_reg!r} must be a flag register")


def seq_query(s: StateVector, o: SeqOracle, x_reg: str, u_reg: str, b_reg: str) -> StateVector:
    """Answer one query on ``(x_reg, u_reg, b_reg)``.

    Components whose database holds an entry on some ``x' != x`` are left
    alone.  On the rest the oracle copies ``x`` to its scratch register,
    queries ``H`` to fetch ``r``, XORs ``f(x; r)`` into ``u_reg``, flips
    ``b_reg``, queries ``H`` again to clear ``r`` and erases the copy of ``x``.
    """
    _check_widths(s, o, x_reg, u_reg, b_reg)
    lay = s.layout
    xi, ui, bi = lay.index(x_reg), lay.index(u_reg), lay.index(b_reg)
    di, sxi, sri = lay.index(o.db_reg), lay.index(o.scratch_x), lay.index(o.scratch_r)

    def answered(label: Label) -> bool:
        x = label[xi]
        return all(xx == x for xx, _ in label[di])

    def copy_x(label: Label) -> Label:
        new = list(label)
        new[sxi] ^= label[xi]
        return tuple(new)

    def scratch_x(label: Label) -> int:
        return label[sxi]

    def action(sub: StateVector) -> StateVector:
        sub = apply_basis_map(sub, copy_x)
        sub = query_by(sub, o.db_reg, scratch_x, o.scratch_r)
        value = o.evaluator(sub, x_reg)

        def evaluate(label: Label) -> Label:
            new = list(label)
            new[ui] ^= value(label)
            new[bi] ^= 1
            return tuple(new)

        sub = apply_basis_map(sub, evaluate)
        sub = query_by(sub, o.db_reg, scratch_x, o.scratch_r)
        sub = apply_basis_map(sub, copy_x)
        return _clear_scratch(sub, sri)

    return apply_controlled(s, answered, action)


def _clear_scratch(s: StateVector, sri: int) -> StateVector:
    leak = sum(abs(a) ** 2 for k, a in s.amps.items() if k[sri] != 0)
    if leak > SCRATCH_TOL:
        raise ScratchLeak(f"scratch register kept weight {leak:.3e}")
    return StateVector(s.layout, {k: a for k, a in s.amps.items() if k[sri] == 0})


def seq_db_support_check(s: StateVector, o: SeqOracle) -> tuple[int, float]:
    """``(largest database size in the support, weight on databases with >= 2 entries)``."""
    hist = entry_histogram(s, o.db_reg)
    largest = max(hist, default=0)
    return largest, sum(w for k, w in hist.items() if k >= 2)
