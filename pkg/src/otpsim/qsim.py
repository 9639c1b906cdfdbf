"""Sparse state vectors over named registers.

A basis label is a tuple with one entry per register of the layout: an int
for bit and flag registers and a sorted tuple of ``(input, output)`` pairs
for database registers.  A state maps labels to complex amplitudes and never
stores entries smaller than :data:`PRUNE`.

Operations return new states and leave their argument untouched.  They also
accept unnormalized states, which is what :func:`apply_controlled` feeds to
its action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .gf2 import Subspace, enumerate_subspace, to_hex

__all__ = [
    "BitReg",
    "DbReg",
    "FlagReg",
    "RegisterLayout",
    "StateVector",
    "DensityMatrix",
    "PRUNE",
    "new_state",
    "tensor",
    "apply_hadamard_block",
    "apply_classical_oracle",
    "apply_basis_map",
    "apply_controlled",
    "apply_phase",
    "measure",
    "split_outcomes",
    "outcome_distribution",
    "project",
    "reduced_density",
    "trace_distance",
    "pure_trace_distance",
    "prepare_subspace_state",
    "prepare_uniform",
    "inner",
    "fwht_rows",
]

PRUNE = 1e-12
MAX_REDUCED_DIM = 1 << 14


@dataclass(frozen=True)
class BitReg:
    width: int

    def __post_init__(self) -> None:
        if not 0 <= self.width <= 32:
            raise ValueError(f"bit register width {self.width} outside 0..32")


@dataclass(frozen=True)
class DbReg:
    in_w: int
    out_w: int

    @property
    def range_size(self) -> int:
        return 1 << self.out_w


@dataclass(frozen=True)
class FlagReg:
    width: int = field(default=1, init=False)


RegKind = Union[BitReg, DbReg, FlagReg]
Label = tuple


class RegisterLayout:
    """Ordered, immutable list of named registers."""

    __slots__ = ("regs", "_index")

    def __init__(self, regs: Iterable[tuple[str, RegKind]]):
        self.regs: tuple[tuple[str, RegKind], ...] = tuple(regs)
        self._index = {name: i for i, (name, _) in enumerate(self.regs)}
        if len(self._index) != len(self.regs):
            raise ValueError("register names must be unique")

    def __repr__(self) -> str:
        return f"RegisterLayout({list(self.regs)!r})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RegisterLayout) and self.regs == other.regs

    def __hash__(self) -> int:
        return hash(self.regs)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self.regs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.regs)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"no register named {name!r}") from None

    def kind(self, name: str) -> RegKind:
        return self.regs[self.index(name)][1]

    def width(self, name: str) -> int:
        kind = self.kind(name)
        if isinstance(kind, DbReg):
            raise TypeError(f"register {name!r} holds a database")
        return kind.width

    def extend(self, regs: Iterable[tuple[str, RegKind]]) -> RegisterLayout:
        return RegisterLayout(self.regs + tuple(regs))

    def zero_label(self, **values) -> Label:
        """Label with every register at 0 / empty, overridden by ``values``."""
        out = []
        for name, kind in self.regs:
            default = () if isinstance(kind, DbReg) else 0
            out.append(values.pop(name, default))
        if values:
            raise KeyError(f"unknown registers {sorted(values)}")
        label = tuple(out)
        self.validate(label)
        return label

    def validate(self, label: Label) -> None:
        if len(label) != len(self.regs):
            raise ValueError("label length does not match layout")
        for value, (name, kind) in zip(label, self.regs):
            if isinstance(kind, DbReg):
                if not isinstance(value, tuple):
                    raise ValueError(f"register {name!r} needs a database value")
                xs = [x for x, _ in value]
                if xs != sorted(set(xs)):
                    raise ValueError(f"database in {name!r} is not sorted with unique inputs")
                for x, y in value:
                    if x >> kind.in_w or y >> kind.out_w or x < 0 or y < 0:
                        raise ValueError(f"database entry out of range in {name!r}")
            else:
                if not isinstance(value, (int, np.integer)) or value < 0 or value >> kind.width:
                    raise ValueError(f"value {value!r} does not fit register {name!r}")

    def label_to_json(self, label: Label) -> dict:
        out = {}
        for value, (name, kind) in zip(label, self.regs):
            if isinstance(kind, DbReg):
                out[name] = {
                    "in_w": kind.in_w,
                    "out_w": kind.out_w,
                    "entries": [[to_hex(x, kind.in_w), to_hex(y, kind.out_w)] for x, y in value],
                }
            elif isinstance(kind, FlagReg):
                out[name] = int(value)
            else:
                out[name] = to_hex(value, kind.width)
        return out


class StateVector:
    """A (possibly unnormalized) sparse vector over a register layout."""

    __slots__ = ("layout", "amps")

    def __init__(self, layout: RegisterLayout, amps: Mapping[Label, complex]):
        self.layout = layout
        self.amps: dict[Label, complex] = dict(amps)

    def __len__(self) -> int:
        return len(self.amps)

    def __repr__(self) -> str:
        return f"StateVector({len(self.amps)} components over {self.layout.names})"

    def norm_sq(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.amps.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def copy(self) -> StateVector:
        return StateVector(self.layout, self.amps)

    def normalized(self) -> StateVector:
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.layout, {k: v / nrm for k, v in self.amps.items()})

    def amp(self, **values) -> complex:
        """Amplitude of the label given by ``values`` (others default to 0 / empty)."""
        return self.amps.get(self.layout.zero_label(**values), 0j)

    def values(self, name: str) -> set:
        """Distinct values held by register ``name`` across the support."""
        i = self.layout.index(name)
        return {label[i] for label in self.amps}

    def to_json(self) -> list[dict]:
        return [
            {"label": self.layout.label_to_json(k), "re": float(v.real), "im": float(v.imag)}
            for k, v in sorted(self.amps.items())
        ]

    def distance(self, other: StateVector) -> float:
        """Euclidean distance between amplitude vectors on the same layout."""
        if self.layout != other.layout:
            raise ValueError("layouts differ")
        keys = self.amps.keys() | other.amps.keys()
        return math.sqrt(math.fsum(abs(self.amps.get(k, 0) - other.amps.get(k, 0)) ** 2 for k in keys))


def _prune(layout: RegisterLayout, amps: dict[Label, complex], norm_before: float | None = None) -> StateVector:
    """Drop tiny amplitudes, rescaling to keep the norm if ``norm_before`` is given."""
    kept = {k: v for k, v in amps.items() if abs(v) >= PRUNE}
    if norm_before is not None and len(kept) != len(amps) and kept:
        after = math.sqrt(math.fsum(abs(v) ** 2 for v in kept.values()))
        if after > 0:
            scale = norm_before / after
            kept = {k: v * scale for k, v in kept.items()}
    return StateVector(layout, kept)


def new_state(layout: RegisterLayout, initial: Label | Mapping[str, object] | None = None) -> StateVector:
    """Point mass on ``initial``, given as a full label or a ``{name: value}`` map."""
    if initial is None:
        label = layout.zero_label()
    elif isinstance(initial, Mapping):
        label = layout.zero_label(**dict(initial))
    else:
        label = tuple(initial)
        layout.validate(label)
    return StateVector(layout, {label: 1.0 + 0j})


def tensor(*states: StateVector) -> StateVector:
    """Tensor product; the layouts are concatenated in order."""
    layout = RegisterLayout(r for s in states for r in s.layout.regs)
    amps: dict[Label, complex] = {(): 1.0 + 0j}
    for s in states:
        amps = {k1 + k2: a1 * a2 for k1, a1 in amps.items() for k2, a2 in s.amps.items()}
    return StateVector(layout, amps)


def fwht_rows(block: np.ndarray) -> np.ndarray:
    """Normalized Walsh-Hadamard transform along the last axis of a 2-D array."""
    rows, size = block.shape
    out = block.astype(complex, copy=True)
    h = 1
    while h < size:
        out = out.reshape(rows, -1, 2, h)
        out = np.stack((out[:, :, 0] + out[:, :, 1], out[:, :, 0] - out[:, :, 1]), axis=2)
        h *= 2
    return out.reshape(rows, size) / math.sqrt(size)


def _mask_values(mask: int) -> list[int]:
    """All submasks of ``mask`` ordered so index bit ``j`` maps to the j-th lowest mask bit."""
    bits = [1 << i for i in range(mask.bit_length()) if mask >> i & 1]
    values = [0]
    for b in bits:
        values += [v | b for v in values]
    return values


def apply_hadamard_block(s: StateVector, reg: str, mask: int | None = None) -> StateVector:
    """Apply H to every bit of ``reg`` selected by ``mask`` (default: all bits)."""
    i = s.layout.index(reg)
    kind = s.layout.regs[i][1]
    if not isinstance(kind, (BitReg, FlagReg)):
        raise TypeError(f"register {reg!r} is not a bit register")
    full = (1 << kind.width) - 1
    mask = full if mask is None else mask
    if mask & ~full:
        raise ValueError("mask exceeds register width")
    if mask == 0 or not s.amps:
        return s.copy()
    subs = _mask_values(mask)
    pos = {v: j for j, v in enumerate(subs)}
    keep = ~mask
    groups: dict[Label, int] = {}
    entries = []
    for label, a in s.amps.items():
        v = label[i]
        base = label[:i] + (v & keep,) + label[i + 1 :]
        g = groups.setdefault(base, len(groups))
        entries.append((g, pos[v & mask], a))
    block = np.zeros((len(groups), len(subs)), dtype=complex)
    for g, j, a in entries:
        block[g, j] += a
    out = fwht_rows(block)
    bases = list(groups)
    gi, ji = np.nonzero(np.abs(out) >= PRUNE)
    amps = {}
    for g, j in zip(gi.tolist(), ji.tolist()):
        base = bases[g]
        amps[base[:i] + (base[i] | subs[j],) + base[i + 1 :]] = complex(out[g, j])
    return _prune(s.layout, amps, s.norm())


def apply_basis_map(s: StateVector, fn: Callable[[Label], Label]) -> StateVector:
    """Apply the permutation of basis labels ``fn`` (must be injective on the support)."""
    amps: dict[Label, complex] = {}
    for label, a in s.amps.items():
        new = fn(label)
        if new in amps:
            raise ValueError("basis map is not injective on the support")
        amps[new] = a
    return StateVector(s.layout, amps)


def apply_classical_oracle(
    s: StateVector, f: Callable[..., int], in_regs: Sequence[str], out_reg: str
) -> StateVector:
    """XOR ``f(*inputs)`` into ``out_reg`` on every basis component."""
    ins = [s.layout.index(r) for r in in_regs]
    o = s.layout.index(out_reg)
    width = s.layout.width(out_reg)
    if o in ins:
        raise ValueError("output register cannot also be an input")
    amps: dict[Label, complex] = {}
    for label, a in s.amps.items():
        val = f(*[label[j] for j in ins])
        if val < 0 or val >> width:
            raise ValueError(f"oracle output {val} does not fit {width} bits")
        amps[label[:o] + (label[o] ^ val,) + label[o + 1 :]] = a
    return StateVector(s.layout, amps)


def apply_phase(s: StateVector, phase: Callable[[Label], complex]) -> StateVector:
    """Multiply each component by ``phase(label)`` (must have modulus 1)."""
    return StateVector(s.layout, {k: a * phase(k) for k, a in s.amps.items()})


def split(s: StateVector, predicate: Callable[[Label], bool]) -> tuple[StateVector, StateVector]:
    yes: dict[Label, complex] = {}
    no: dict[Label, complex] = {}
    for k, a in s.amps.items():
        (yes if predicate(k) else no)[k] = a
    return StateVector(s.layout, yes), StateVector(s.layout, no)


def merge(a: StateVector, b: StateVector) -> StateVector:
    amps = dict(a.amps)
    for k, v in b.amps.items():
        amps[k] = amps.get(k, 0) + v
    return _prune(a.layout, amps)


def apply_controlled(
    s: StateVector,
    predicate: Callable[[Label], bool],
    action: Callable[[StateVector], StateVector],
    tol: float = 1e-9,
) -> StateVector:
    """Apply ``action`` to the components where ``predicate`` holds.

    The caller must ensure the predicate is invariant under the action,
    otherwise the result is not a controlled unitary.
    """
    yes, no = split(s, predicate)
    if not yes.amps:
        return no
    before = yes.norm()
    done = action(yes)
    if abs(done.norm() - before) > tol:
        raise ValueError("controlled action changed the norm")
    return merge(done, no)


def _outcome(label: Label, i: int, mask: int | None):
    v = label[i]
    return v if mask is None else v & mask


def outcome_distribution(s: StateVector, reg: str, mask: int | None = None) -> dict:
    """Born probabilities of measuring ``reg`` (optionally only the bits in ``mask``)."""
    i = s.layout.index(reg)
    probs: dict = {}
    for k, a in s.amps.items():
        o = _outcome(k, i, mask)
        probs[o] = probs.get(o, 0.0) + abs(a) ** 2
    total = math.fsum(probs.values())
    return {o: p / total for o, p in sorted(probs.items())}


def project(s: StateVector, reg: str, value, mask: int | None = None) -> StateVector:
    """Unnormalized projection onto ``reg`` (masked) holding ``value``."""
    i = s.layout.index(reg)
    return StateVector(s.layout, {k: a for k, a in s.amps.items() if _outcome(k, i, mask) == value})


def split_outcomes(s: StateVector, reg: str, mask: int | None = None) -> dict:
    """``{outcome: (probability, collapsed state)}`` for every possible outcome, in one pass."""
    i = s.layout.index(reg)
    groups: dict = {}
    for k, a in s.amps.items():
        groups.setdefault(_outcome(k, i, mask), {})[k] = a
    weights = {o: math.fsum(abs(a) ** 2 for a in g.values()) for o, g in groups.items()}
    total = math.fsum(weights.values())
    return {
        o: (weights[o] / total, StateVector(s.layout, {k: a / math.sqrt(weights[o]) for k, a in groups[o].items()}))
        for o in sorted(groups)
    }


def measure(
    s: StateVector, reg: str, rng: np.random.Generator, mask: int | None = None
) -> tuple[object, StateVector]:
    """Sample a measurement of ``reg`` and return ``(outcome, collapsed state)``."""
    dist = outcome_distribution(s, reg, mask)
    outcomes = list(dist)
    cdf = np.cumsum([dist[o] for o in outcomes])
    j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    outcome = outcomes[min(j, len(outcomes) - 1)]
    return outcome, project(s, reg, outcome, mask).normalized()


def prepare_uniform(values: Sequence[int], reg: str, width: int) -> StateVector:
    """Equal superposition over ``values`` in a single fresh register."""
    amp = 1 / math.sqrt(len(values))
    return StateVector(RegisterLayout([(reg, BitReg(width))]), {(v,): complex(amp) for v in values})


def prepare_subspace_state(A: Subspace, reg: str = "A") -> StateVector:
    """The subspace state of ``A`` in a single register of width ``n``."""
    return prepare_uniform(enumerate_subspace(A), reg, A.ambient_dim)


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b> for states over the same layout."""
    if a.layout != b.layout:
        raise ValueError("layouts differ")
    small, big = (a, b) if len(a.amps) <= len(b.amps) else (b, a)
    total = sum(small.amps[k].conjugate() * big.amps[k] for k in small.amps if k in big.amps)
    return total if small is a else total.conjugate()


@dataclass
class DensityMatrix:
    """Density matrix on the span of ``basis`` (labels restricted to ``regs``)."""

    regs: tuple[str, ...]
    basis: tuple[Label, ...]
    matrix: np.ndarray

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def embed(self, basis: Sequence[Label]) -> np.ndarray:
        """Matrix expressed on a larger ``basis`` that contains this one."""
        pos = {b: i for i, b in enumerate(basis)}
        idx = np.array([pos[b] for b in self.basis], dtype=int)
        out = np.zeros((len(basis), len(basis)), dtype=complex)
        if len(idx):
            out[np.ix_(idx, idx)] = self.matrix
        return out


def reduced_density(s: StateVector, regs: Sequence[str], weight: float = 1.0) -> DensityMatrix:
    """Partial trace of ``|s><s|`` onto ``regs``, scaled by ``weight``.

    The basis is the sorted set of restricted labels that occur in the
    support, which is all that the reduced state can see.
    """
    keep = [s.layout.index(r) for r in regs]
    drop = [j for j in range(len(s.layout)) if j not in keep]
    rows: dict[Label, int] = {}
    cols: dict[Label, int] = {}
    data, ri, ci = [], [], []
    for label in sorted(s.amps):
        kl = tuple(label[j] for j in keep)
        el = tuple(label[j] for j in drop)
        rows.setdefault(kl, len(rows))
        cols.setdefault(el, len(cols))
    basis = tuple(sorted(rows))
    if len(basis) > MAX_REDUCED_DIM:
        raise ValueError(f"reduced state has {len(basis)} basis labels, limit {MAX_REDUCED_DIM}")
    order = {b: i for i, b in enumerate(basis)}
    for label, a in s.amps.items():
        ri.append(order[tuple(label[j] for j in keep)])
        ci.append(cols[tuple(label[j] for j in drop)])
        data.append(a)
    m = sp.csr_matrix((np.array(data, dtype=complex), (ri, ci)), shape=(len(basis), max(1, len(cols))))
    rho = (m @ m.conj().T).toarray() * weight
    return DensityMatrix(tuple(regs), basis, rho)


def add_density(a: DensityMatrix | None, b: DensityMatrix) -> DensityMatrix:
    """Sum of two (sub)density matrices over the union of their bases."""
    if a is None:
        return b
    if a.regs != b.regs:
        raise ValueError("register sets differ")
    basis = tuple(sorted(set(a.basis) | set(b.basis)))
    return DensityMatrix(a.regs, basis, a.embed(basis) + b.embed(basis))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of ``rho - sigma``.

    Bases that differ are first merged into their union; labels missing
    from one side carry zero weight there.
    """
    if rho.regs != sigma.regs:
        raise ValueError("density matrices act on different registers")
    if rho.basis == sigma.basis:
        diff = rho.matrix - sigma.matrix
    else:
        basis = tuple(sorted(set(rho.basis) | set(sigma.basis)))
        diff = rho.embed(basis) - sigma.embed(basis)
    if diff.size == 0:
        return 0.0
    diff = (diff + diff.conj().T) / 2
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def pure_trace_distance(a: StateVector, b: StateVector) -> float:
    """sqrt(1 - |<a|b>|^2) for normalized states on the same layout."""
    ov = abs(inner(a, b)) ** 2
    return math.sqrt(max(0.0, 1.0 - ov))
