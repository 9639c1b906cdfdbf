"""Linear algebra over GF(2) with vectors packed into Python ints.

A vector of width ``n`` is an int whose bit ``n - 1 - j`` holds coordinate
``j``.  Written as a bit string, coordinate 0 is therefore the leftmost
character, so ``0b1000`` at width 4 is the string ``"1000"``.  A leftmost
pivot is the most significant set bit.

Subspaces are kept in reduced row-echelon form, which makes set equality a
plain comparison of the basis tuples.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering
from itertools import combinations, product
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "BitWord",
    "Subspace",
    "rref",
    "span",
    "sample_subspace",
    "dual",
    "contains",
    "enumerate_subspace",
    "intersect",
    "all_subspaces",
    "subspace_count",
    "random_vectors",
    "dot",
    "hex_width",
    "to_hex",
    "from_hex",
    "MAX_DIM",
    "MAX_ENUM_DIM",
]

MAX_DIM = 32
MAX_ENUM_DIM = 20


def hex_width(width: int) -> int:
    """Number of hex digits used to serialize a ``width``-bit word."""
    return max(1, (width + 3) // 4)


def to_hex(value: int, width: int) -> str:
    return format(value, f"0{hex_width(width)}x")


def from_hex(text: str, width: int) -> int:
    value = int(text, 16)
    if value >> width:
        raise ValueError(f"hex value {text!r} does not fit in {width} bits")
    return value


def dot(a: int, b: int) -> int:
    """Inner product of two packed vectors modulo 2."""
    return (a & b).bit_count() & 1


@total_ordering
@dataclass(frozen=True)
class BitWord:
    """A fixed-width GF(2) vector.

    Ordering compares width first and then the packed value, which agrees
    with lexicographic order on the bit strings of equal width.
    """

    bits: int
    width: int

    def __post_init__(self) -> None:
        if not 0 <= self.width <= MAX_DIM:
            raise ValueError(f"width {self.width} outside 0..{MAX_DIM}")
        if self.bits < 0 or self.bits >> self.width:
            raise ValueError(f"value {self.bits} does not fit in {self.width} bits")

    def __lt__(self, other: BitWord) -> bool:
        return (self.width, self.bits) < (other.width, other.bits)

    def __int__(self) -> int:
        return self.bits

    def __xor__(self, other: BitWord) -> BitWord:
        if self.width != other.width:
            raise ValueError("width mismatch")
        return BitWord(self.bits ^ other.bits, self.width)

    def __str__(self) -> str:
        return format(self.bits, f"0{self.width}b") if self.width else ""

    @classmethod
    def from_str(cls, text: str) -> BitWord:
        """Parse a bit string such as ``"0110"``."""
        return cls(int(text, 2) if text else 0, len(text))

    def to_hex(self) -> str:
        return to_hex(self.bits, self.width)

    @classmethod
    def from_hex(cls, text: str, width: int) -> BitWord:
        return cls(from_hex(text, width), width)


def _as_int(v: int | BitWord, width: int | None = None) -> int:
    if isinstance(v, BitWord):
        if width is not None and v.width != width:
            raise ValueError(f"vector width {v.width} != ambient dimension {width}")
        return v.bits
    if width is not None and (v < 0 or v >> width):
        raise ValueError(f"vector {v} does not fit in {width} bits")
    return int(v)


def rref(rows: Iterable[int], n: int) -> tuple[int, ...]:
    """Reduced row-echelon form of ``rows`` with zero rows dropped.

    Rows come back ordered by pivot, leftmost pivot first, and every pivot
    column is cleared in all other rows.

    >>> [format(r, "04b") for r in rref([0b1100, 0b0110, 0b1010], 4)]
    ['1010', '0110']
    """
    basis: list[int] = []
    for row in rows:
        row = int(row)
        if row >> n:
            raise ValueError(f"row {row} does not fit in {n} bits")
        for b in basis:
            if row & (1 << (b.bit_length() - 1)):
                row ^= b
        if not row:
            continue
        pivot = 1 << (row.bit_length() - 1)
        basis = [b ^ row if b & pivot else b for b in basis]
        basis.append(row)
    basis.sort(reverse=True)
    return tuple(basis)


@dataclass(frozen=True)
class Subspace:
    """A subspace of F_2^n held by its canonical RREF basis."""

    ambient_dim: int
    basis: tuple[int, ...]

    def __post_init__(self) -> None:
        if not 0 <= self.ambient_dim <= MAX_DIM:
            raise ValueError(f"ambient dimension {self.ambient_dim} outside 0..{MAX_DIM}")
        if rref(self.basis, self.ambient_dim) != tuple(self.basis):
            raise ValueError("basis is not in canonical reduced row-echelon form")

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def size(self) -> int:
        return 1 << self.dim

    @property
    def pivots(self) -> tuple[int, ...]:
        """Pivot masks (one set bit each), leftmost first."""
        return tuple(1 << (b.bit_length() - 1) for b in self.basis)

    def reduce(self, v: int) -> int:
        """Remainder of ``v`` after eliminating the pivot coordinates."""
        for b in self.basis:
            if v & (1 << (b.bit_length() - 1)):
                v ^= b
        return v

    def __contains__(self, v: int | BitWord) -> bool:
        return contains(self, v)

    def __iter__(self) -> Iterator[int]:
        return iter(enumerate_subspace(self))

    def __len__(self) -> int:
        return self.size

    def to_json(self) -> dict:
        return {"n": self.ambient_dim, "basis": [to_hex(b, self.ambient_dim) for b in self.basis]}

    @classmethod
    def from_json(cls, data: dict) -> Subspace:
        n = int(data["n"])
        rows = [from_hex(h, n) for h in data["basis"]]
        return span(rows, n)

    def __str__(self) -> str:
        rows = ", ".join(format(b, f"0{self.ambient_dim}b") for b in self.basis)
        return f"span{{{rows}}}"


def span(rows: Iterable[int | BitWord], n: int) -> Subspace:
    """The subspace of F_2^n spanned by ``rows``."""
    return Subspace(n, rref((_as_int(r, n) for r in rows), n))


def sample_subspace(n: int, d: int, rng: np.random.Generator) -> Subspace:
    """Uniformly random ``d``-dimensional subspace of F_2^n.

    Draws uniform ``d x n`` matrices until one has full row rank.  Every
    ``d``-dimensional subspace has the same number of ordered bases, so the
    row span of an accepted matrix is uniform.
    """
    if not 0 <= d <= n <= MAX_DIM:
        raise ValueError(f"need 0 <= d <= n <= {MAX_DIM}, got d={d}, n={n}")
    while True:
        rows = [int(x) for x in rng.integers(0, 1 << n, size=d, dtype=np.uint64)]
        basis = rref(rows, n)
        if len(basis) == d:
            return Subspace(n, basis)


def dual(A: Subspace) -> Subspace:
    """Orthogonal complement ``{b : <a, b> = 0 for all a in A}``.

    For each non-pivot column ``j`` the null-space vector has a 1 at ``j``
    and a 1 at the pivot of every row whose column ``j`` is set.
    """
    n = A.ambient_dim
    pivot_mask = 0
    for p in A.pivots:
        pivot_mask |= p
    rows = []
    for j in range(n):
        col = 1 << j
        if col & pivot_mask:
            continue
        w = col
        for b, p in zip(A.basis, A.pivots):
            if b & col:
                w |= p
        rows.append(w)
    return Subspace(n, rref(rows, n))


def contains(A: Subspace, v: int | BitWord) -> bool:
    """Whether ``v`` lies in the row span of ``A``."""
    return A.reduce(_as_int(v, A.ambient_dim)) == 0


def enumerate_subspace(A: Subspace) -> list[int]:
    """All ``2**dim`` elements of ``A`` in increasing order (so 0 comes first)."""
    if A.dim > MAX_ENUM_DIM:
        raise ValueError(f"subspace of dimension {A.dim} is too large to enumerate")
    elems = [0]
    for b in A.basis:
        elems += [e ^ b for e in elems]
    elems.sort()
    return elems


def intersect(A: Subspace, B: Subspace) -> Subspace:
    """``A & B`` computed as the dual of ``dual(A) + dual(B)``."""
    if A.ambient_dim != B.ambient_dim:
        raise ValueError("ambient dimensions differ")
    return dual(span(dual(A).basis + dual(B).basis, A.ambient_dim))


def all_subspaces(n: int, d: int) -> Iterator[Subspace]:
    """Every ``d``-dimensional subspace of F_2^n, each exactly once.

    Enumerates pivot positions and then the free entries of the RREF
    matrix, so no deduplication is needed.
    """
    if not 0 <= d <= n:
        raise ValueError("need 0 <= d <= n")
    for cols in combinations(range(n), d):
        pivots = [1 << (n - 1 - c) for c in cols]
        pivot_mask = sum(pivots)
        # row i may only have free bits right of its pivot, outside pivot columns
        free = []
        for c, p in zip(cols, pivots):
            free.append([1 << (n - 1 - j) for j in range(c + 1, n) if not (1 << (n - 1 - j)) & pivot_mask])
        choices = [product((0, 1), repeat=len(f)) for f in free]
        for bits in product(*[list(c) for c in choices]):
            rows = []
            for p, f, bs in zip(pivots, free, bits):
                rows.append(p | sum(m for m, b in zip(f, bs) if b))
            yield Subspace(n, tuple(sorted(rows, reverse=True)))


def subspace_count(n: int, d: int) -> int:
    """Gaussian binomial [n choose d]_2, the number of d-dim subspaces of F_2^n."""
    num = den = 1
    for i in range(d):
        num *= (1 << (n - i)) - 1
        den *= (1 << (i + 1)) - 1
    return num // den


def random_vectors(rng: np.random.Generator, n: int, count: int) -> Sequence[int]:
    """``count`` uniform vectors of width ``n`` as Python ints."""
    return [int(x) for x in rng.integers(0, 1 << n, size=count, dtype=np.uint64)]
