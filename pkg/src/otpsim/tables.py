"""Truth tables for randomized functions ``f(x; r)`` and seeded RNG lanes."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

__all__ = ["FunctionTable", "lane_rng"]


def lane_rng(seed: int, lane: str, *counters: int) -> np.random.Generator:
    """Independent generator for the named ``lane`` of a run.

    Generators are keyed by ``(seed, lane, counters)`` through a
    ``SeedSequence`` feeding a counter-based Philox bit generator, so trial
    ``i`` of a lane draws the same numbers however many trials are run.
    """
    key = [int(seed) & (2**64 - 1), zlib.crc32(lane.encode()), *[int(c) for c in counters]]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


@dataclass
class FunctionTable:
    """``f : {0,1}^x_bits x {0,1}^r_bits -> {0,1}^y_bits`` stored as ``table[x, r]``."""

    x_bits: int
    r_bits: int
    y_bits: int
    table: np.ndarray
    _rows: list = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.table = np.asarray(self.table, dtype=np.int64).reshape(1 << self.x_bits, 1 << self.r_bits)
        if self.table.min() < 0 or self.table.max() >> self.y_bits:
            raise ValueError("table values exceed the output width")
        self._rows = self.table.tolist()

    def __call__(self, x: int, r: int) -> int:
        return self._rows[x][r]

    @property
    def nx(self) -> int:
        return 1 << self.x_bits

    @property
    def nr(self) -> int:
        return 1 << self.r_bits

    @property
    def ny(self) -> int:
        return 1 << self.y_bits

    def is_deterministic(self) -> bool:
        """Whether ``f(x; r)`` ignores ``r``."""
        return bool((self.table == self.table[:, :1]).all())

    @classmethod
    def uniform(cls, rng: np.random.Generator, x_bits: int, r_bits: int, y_bits: int) -> FunctionTable:
        return cls(x_bits, r_bits, y_bits, rng.integers(0, 1 << y_bits, size=(1 << x_bits, 1 << r_bits)))

    @classmethod
    def constant(cls, value: int, x_bits: int, r_bits: int, y_bits: int) -> FunctionTable:
        return cls(x_bits, r_bits, y_bits, np.full((1 << x_bits, 1 << r_bits), value))

    @classmethod
    def randomness(cls, x_bits: int, r_bits: int) -> FunctionTable:
        """``f(x; r) = r``."""
        return cls(x_bits, r_bits, r_bits, np.tile(np.arange(1 << r_bits), (1 << x_bits, 1)))

    @classmethod
    def deterministic(cls, values, x_bits: int, r_bits: int, y_bits: int) -> FunctionTable:
        """``f(x; r) = values[x]`` for every ``r``."""
        col = np.asarray(values, dtype=np.int64).reshape(-1, 1)
        return cls(x_bits, r_bits, y_bits, np.tile(col, (1, 1 << r_bits)))

    @classmethod
    def revealing(cls, rng: np.random.Generator, x_bits: int, r_bits: int, t_bits: int) -> FunctionTable:
        """``f(x; r) = r || T[x, r]`` with ``T`` uniform; the output exposes ``r``."""
        t = rng.integers(0, 1 << t_bits, size=(1 << x_bits, 1 << r_bits))
        r = np.arange(1 << r_bits).reshape(1, -1)
        return cls(x_bits, r_bits, r_bits + t_bits, (r << t_bits) | t)

    def to_json(self) -> dict:
        return {"x_bits": self.x_bits, "r_bits": self.r_bits, "y_bits": self.y_bits, "table": self.table.tolist()}
