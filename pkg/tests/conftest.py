"""Shared hypothesis strategies and brute-force helpers."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from otpsim.qsim import BitReg, DbReg, RegisterLayout, StateVector

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def rows_and_width(draw, max_n: int = 8, max_rows: int = 6):
    n = draw(st.integers(1, max_n))
    rows = draw(st.lists(st.integers(0, (1 << n) - 1), max_size=max_rows))
    return n, rows


def brute_dual(basis: tuple[int, ...], n: int) -> list[int]:
    """Every vector orthogonal to all of ``basis``, by exhaustive search."""
    return [b for b in range(1 << n) if all((a & b).bit_count() % 2 == 0 for a in basis)]


def brute_span(rows, n: int) -> list[int]:
    out = {0}
    for r in rows:
        out |= {v ^ r for v in out}
    return sorted(out)


def oracle_layout(x_bits: int = 2, y_bits: int = 1) -> RegisterLayout:
    return RegisterLayout([("X", BitReg(x_bits)), ("U", BitReg(y_bits)), ("D", DbReg(x_bits, y_bits))])


def random_db_state(rng: np.random.Generator, x_bits: int = 2, y_bits: int = 1, terms: int = 6) -> StateVector:
    """Normalized random superposition of ``(x, u, D)`` basis labels."""
    layout = oracle_layout(x_bits, y_bits)
    amps: dict = {}
    for _ in range(terms):
        x = int(rng.integers(1 << x_bits))
        u = int(rng.integers(1 << y_bits))
        D = tuple(
            (xx, int(rng.integers(1 << y_bits))) for xx in range(1 << x_bits) if rng.random() < 0.4
        )
        amps[(x, u, D)] = amps.get((x, u, D), 0) + complex(rng.normal(), rng.normal())
    nrm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
    return StateVector(layout, {k: v / nrm for k, v in amps.items()})


# acceptance report -------------------------------------------------------------

_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record (and print) the one-line verdict of an acceptance criterion."""

    def emit(number: int, title: str, passed: bool, detail: str, seconds: float) -> None:
        line = f"[{number:>2}] {'PASS' if passed else 'FAIL'} {title}: {detail} ({seconds:.1f} s)"
        _ACCEPTANCE.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
