"""The twelve acceptance criteria, each at its stated size and tolerance.

Every test prints one PASS/FAIL line; the lines are repeated in an
"acceptance criteria" section of the pytest summary.  Runtime limits are
part of each criterion and are checked too.
"""

from __future__ import annotations

import math
import os
import time

import numpy as np
import pytest

from otpsim import attacks
from otpsim.cli import build_payload, payload_text
from otpsim.corpus import program_corpus
from otpsim.croracle import co_prime, decomp, query, switch_rename
from otpsim.experiments import EXPERIMENTS, resolve_params, run_experiment
from otpsim.games import FamilySpec
from otpsim.gf2 import dual, sample_subspace
from otpsim.otp import HybridMachine, sample_subspaces
from otpsim.qsim import StateVector, apply_hadamard_block, prepare_subspace_state
from otpsim.script import run_script
from otpsim.tables import FunctionTable, lane_rng

from conftest import random_db_state
from small_configs import SMALL
from test_croracle import closed_form_decomp

JOBS = int(os.environ.get("OTPSIM_JOBS") or os.cpu_count() or 1)
SEED = 0


def amp_error(a: StateVector, b: StateVector) -> float:
    """Largest absolute amplitude difference."""
    keys = a.amps.keys() | b.amps.keys()
    return max((abs(a.amps.get(k, 0) - b.amps.get(k, 0)) for k in keys), default=0.0)


def all_pass(records: list[dict]) -> bool:
    return all(r["pass"] is not False for r in records)


def failures(records: list[dict]) -> str:
    bad = [r["check"] for r in records if r["pass"] is False]
    return "failed: " + ", ".join(bad[:5]) if bad else "all records pass"


def test_01_subspace_duality(acceptance_line):
    start = time.perf_counter()
    rng = lane_rng(SEED, "acceptance-duality")
    worst, count = 0.0, 0
    for n in (2, 4, 6, 8):
        for _ in range(200):
            A = sample_subspace(n, int(rng.integers(0, n + 1)), rng)
            got = apply_hadamard_block(prepare_subspace_state(A), "A")
            worst = max(worst, amp_error(got, prepare_subspace_state(dual(A))))
            count += 1
    secs = time.perf_counter() - start
    ok = worst <= 1e-12 and secs < 5
    acceptance_line(1, "subspace duality", ok, f"{count} subspaces, max amplitude error {worst:.2e}", secs)
    assert ok


def test_02_compressed_oracle_algebra(acceptance_line):
    start = time.perf_counter()
    errs = {"decomp-involution": 0.0, "co-prime-involution": 0.0, "closed-form-|Y|=2": 0.0, "renaming": 0.0}
    for i in range(100):
        rng = lane_rng(SEED, "acceptance-algebra", i)
        s2 = random_db_state(rng, x_bits=2, y_bits=2)
        s1 = random_db_state(rng, x_bits=2, y_bits=1)
        x1, x2 = (int(v) for v in rng.integers(0, 4, size=2))
        errs["decomp-involution"] = max(errs["decomp-involution"], amp_error(decomp(decomp(s2, "X", "D"), "X", "D"), s2))
        twice = co_prime(co_prime(s2, "X", "U", "D"), "X", "U", "D")
        errs["co-prime-involution"] = max(errs["co-prime-involution"], amp_error(twice, s2))
        errs["closed-form-|Y|=2"] = max(errs["closed-form-|Y|=2"], amp_error(decomp(s1, "X", "D"), closed_form_decomp(s1, 1)))
        sw = lambda t: switch_rename(t, x1, x2, "X", "D")  # noqa: E731
        renamed = sw(query(sw(s2), "X", "U", "D"))
        errs["renaming"] = max(errs["renaming"], amp_error(renamed, query(s2, "X", "U", "D")))
    secs = time.perf_counter() - start
    ok = max(errs.values()) <= 1e-12 and secs < 10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    acceptance_line(2, "compressed-oracle algebra (100 states each)", ok, detail, secs)
    assert ok


def test_03_seq_single_entry_invariant(acceptance_line):
    start = time.perf_counter()
    params = resolve_params("seq-invariant", {"budget": 8, "random_count": 10})
    records = run_experiment("seq-invariant", params, SEED)
    secs = time.perf_counter() - start
    worst = max(r["estimate"] for r in records)
    ok = len(records) == 20 and all_pass(records) and worst <= 1e-12 and secs < 30
    acceptance_line(3, "SEQ single-entry invariant", ok, f"{len(records)} scripts, max >=2-entry weight {worst:.1e}", secs)
    assert ok


@pytest.mark.slow
def test_04_correctness(acceptance_line):
    start = time.perf_counter()
    params = resolve_params("correctness", {"n": 8, "m": 1, "r_bits": 2, "trials": 100_000, "compare_n": 4})
    records = run_experiment("correctness", params, SEED, JOBS)
    secs = time.perf_counter() - start
    by = {r["check"]: r for r in records}
    tv, ratio = by["tv-n8"], by["ratio-n4-n8"]
    ok = all_pass(records) and secs < 120
    detail = (
        f"TV {tv['estimate']:.5f} vs {tv['predicted']:.6f} (sigma {tv['sigma']:.5f}); "
        f"n4/n8 ratio {ratio['estimate']:.3f} vs {ratio['predicted']:.3f} (sigma {ratio['sigma']:.3f})"
    )
    acceptance_line(4, "correctness at m=1, n=8, |R|=4, 1e5 trials", ok, detail, secs)
    assert ok


@pytest.mark.slow
def test_05_perfect_hybrid_equalities(acceptance_line):
    start = time.perf_counter()
    params = resolve_params("hybrids", {"pair": "all", "n": 4, "m": 1, "tolerance": 1e-10})
    records = run_experiment("hybrids", params, SEED, JOBS)
    secs = time.perf_counter() - start
    worst = max(r["estimate"] for r in records)
    pairs = sorted({r["params"]["pair"] for r in records})
    ok = all_pass(records) and worst <= 1e-10 and secs < 300
    detail = f"pairs {' '.join(pairs)} x {len(records) // len(pairs)} scripts, max trace distance {worst:.1e}"
    acceptance_line(5, "perfect hybrid equalities", ok, detail, secs)
    assert ok


def test_06_internal_span_invariants(acceptance_line):
    start = time.perf_counter()
    f = FunctionTable.uniform(lane_rng(SEED, "tables"), 1, 1, 2)
    worst = {4: 0.0, 5: 0.0}
    scripts = program_corpus(4, 2)
    for i, script in enumerate(scripts):
        rng = lane_rng(SEED, "subspaces", i)
        for _ in range(3):
            subs = sample_subspaces(1, 4, rng)
            for level in (4, 5):
                machine = HybridMachine(level, f, 1, 4, subs)
                seen = []
                finals = run_script(script, machine, mode="defer", on_query=lambda br: seen.append(machine.out_of_span(br.state)))
                seen += [machine.out_of_span(b.state) for b in finals]
                worst[level] = max(worst[level], *seen)
    secs = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-10 and secs < 120
    detail = f"{len(scripts)} scripts x 3 draws, out-of-span Hyb4 {worst[4]:.1e}, Hyb5 {worst[5]:.1e}"
    acceptance_line(6, "Hyb4/Hyb5 internal-span invariants", ok, detail, secs)
    assert ok


@pytest.mark.slow
def test_07_seq_unlearnability(acceptance_line):
    start = time.perf_counter()
    params = resolve_params("learning-game", {"y_bits": 8, "adversary": "measure-then-guess", "mode": "seq", "trials": 100_000})
    (rec,) = run_experiment("learning-game", params, SEED, JOBS)
    secs = time.perf_counter() - start
    bound = 1 / 256
    sigma = math.sqrt(bound * (1 - bound) / rec["trials"])
    ok = rec["estimate"] <= bound + 3 * sigma and secs < 120
    detail = f"win rate {rec['estimate']:.5f} <= 1/256 + 3 sigma = {bound + 3 * sigma:.5f}"
    acceptance_line(7, "SEQ unlearnability at |Y|=256, 1e5 trials", ok, detail, secs)
    assert ok


def test_08_partial_det_counterexample(acceptance_line):
    start = time.perf_counter()
    seq = attacks.partial_det_experiment(1000, SEED, mode="seq")
    phys = attacks.partial_det_experiment(1000, SEED, mode="single-physical")
    secs = time.perf_counter() - start
    ok = seq.estimate == 1.0 and phys.estimate == 0.0 and secs < 30
    detail = f"SEQ success {seq.estimate:.3f}, single physical query success {phys.estimate:.3f} over 1000 trials"
    acceptance_line(8, "partially deterministic counterexample", ok, detail, secs)
    assert ok


def test_09_gentle_replay(acceptance_line):
    start = time.perf_counter()
    det = attacks.gentle_replay_experiment(FamilySpec("deterministic", 1, 2, 2), 1000, SEED)
    rnd = attacks.gentle_replay_experiment(FamilySpec("randomness", 1, 2), 1000, SEED)
    secs = time.perf_counter() - start
    sigma = math.sqrt(0.25 * 0.75 / rnd.trials)
    fid = det.extra["min_fidelity"]
    ok = det.estimate == 1.0 and fid >= 1 - 1e-9 and abs(rnd.estimate - 0.25) <= 3 * sigma and secs < 30
    detail = f"deterministic {det.estimate:.3f} (fidelity {fid:.12f}); f=r second evaluation {rnd.estimate:.3f} vs 1/4 +- {3 * sigma:.3f}"
    acceptance_line(9, "gentle replay", ok, detail, secs)
    assert ok


def test_10_measure_and_reprogram(acceptance_line):
    start = time.perf_counter()
    exhaustive = attacks.mr_exhaustive_check(x_bits=1, y_bits=1)
    empirical = attacks.mr_empirical_check(10_000, SEED, q=2, x_bits=1, y_bits=1)
    secs = time.perf_counter() - start
    ok = exhaustive["passed"] and empirical["passed"] and secs < 120
    detail = (
        f"exhaustive {exhaustive['cases']} cases, min ratio {exhaustive['min_ratio']:.4f} >= 1/9; "
        f"empirical lhs {empirical['lhs']:.4f} >= rhs/25 = {empirical['rhs'] / empirical['factor']:.4f} - 3 sigma"
    )
    acceptance_line(10, "measure-and-reprogram", ok, detail, secs)
    assert ok


@pytest.mark.slow
def test_11_lemma_suite(acceptance_line):
    start = time.perf_counter()
    chain = run_experiment("lemma-chaining", resolve_params("lemma-chaining", {"points": [[2, 6], [3, 8]]}), SEED)
    coll = run_experiment("lemma-collision", resolve_params("lemma-collision", {}), SEED, JOBS)
    pre = run_experiment("lemma-preimage", resolve_params("lemma-preimage", {}), SEED)
    pair = run_experiment("lemma-pairwise-e", resolve_params("lemma-pairwise-e", {"r_bits": 1, "max_queries": 4}), SEED)
    secs = time.perf_counter() - start
    under_bound = all(r["estimate"] <= r["bound"] for r in coll)
    records = chain + coll + pre + pair
    ok = all_pass(records) and under_bound and secs < 300
    detail = (
        "chaining " + ", ".join(f"{r['check']} {r['estimate']:.4g}<={r['bound']:.4g}" for r in chain)
        + "; collision " + ", ".join(f"{r['check']} {r['estimate']:.4f}~{r['predicted']:.4f}" for r in coll)
        + f"; preimage {sum(r['pass'] for r in pre)}/{len(pre)}; pairwise-E min norm {min(r['estimate'] for r in pair):.3f}"
        + ("" if all_pass(records) else "; " + failures(records))
    )
    acceptance_line(11, "lemma suite", ok, detail, secs)
    assert ok


def test_12_determinism(acceptance_line):
    start = time.perf_counter()
    mismatched = []
    for name in sorted(EXPERIMENTS):
        for fmt in ("json", "csv"):
            a = payload_text(build_payload(name, dict(SMALL[name]), 11), fmt)
            b = payload_text(build_payload(name, dict(SMALL[name]), 11), fmt)
            if a != b:
                mismatched.append(f"{name}/{fmt}")
    parallel = payload_text(build_payload("correctness", dict(SMALL["correctness"]), 11, jobs=2), "json")
    serial = payload_text(build_payload("correctness", dict(SMALL["correctness"]), 11, jobs=1), "json")
    if parallel != serial:
        mismatched.append("correctness/jobs")
    secs = time.perf_counter() - start
    ok = not mismatched
    detail = f"{len(EXPERIMENTS)} experiments x 2 formats byte-identical" if ok else "differs: " + ", ".join(mismatched)
    acceptance_line(12, "determinism", ok, detail, secs)
    assert ok
