"""Acceptance criteria 1-11.

Each test records one PASS/FAIL line (shown in the terminal summary and in
``-s`` output) and then asserts, so a failing criterion fails the run.
"""

import math
import time

import numpy as np
import pytest

from helpers import TCP_ARGS, memory_run, report, run2, share, tcp_pair
from mwmpc import gates
from mwmpc.cli import bench_rows
from mwmpc.funcs import pi_rexp, pi_softmax
from mwmpc.mw import MwParams, pi_mw
from mwmpc.oracle import (
    UlpConfig,
    b_grid,
    ref_rexp,
    ref_softmax,
    ulp_error,
    verify_div,
    verify_constrained,
    verify_mw,
    verify_mwconv,
    verify_rexp,
    verify_sin,
    verify_trunc,
)
from mwmpc.registry import RunConfig, rexp_budget
from mwmpc.ring import RingArray

LAM = 128
F = 12


def test_criterion_01_mw_exhaustive():
    t0 = time.monotonic()
    cases = fails = 0
    for l in (6, 8, 10):
        grid = b_grid(l)
        L = 1 << l
        assert len(grid) >= 20 and 3 * L // 8 in grid and L // 2 in grid
        rep = verify_mw(l, grid)
        cases += rep.cases
        fails += rep.failures
    dt = time.monotonic() - t0
    ok = fails == 0 and dt < 300
    report(1, ok, f"MW exhaustive l in {{6,8,10}}: {cases} cases, {fails} failures, {dt:.0f}s (< 300s)")
    assert ok


def test_criterion_02_mwconv_exhaustive():
    cases = fails = 0
    for l in (4, 6, 8):
        rep = verify_mwconv(l, [l + 1, l + 2, l + 4])
        cases += rep.cases
        fails += rep.failures
    report(2, fails == 0, f"MWconv exhaustive l in {{4,6,8}}, lr in {{l+1,l+2,l+4}}: {cases} cases, {fails} failures")
    assert fails == 0


def test_criterion_03_constrained_exhaustive():
    rep = verify_constrained(8)
    report(3, rep.ok, f"constrained comparison / wrap, l=8, every A: {rep.cases} cases, {rep.failures} failures")
    assert rep.ok and rep.cases > 0


def test_criterion_04_division_and_truncation_exact():
    rng = np.random.default_rng(4)
    reps = [verify_div(10, d) for d in (3, 7, 10, 100)]
    for d in (7, 1000):
        xs = rng.integers(-(2**36) + 1, 2**36, 10_000)
        reps.append(verify_div(37, d, xs=xs))
    # k = 1 exhaustively at l = 10; k = f needs l > f, so exhaustively at l = 16
    reps.append(verify_trunc(10, 1))
    reps.append(verify_trunc(16, F))
    for k in (1, F):
        xs = rng.integers(-(2**36) + 1, 2**36, 10_000)
        reps.append(verify_trunc(37, k, xs=xs))
    cases = sum(r.cases for r in reps)
    fails = sum(r.failures for r in reps)
    dev = max(r.max_dev for r in reps)
    report(4, fails == 0, f"div/trunc exact: {cases} cases, {fails} failures, max |error| {dev:g}")
    assert fails == 0 and dev == 0


def test_criterion_05_rexp_accuracy():
    full = verify_rexp(16, F)
    ok16 = full.cases == 1 << 15 and full.max_dev <= 1.435 and full.mean_dev <= 0.40
    rng = np.random.default_rng(5)
    big = rng.integers(8 << F, (1000 << F) + 1, 1000)
    out, _ = run2(lambda c, v: pi_rexp(c, v, F), *share(big, 37))
    zeros = bool(np.all(out.signed() == 0))
    xs = rng.integers(1, (1000 << F) + 1, 10_000)
    out, _ = run2(lambda c, v: pi_rexp(c, v, F), *share(xs, 37, seed=1))
    u = ulp_error(ref_rexp(xs / 2**F), out.signed() / 2**F, UlpConfig(F))
    ok = ok16 and zeros and u.max() <= 1.5
    report(
        5,
        ok,
        f"e^-x l=16: all {full.cases} inputs, max {full.max_dev:.3f} (<= 1.435), avg {full.mean_dev:.3f} (<= 0.40); "
        f"l=37: zero on [8,1000] {zeros}, max {u.max():.3f} over 1e4 (<= 1.5)",
    )
    assert ok


def test_criterion_06_sin_accuracy():
    rows = []
    ok = True
    for frac in (0.5, 0.99, 0.999999, 1.0):
        B = RunConfig("sin", l=21, B=frac).bound()
        rep = verify_sin(21, F, B, n=1 << 14)
        good = rep.max_dev <= 1.5 and 0.45 <= rep.mean_dev <= 0.60
        ok &= good
        rows.append(f"B={frac}: max {rep.max_dev:.3f} avg {rep.mean_dev:.3f}")
    report(6, ok, "sin l=21 f=12, 2^14 inputs each; " + "; ".join(rows))
    assert ok


def test_criterion_07_mw_modeled_cost():
    want = {0.5: ("==", 165), 0.8: ("<=", 591), 0.9999: ("<=", 2153), 0.999999: ("<=", 3005)}
    got = {}
    ok = True
    x0, x1 = share(np.arange(-64, 64), 37)
    for frac, (op, bits) in want.items():
        p = MwParams.from_fraction(37, 37, frac)
        _, led = run2(lambda c, v: pi_mw(c, v, p), x0, x1)
        per = led.modeled_bits / 128
        got[frac] = per
        ok &= per == bits if op == "==" else per <= bits
    half = MwParams(37, 37, 1 << 36)
    _, led = run2(lambda c, v: pi_mw(c, v, half), x0, x1)
    per_half = led.modeled_bits / 128
    closed = LAM * 38 + 14 * 37 + 37
    row = bench_rows(RunConfig("mw", l=37, lp=37, B=1.0, batch=8))[0]
    flagged = "OPEN DISCREPANCY" in row["note"] and "5254" in row["note"]
    ok &= per_half == closed == 5419 and flagged
    summary = ", ".join(f"{k}:{v:g}" for k, v in got.items())
    report(7, ok, f"MW bits/run l=l'=37: {summary}, L/2:{per_half:g} (= {closed}); 5254 flagged: {flagged}")
    assert ok


def test_criterion_08_rexp_modeled_cost():
    rows = []
    ok = True
    for l, f in ((16, 12), (12, 8), (37, 12), (30, 10)):
        x = np.arange(0, 8 << f, (8 << f) // 64)
        _, led = run2(lambda c, v: pi_rexp(c, v, f), *share(x, l))
        per = led.modeled_bits / x.size
        budget = rexp_budget(l, f)
        ok &= per <= budget
        rows.append(f"l={l} f={f}: {per:g} <= {budget}")
    assert rexp_budget(16, 12) == 28 * LAM + 2 * 16 + 4 * 12 + 897
    assert rexp_budget(37, 12) == LAM * (37 + 29) + 18 * 37 + 4 * 12 + 897
    report(8, ok, "rExp bits/run: " + "; ".join(rows))
    assert ok


def test_criterion_09_softmax():
    rng = np.random.default_rng(9)
    z = np.floor(rng.normal(0.0, 3.0, (128, 768)) * 2**F).astype(np.int64)
    t0 = time.monotonic()
    out, _ = run2(lambda c, v: pi_softmax(c, v, F), *share(z, 37))
    dt = time.monotonic() - t0
    got = out.signed() / 2**F
    sums = got.sum(axis=1)
    ref = ref_softmax(z / 2**F)
    top = np.sort(ref, axis=1)[:, -2:]
    clear = (top[:, 1] - top[:, 0]) >= 2.0**-8
    agree = got.argmax(axis=1) == ref.argmax(axis=1)
    ok = bool(np.all(np.abs(sums - 1) <= 0.01)) and bool(np.all(agree[clear])) and dt < 600
    report(
        9,
        ok,
        f"softmax 128x768 l=37 f=12: row sums [{sums.min():.4f}, {sums.max():.4f}], "
        f"argmax {int(agree[clear].sum())}/{int(clear.sum())} rows with margin >= 2^-8, {dt:.1f}s",
    )
    assert ok


def test_criterion_10_transport_equivalence():
    bad = []
    for proto in sorted(TCP_ARGS):
        reports = tcp_pair(proto)
        want, led = memory_run(proto)
        for rep in reports:
            if rep["output"] != want or rep["ledger"]["modeled_bits"] != led.modeled_bits:
                bad.append(proto)
    ok = not bad
    report(10, ok, f"TCP two-process vs in-memory, {len(TCP_ARGS)} protocols: mismatches {sorted(set(bad)) or 'none'}")
    assert ok


def test_criterion_11_rounds():
    rng = np.random.default_rng(11)
    bits = rng.integers(0, 2, 64)
    got = {}
    _, led = run2(lambda c, v: gates.bit_mul(c, v, 37), bits, bits)
    got["BitMul"] = led.rounds
    _, led = run2(lambda c, v: gates.b2a(c, RingArray(v, 1), 37), bits, bits)
    got["B2A"] = led.rounds
    x0, x1 = share(rng.integers(-1000, 1000, 64), 37)
    _, led = run2(lambda c, v: gates.mux(c, v[0], RingArray(v[1], 1)), (x0, bits), (x1, bits))
    got["MUX"] = led.rounds
    _, led = run2(lambda c, v: gates.and_gate(c, v), bits, bits)
    got["AND"] = led.rounds
    ok = all(r == 2 for r in got.values())
    for frac in (0.1, 0.5, 0.74):
        p = MwParams.from_fraction(37, 37, frac)
        assert 8 * p.B < 3 * p.L
        _, led = run2(lambda c, v: pi_mw(c, v, p), x0, x1)
        got[f"MW {frac}"] = led.rounds
        ok &= led.rounds == 2
    for frac in (0.8, 0.9999, 0.999999, 1.0):
        p = MwParams.from_fraction(37, 37, frac)
        _, led = run2(lambda c, v: pi_mw(c, v, p), x0, x1)
        limit = 2 + math.log2(p.lstar)
        got[f"MW {frac} (<= {limit:.2f})"] = led.rounds
        ok &= led.rounds <= limit
    report(11, ok, "rounds: " + ", ".join(f"{k}={v}" for k, v in got.items()))
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
