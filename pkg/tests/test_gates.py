import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import run2, share
from mwmpc import gates
from mwmpc.ring import RingArray
from mwmpc.runtime import cost_and, cost_b2a, cost_bitmul, cost_comp, cost_drelu, cost_mux


def _pairwise(x, y):
    """Inputs for protocols where P0 holds x and P1 holds y."""
    return np.asarray(x), np.asarray(y)


def test_and_truth_table():
    a = np.array([0, 0, 1, 1])
    b = np.array([0, 1, 0, 1])
    out, led = run2(lambda c, v: gates.and_gate(c, v), a, b)
    assert out.tolist() == [0, 0, 0, 1]
    assert led.rounds == 2
    assert led.modeled_bits == 4 * cost_and()


def test_bit_mul_examples():
    out, led = run2(lambda c, v: gates.bit_mul(c, v, 2), np.array([1, 1, 0]), np.array([1, 0, 1]))
    assert out.tolist() == [1, 0, 0]
    assert led.rounds == 2
    _, led = run2(lambda c, v: gates.bit_mul(c, v, 37), np.array([1]), np.array([1]))
    assert led.modeled_bits == cost_bitmul(37) == 165


def test_comp_examples():
    out, _ = run2(lambda c, v: gates.comp(c, v, 4), np.array([3, 6]), np.array([6, 6]))
    assert out.tolist() == [1, 0]


@pytest.mark.parametrize("l", [1, 3, 6])
def test_comp_exhaustive(l):
    a, b = np.meshgrid(np.arange(1 << l), np.arange(1 << l), indexing="ij")
    out, led = run2(lambda c, v: gates.comp(c, v, l), a.ravel(), b.ravel())
    assert np.array_equal(out.v.astype(np.int64), (a.ravel() < b.ravel()).astype(np.int64))
    assert led.modeled_bits == a.size * cost_comp(l)


@pytest.mark.parametrize("l,rounds", [(4, 2), (16, 4), (37, 6)])
def test_comp_rounds(l, rounds):
    rng = np.random.default_rng(l)
    a = rng.integers(0, 1 << l, 50)
    b = rng.integers(0, 1 << l, 50)
    out, led = run2(lambda c, v: gates.comp(c, v, l, out_width=l), a, b)
    assert np.array_equal(out.v.astype(np.int64), (a < b).astype(np.int64))
    assert led.rounds <= rounds + 2


@pytest.mark.parametrize("variant", ["and", "ot"])
@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_comp_small_exhaustive(variant, n):
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    out, _ = run2(lambda c, v: gates.comp_small(c, v, n, 8, variant), a.ravel(), b.ravel())
    assert np.array_equal(out.v.astype(np.int64), (a.ravel() < b.ravel()).astype(np.int64))


def test_comp_small_examples():
    out, led = run2(lambda c, v: gates.comp_small(c, v, 2, 8, "and"), np.array([0]), np.array([1]))
    assert out.tolist() == [1]
    assert led.calls["bitmul"] == 0  # charged as a unit
    out, _ = run2(lambda c, v: gates.comp_small(c, v, 3, 8), np.array([2]), np.array([2]))
    assert out.tolist() == [0]
    with pytest.raises(ValueError):
        run2(lambda c, v: gates.comp_small(c, v, 3, 8), np.array([3]), np.array([0]))


def test_drelu_examples():
    x0 = RingArray([0, 100, 7], 8)
    x1 = RingArray([44, 100, 249], 8)  # 44, 200 (= -56), 0
    out, led = run2(lambda c, x: gates.drelu(c, x), x0, x1)
    assert out.tolist() == [1, 0, 1]
    assert led.modeled_bits == 3 * cost_drelu(8)


def test_drelu_exhaustive_l6():
    xs = np.arange(-32, 32)
    out, _ = run2(lambda c, x: gates.drelu(c, x), *share(np.repeat(xs, 8), 6))
    assert np.array_equal(out.v.astype(np.int64), (np.repeat(xs, 8) >= 0).astype(np.int64))


def test_b2a_random():
    rng = np.random.default_rng(0)
    b = rng.integers(0, 2, 10_000)
    b0 = rng.integers(0, 2, 10_000)
    out, led = run2(lambda c, v: gates.b2a(c, RingArray(v, 1), 37), b0, b0 ^ b)
    assert np.array_equal(out.v.astype(np.int64), b)
    assert led.rounds == 2
    assert led.modeled_bits == 10_000 * cost_b2a(37)


def test_mux_exhaustive_l4():
    xs, bs = np.meshgrid(np.arange(16), np.arange(2), indexing="ij")
    xs, bs = xs.ravel(), bs.ravel()
    x0, x1 = share(xs, 4)
    r = np.random.default_rng(1).integers(0, 2, xs.size)
    out, led = run2(
        lambda c, v: gates.mux(c, v[0], RingArray(v[1], 1)), (x0, r), (x1, r ^ bs)
    )
    assert np.array_equal(out.v.astype(np.int64), xs * bs)
    assert led.rounds == 2
    assert led.modeled_bits == xs.size * cost_mux(4)


def test_mux_examples():
    x0, x1 = share([7, 7], 8)
    out, _ = run2(lambda c, v: gates.mux(c, v[0], RingArray(v[1], 1)), (x0, [1, 0]), (x1, [0, 0]))
    assert out.tolist() == [7, 0]


def test_lut_modes():
    T = RingArray(np.array([[10, 20, 30, 0]]), 8)
    zero = RingArray.zeros((1, 4), 8)
    i0, i1 = RingArray([1], 2), RingArray([1], 2)  # index 2
    for mode, t0, t1 in (("p1", zero, T), ("p0", T, zero), ("public", T, T)):
        out, led = run2(lambda c, v: gates.lut(c, [v[0]], v[1], mode)[0], (t0, i0), (t1, i1))
        assert out.tolist() == [30], mode
        assert led.rounds <= 2
    # additively shared table
    s0 = RingArray(np.array([[3, 4, 5, 6]]), 8)
    out, _ = run2(lambda c, v: gates.lut(c, [v[0]], v[1], "shared")[0], (s0, i0), (T - s0, i1))
    assert out.tolist() == [30]


def test_lut_cost():
    t = RingArray(np.zeros((1, 4), dtype=np.int64), 45)
    idx = RingArray([0], 2)
    _, led = run2(lambda c, v: gates.lut(c, [v], idx, "p1"), t, t)
    assert led.modeled_bits == 436


@given(st.integers(1, 6), st.integers(1, 60), st.data())
def test_lut_property(m, n, data):
    M = 1 << m
    tab = data.draw(st.lists(st.integers(0, 2**n - 1), min_size=M, max_size=M))
    i = data.draw(st.integers(0, M - 1))
    r = data.draw(st.integers(0, M - 1))
    T = RingArray(np.asarray(tab, dtype=object)[None, :], n)
    zero = RingArray.zeros((1, M), n)
    out, _ = run2(
        lambda c, v: gates.lut(c, [v[0]], v[1], "p1")[0],
        (zero, RingArray([r], m)),
        (T, RingArray([i - r], m)),
    )
    assert out.tolist() == [tab[i]]


def test_sext_examples():
    out, led = run2(lambda c, x: gates.sext(c, x, 16), *share([-3, 0, 63, -64], 8))
    assert out.signed().tolist() == [-3, 0, 63, -64]
    assert led.rounds == 2


def test_sext_exhaustive_constrained():
    xs = np.repeat(np.arange(-16, 17), 30)
    out, _ = run2(lambda c, x: gates.sext(c, x, 10), *share(xs, 6))
    assert np.array_equal(out.signed(), xs)


def test_sext_general_full_range():
    xs = np.repeat(np.arange(-32, 32), 20)
    out, _ = run2(lambda c, x: gates.sext(c, x, 11, constrained=False), *share(xs, 6))
    assert np.array_equal(out.signed(), xs)


def test_sext_wide_target():
    xs = np.array([-(2**30), 5, 2**30 - 1])
    out, _ = run2(lambda c, x: gates.sext(c, x, 100), *share(xs, 33))
    assert [int(v) for v in out.signed()] == xs.tolist()


def test_cross_term_examples():
    out, _ = run2(lambda c, v: gates.cross_term(c, v, 4, 4), np.array([0, 3]), np.array([9, 5]))
    assert out.tolist() == [0, 15]


def test_cross_term_exhaustive_5():
    a, b = np.meshgrid(np.arange(32), np.arange(32), indexing="ij")
    out, _ = run2(lambda c, v: gates.cross_term(c, v, 5, 5), a.ravel(), b.ravel())
    assert np.array_equal(out.v.astype(np.int64), a.ravel() * b.ravel())


@given(st.integers(1, 40), st.integers(1, 40), st.data())
def test_cross_term_property(m, n, data):
    x = data.draw(st.integers(0, 2**m - 1))
    y = data.draw(st.integers(0, 2**n - 1))
    out, _ = run2(lambda c, v: gates.cross_term(c, v, m, n), np.array([x], dtype=np.uint64), np.array([y], dtype=np.uint64))
    assert out.tolist() == [x * y]


def test_mul_signed_examples():
    out, _ = run2(lambda c, v: gates.mul_signed(c, v, 4, 4), np.array([14]), np.array([3]))
    assert out.tolist() == [250]  # (-2) * 3 mod 256
    out, _ = run2(lambda c, v: gates.mul_signed(c, v, 4, 4, msb_y_zero=True), np.array([11]), np.array([1]))
    assert out.signed().tolist() == [-5]


def test_mul_signed_exhaustive_4():
    a, b = np.meshgrid(np.arange(16), np.arange(16), indexing="ij")
    a, b = a.ravel(), b.ravel()
    out, _ = run2(lambda c, v: gates.mul_signed(c, v, 4, 4), a, b)
    sa = np.where(a >= 8, a - 16, a)
    sb = np.where(b >= 8, b - 16, b)
    assert np.array_equal(out.signed(), sa * sb)


def test_mul_shared_broadcast():
    x0, x1 = share([[3], [-4]], 20)
    y0, y1 = share([[1, 2, -5]], 20)
    out, led = run2(lambda c, v: gates.mul_shared(c, v[0], v[1]), (x0, y0), (x1, y1))
    assert out.signed().tolist() == [[3, 6, -15], [-4, -8, 20]]
    assert led.rounds == 1


def test_mul_by_public():
    out, _ = run2(lambda c, x: gates.mul_by_public(c, x, 2**10 - 3, 12), *share([5, -7], 10))
    assert out.signed().tolist() == [5 * 1021, -7 * 1021]
