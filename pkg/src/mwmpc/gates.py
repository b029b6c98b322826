"""Two-party gates: AND, BitMul, B2A, MUX, Comp, DReLU, LUT, SExt, CrossTerm.

Calling convention: every gate is called by both parties with the same
public parameters; each passes its *own* input.  For gates whose inputs are
private values (``and_gate``, ``bit_mul``, ``comp``, ``cross_term``...) P0's
argument is the first operand and P1's the second.  Shares are ``RingArray``
objects; Boolean shares have width 1.

Each gate charges its modelled cost once and runs its internals muted.
"""

from __future__ import annotations

import numpy as np

from .ot import cot, dealer_rot, ot_1ofk, ot_choose, ot_finish, ot_respond
from .ring import RingArray, mask, stack, uniform
from .runtime import (
    PartyCtx,
    cost_and,
    cost_b2a,
    cost_bitmul,
    cost_comp,
    cost_comp_small_and,
    cost_comp_small_ot,
    cost_crossterm,
    cost_drelu,
    cost_lut,
    cost_mul_shared,
    cost_mux,
    cost_sext_constrained,
    cost_sext_general,
)

LEAF_BITS = 4


def _bits(a) -> np.ndarray:
    if isinstance(a, RingArray):
        return a.v.astype(np.int64)
    return np.asarray(a).astype(np.int64)


def _as_ring(a, width: int) -> RingArray:
    if isinstance(a, RingArray):
        return a.resize(width) if a.width != width else a
    return RingArray(np.asarray(a), width)


# ---------------------------------------------------------------------------
# Beaver multiplication (dealer triples)


def _triples(ctx: PartyCtx, shape_a, shape_b, width: int):
    a = [uniform(ctx.dealer, shape_a, width) for _ in range(2)]
    b = [uniform(ctx.dealer, shape_b, width) for _ in range(2)]
    c0 = uniform(ctx.dealer, np.broadcast_shapes(tuple(shape_a), tuple(shape_b)), width)
    p = ctx.party
    if p == 0:
        return a[0], b[0], c0
    c1 = (a[0] + a[1]) * (b[0] + b[1]) - c0
    return a[1], b[1], c1


def beaver_many(ctx: PartyCtx, pairs: list[tuple[RingArray, RingArray]]) -> list[RingArray]:
    """Products of shared pairs in one simultaneous exchange (broadcasting allowed)."""
    trip = [_triples(ctx, x.shape, y.shape, x.width) for x, y in pairs]
    opened = []
    for (x, y), (a, b, _) in zip(pairs, trip):
        opened += [x - a, y - b]
    theirs = ctx.exchange(*opened)
    out = []
    for i, ((x, y), (a, b, c)) in enumerate(zip(pairs, trip)):
        d = opened[2 * i] + theirs[2 * i]
        e = opened[2 * i + 1] + theirs[2 * i + 1]
        z = c + d * b + e * a
        if ctx.is_p0:
            z = z + d * e
        out.append(z)
    return out


def mul_shared(ctx: PartyCtx, x: RingArray, y: RingArray) -> RingArray:
    """Product of two arithmetic shares (shapes may broadcast)."""
    n = int(np.prod(np.broadcast_shapes(x.shape, y.shape)))
    ctx.charge("mul", cost_mul_shared(x.width), n)
    with ctx.muted():
        return beaver_many(ctx, [(x, y)])[0]


# ---------------------------------------------------------------------------
# bit gates


def and_gate(ctx: PartyCtx, bit) -> RingArray:
    """XOR shares of a AND b, with a held by P0 and b by P1."""
    bit = _bits(bit)
    ctx.charge("and", cost_and(), bit.size)
    with ctx.muted():
        if ctx.is_p0:
            r = ctx.rng.integers(0, 2, size=bit.shape).astype(np.uint64)
            msgs = RingArray(np.stack([r, r ^ bit.astype(np.uint64)], axis=-1), 1, reduced=True)
            ot_1ofk(ctx, 0, 2, (1,), messages=[msgs])
            return RingArray(r, 1, reduced=True)
        return ot_1ofk(ctx, 0, 2, (1,), choice=bit)[0]


def bit_mul(ctx: PartyCtx, bit, lp: int) -> RingArray:
    """Arithmetic shares over Z_{2^lp} of a*b, a held by P0 and b by P1."""
    bit = _bits(bit)
    ctx.charge("bitmul", cost_bitmul(lp), bit.size)
    with ctx.muted():
        if ctx.is_p0:
            r = cot(ctx, 0, lp, x=RingArray(bit, lp))
            return -r
        return cot(ctx, 0, lp, choice=bit)


def b2a(ctx: PartyCtx, b: RingArray, l: int) -> RingArray:
    """Boolean share -> arithmetic share of the same bit over Z_{2^l}."""
    ctx.charge("b2a", cost_b2a(l), b.v.size)
    with ctx.muted():
        mine = b.resize(l)
        if ctx.is_p0:
            r = cot(ctx, 0, l, x=mine)
            return mine + r * 2
        t = cot(ctx, 0, l, choice=b.v.astype(np.int64))
        return mine - t * 2


def mux(ctx: PartyCtx, x: RingArray, b: RingArray) -> RingArray:
    """Shares of b ? x : 0 for arithmetic x and Boolean b."""
    l = x.width
    ctx.charge("mux", cost_mux(l), x.v.size)
    with ctx.muted():
        shape = x.shape
        corr_a = dealer_rot(ctx, shape, 2, (l,), sender=0)
        corr_b = dealer_rot(ctx, shape, 2, (l,), sender=1)
        mine_b = b.v.astype(np.uint64)
        r = uniform(ctx.rng, shape, l)
        msgs = stack([x * RingArray(mine_b ^ np.uint64(t), l) - r for t in (0, 1)], axis=-1)
        mine_corr, their_corr = (corr_a, corr_b) if ctx.is_p0 else (corr_b, corr_a)
        pending = ot_choose(ctx, their_corr, mine_b.astype(np.int64))
        ot_respond(ctx, mine_corr, [msgs])
        (got,) = ot_finish(ctx, pending)
        return r + got


# ---------------------------------------------------------------------------
# comparison


def _digits(val: np.ndarray, l: int) -> np.ndarray:
    q = -(-l // LEAF_BITS)
    v = val.astype(np.uint64)
    return np.stack([((v >> np.uint64(LEAF_BITS * i)) & np.uint64(15)).astype(np.int64) for i in range(q)], axis=-1)


def _comp_core(ctx: PartyCtx, val: np.ndarray, l: int, w: int) -> RingArray:
    """Shares over Z_{2^w} of 1{x < y}; x held by P0, y by P1 (l-bit values)."""
    shape = val.shape
    dig = _digits(val, l)
    q = dig.shape[-1]
    k = 1 << LEAF_BITS
    corr = dealer_rot(ctx, shape + (q,), k, (w, w), sender=0)
    if ctx.is_p0:
        lt = uniform(ctx.rng, shape + (q,), w)
        eq = uniform(ctx.rng, shape + (q,), w)
        v = np.arange(k, dtype=np.int64)
        lt_tab = RingArray((dig[..., None] < v).astype(np.uint64), w) - RingArray(lt.v[..., None], w, reduced=True)
        eq_tab = RingArray((dig[..., None] == v).astype(np.uint64), w) - RingArray(eq.v[..., None], w, reduced=True)
        ot_respond(ctx, corr, [lt_tab, eq_tab])
    else:
        lt, eq = ot_finish(ctx, ot_choose(ctx, corr, dig))
    # combine blocks, least significant first
    blocks_lt = [lt[..., i] for i in range(q)]
    blocks_eq = [eq[..., i] for i in range(q)]
    while len(blocks_lt) > 1:
        n = len(blocks_lt)
        last = n // 2 == 1 and n == 2
        pairs = []
        for i in range(0, n - 1, 2):
            pairs.append((blocks_eq[i + 1], blocks_lt[i]))
            if not last:
                pairs.append((blocks_eq[i + 1], blocks_eq[i]))
        prods = beaver_many(ctx, pairs)
        new_lt, new_eq = [], []
        step = 1 if last else 2
        for j, i in enumerate(range(0, n - 1, 2)):
            new_lt.append(blocks_lt[i + 1] + prods[step * j])
            if not last:
                new_eq.append(prods[step * j + 1])
        if n % 2:
            new_lt.append(blocks_lt[-1])
            new_eq.append(blocks_eq[-1])
        blocks_lt, blocks_eq = new_lt, new_eq
    return blocks_lt[0]


def comp(ctx: PartyCtx, val, l: int, out_width: int = 1) -> RingArray:
    """1{x < y} for an l-bit x held by P0 and y held by P1.

    ``out_width == 1`` returns XOR shares; a wider ``out_width`` returns
    arithmetic shares of the bit directly (charged as Comp followed by B2A).
    """
    val = np.asarray(val.v if isinstance(val, RingArray) else val)
    if l < 1:
        raise ValueError("comparison width must be >= 1")
    n = val.size
    ctx.charge("comp", cost_comp(l), n)
    if out_width > 1:
        ctx.charge("b2a", cost_b2a(out_width), n)
    with ctx.muted():
        return _comp_core(ctx, val, l, out_width)


def comp_small(ctx: PartyCtx, val, n: int, lp: int, variant: str = "and") -> RingArray:
    """Arithmetic shares of 1{x < y} for x, y in [0, n)."""
    val = np.asarray(val).astype(np.int64)
    if np.any(val >= n) or np.any(val < 0):
        raise ValueError("input outside the small domain")
    cnt = val.size
    if variant == "and":
        ctx.charge("comp_small", cost_comp_small_and(n, lp), cnt)
        if n < 2:
            return RingArray.zeros(val.shape, lp)
        with ctx.muted():
            i = np.arange(n - 1)
            bits = (val[..., None] == i) if ctx.is_p0 else (val[..., None] > i)
            terms = bit_mul(ctx, bits.astype(np.int64), lp)
            return RingArray(terms.v.sum(axis=-1), lp)
    if variant == "ot":
        b = max(1, (n - 1).bit_length())
        ctx.charge("comp_small", cost_comp_small_ot(b, lp), cnt)
        with ctx.muted():
            k = 1 << b
            if ctx.is_p0:
                r = ctx.rng.integers(0, 2, size=val.shape).astype(np.uint64)
                tab = (val[..., None] < np.arange(k)).astype(np.uint64) ^ r[..., None]
                ot_1ofk(ctx, 0, k, (1,), messages=[RingArray(tab, 1, reduced=True)])
                share = RingArray(r, 1, reduced=True)
            else:
                share = ot_1ofk(ctx, 0, k, (1,), choice=val)[0]
            return b2a(ctx, share, lp)
    raise ValueError(f"unknown variant {variant!r}")


def drelu(ctx: PartyCtx, x: RingArray) -> RingArray:
    """XOR shares of 1{int(x) >= 0}."""
    l = x.width
    ctx.charge("drelu", cost_drelu(l), x.v.size)
    with ctx.muted():
        msb = x.shr(l - 1).resize(1)
        if l == 1:
            carry = RingArray.zeros(x.shape, 1)
        else:
            low = x.resize(l - 1)
            mine = (RingArray.full(x.shape, mask(l - 1), l - 1) - low) if ctx.is_p0 else low
            carry = _comp_core(ctx, mine.v, l - 1, 1)
        out = msb + carry
        return out + 1 if ctx.is_p0 else out


# ---------------------------------------------------------------------------
# lookup table


def _rotate(table: RingArray, idx: np.ndarray, M: int) -> RingArray:
    """Row-wise T[(v + idx) mod M] for v = 0..M-1."""
    pos = (np.arange(M, dtype=np.int64) + idx[..., None]) % M
    return RingArray(np.take_along_axis(table.v, pos, axis=-1), table.width, reduced=True)


def lut(ctx: PartyCtx, tables: list[RingArray], index: RingArray, mode: str = "shared") -> list[RingArray]:
    """Shares of T[I] for an index shared over Z_M (M = 2^index.width).

    ``tables`` are fields shaped (..., M) holding this party's part of the
    table.  ``mode`` tells both parties who actually owns table content:
    ``"p1"`` / ``"p0"`` (the other party's entries are all zero), ``"public"``
    (both hold the same table) or ``"shared"`` (additive shares on both sides).
    """
    M = 1 << index.width
    widths = tuple(t.width for t in tables)
    for t in tables:
        if t.shape[-1] != M:
            raise ValueError(f"table must have {M} entries")
    ctx.charge("lut", cost_lut(M, sum(widths)), index.v.size)
    idx = index.v.astype(np.int64)
    shape = index.shape
    with ctx.muted():
        if mode == "public":
            mode = "p1"
            if ctx.is_p0:
                tables = [RingArray.zeros(t.shape, t.width) for t in tables]
        owners = {"p1": (1,), "p0": (0,), "shared": (0, 1)}[mode]
        corrs = {s: dealer_rot(ctx, shape, M, widths, sender=s) for s in owners}
        out = [RingArray.zeros(shape, w) for w in widths]
        pending = None
        their = 1 - ctx.party
        if their in owners:
            pending = ot_choose(ctx, corrs[their], idx)
        if ctx.party in owners:
            msgs = []
            for t, o in zip(tables, range(len(tables))):
                r = uniform(ctx.rng, shape, t.width)
                out[o] = r
                msgs.append(_rotate(t, idx, M) - RingArray(r.v[..., None], t.width, reduced=True))
            ot_respond(ctx, corrs[ctx.party], msgs)
        if pending is not None:
            got = ot_finish(ctx, pending)
            out = [a + g for a, g in zip(out, got)]
        return out


# ---------------------------------------------------------------------------
# sign extension and multiplication


def _mw_quarter(ctx: PartyCtx, x: RingArray, lp: int) -> RingArray:
    """MW(x) over Z_{2^lp} for |x| < 2^{l-2}: one BitMul."""
    l = x.width
    L = 1 << l
    B = L >> 2
    if ctx.is_p0:
        u = x.unsigned()
        delta = (u >= B).astype(np.int64)
        xs = (u - B) % L
        a = (xs > L // 2).astype(np.int64)
        m = bit_mul(ctx, a, lp)
        return m + RingArray(delta, lp)
    b = (x.unsigned() >= L // 2).astype(np.int64)
    return bit_mul(ctx, b, lp)


def sext(ctx: PartyCtx, x: RingArray, lp: int, constrained: bool = True) -> RingArray:
    """Signed extension from width l to lp.

    The constrained variant requires int(x) in [-2^{l-2}, 2^{l-2}).
    """
    l = x.width
    if lp <= l:
        raise ValueError("target width must exceed source width")
    n = x.v.size
    if constrained:
        ctx.charge("sext", cost_sext_constrained(l, lp), n)
        with ctx.muted():
            mw = _mw_quarter(ctx, x, lp - l)
            return x.resize(lp) - mw.resize(lp).shl(l)
    ctx.charge("sext", cost_sext_general(l, lp), n)
    with ctx.muted():
        half = 1 << (l - 1)
        y = x + half if ctx.is_p0 else x
        mine = (RingArray.full(x.shape, mask(l), l) - y) if ctx.is_p0 else y
        wrap = _comp_core(ctx, mine.v, l, lp - l)
        out = y.resize(lp) - wrap.resize(lp).shl(l)
        return out - half if ctx.is_p0 else out


def sext_nonneg(ctx: PartyCtx, x: RingArray, lp: int) -> RingArray:
    """Constrained extension for values known to lie in [0, 2^{l-1})."""
    off = 1 << (x.width - 2)
    y = x - off if ctx.is_p0 else x
    z = sext(ctx, y, lp, constrained=True)
    return z + off if ctx.is_p0 else z


def cross_term(ctx: PartyCtx, val, m: int, n: int) -> RingArray:
    """Shares over Z_{2^{m+n}} of x*y for x (m bits) at P0 and y (n bits) at P1."""
    W = m + n
    if isinstance(val, RingArray):
        val = val.unsigned() if val.width > 64 else val.v
    val = np.asarray(val)
    cnt = val.size
    ctx.charge("crossterm", cost_crossterm(m, n), cnt)
    recv = 0 if m <= n else 1
    nbits = m if recv == 0 else n
    with ctx.muted():
        weights = RingArray(np.asarray([1 << j for j in range(nbits)], dtype=object), W)
        if ctx.party == recv:
            v = val.astype(np.uint64)
            bits = np.stack([(v >> np.uint64(j)) & np.uint64(1) for j in range(nbits)], axis=-1)
            t = cot(ctx, 1 - recv, W, choice=bits.astype(np.int64))
            return RingArray((t * weights).v.sum(axis=-1), W)
        corr = RingArray(np.repeat(np.asarray(val)[..., None], nbits, axis=-1), W)
        r = cot(ctx, 1 - recv, W, x=corr)
        return -RingArray((r * weights).v.sum(axis=-1), W)


def mul_signed(ctx: PartyCtx, val, m: int, n: int, msb_x_zero: bool = False, msb_y_zero: bool = False) -> RingArray:
    """Shares over Z_{2^{m+n}} of int(x)*int(y), x (m bits) at P0, y (n bits) at P1."""
    W = m + n
    val = np.asarray(val.v if isinstance(val, RingArray) else val)
    z = cross_term(ctx, val, m, n)
    mine_msb = ((val.astype(np.uint64) >> np.uint64((m if ctx.is_p0 else n) - 1)) & np.uint64(1)).astype(np.int64)
    if not msb_x_zero:
        # MSB(x) * y * 2^m, y needed only mod 2^n
        if ctx.is_p0:
            t = cot(ctx, 1, n, choice=mine_msb)
        else:
            t = -cot(ctx, 1, n, x=RingArray(val, n))
        z = z - t.resize(W).shl(m)
    if not msb_y_zero:
        if ctx.is_p0:
            t = -cot(ctx, 0, m, x=RingArray(val, m))
        else:
            t = cot(ctx, 0, m, choice=mine_msb)
        z = z - t.resize(W).shl(n)
    return z


def mul_by_public(ctx: PartyCtx, x: RingArray, c: int, n: int, constrained: bool = True) -> RingArray:
    """Shares over Z_{2^{m+n}} of int(x) * c for a public n-bit signed c."""
    W = x.width + n
    y = sext(ctx, x, W, constrained=constrained)
    return y * (c % (1 << W))
