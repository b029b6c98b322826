"""Function protocols built on MW.

Everything here follows one pattern.  Since int(x) = x0 + x1 - MW(x) * L,
a function with an addition law splits into pieces that each party can
evaluate on its own share, plus a factor depending only on MW(x) in
{0, 1, 2}.  That factor is folded into a three-entry public table which is
read obliviously with the shared MW as index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gates import b2a, comp, cross_term, drelu, lut, mul_shared, mux, sext, sext_nonneg
from .mw import MwParams, pi_mw, pi_mw_conv
from .ring import RingArray, stack
from .runtime import PartyCtx

RealFn = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# truncation and division


def pi_trunc(ctx: PartyCtx, x: RingArray, k: int, B: int | None = None, exact: bool = True) -> RingArray:
    """Shares of floor(int(x) / 2^k) on the same ring; exact when |x| < B.

    With ``exact=False`` the carry out of the low k bits is not computed.
    P0 adds one instead, which rounds x / 2^k up with probability equal to
    its fractional part (unbiased rounding driven by the share randomness).
    """
    l = x.width
    if not 0 < k < l:
        raise ValueError("shift must satisfy 0 < k < l")
    p = MwParams(l, max(k, 2), B if B is not None else 1 << (l - 1))
    mw = pi_mw(ctx, x, p)
    out = x.shr(k) - mw.resize(l).shl(l - k)
    if not exact:
        return out + 1 if ctx.is_p0 else out
    low = x.resize(k)
    mine = (RingArray.full(x.shape, (1 << k) - 1, k) - low) if ctx.is_p0 else low
    return out + comp(ctx, mine.v, k, l)


@dataclass(frozen=True)
class DivParams:
    l: int
    d: int
    B: int | None = None

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError("divisor must be >= 2")
        if self.d >= 1 << self.l:
            raise ValueError("divisor must be below 2^l")
        if self.B is not None and not 0 < self.B <= 1 << (self.l - 1):
            raise ValueError("B must lie in (0, 2^(l-1)]")

    @property
    def ld(self) -> int:
        return (self.d - 1).bit_length()

    @property
    def bound(self) -> int:
        return self.B if self.B is not None else 1 << (self.l - 1)


def pi_div(ctx: PartyCtx, x: RingArray, p: DivParams) -> RingArray:
    """Shares of floor(int(x) / d), exact whenever |x| < B."""
    l, d, ld = p.l, p.d, p.ld
    if x.width != l:
        raise ValueError("share width does not match DivParams.l")
    L = 1 << l
    mw = pi_mw(ctx, x, MwParams(l, 2, p.bound))
    v = x.v.astype(np.int64)
    shape = x.shape
    if ctx.is_p0:
        tq = RingArray.zeros(shape + (4,), l)
        te = RingArray.zeros(shape + (4,), ld + 1)
    else:
        j = np.arange(3, dtype=np.int64)
        shifted = v[..., None] - j * L
        q = np.concatenate([shifted // d, np.zeros(shape + (1,), np.int64)], axis=-1)
        r = np.concatenate([shifted % d, np.zeros(shape + (1,), np.int64)], axis=-1)
        tq = RingArray(q, l)
        te = RingArray(r, ld + 1)
    xq, xe = lut(ctx, [tq, te], mw, mode="p1")
    if ctx.is_p0:
        xe = xe + RingArray(v % d - d, ld + 1)
    eps = b2a(ctx, drelu(ctx, xe), l)
    out = xq + eps
    return out + RingArray(v // d, l) if ctx.is_p0 else out


# ---------------------------------------------------------------------------
# sum-of-products evaluator


@dataclass(frozen=True)
class Term:
    """One product f(x0/2^f) * g(x1/2^f) * h(-j L / 2^f).

    Terms whose ``h`` is the same function object are grouped: their
    products are added before the shared extension and table step.
    """

    f: RealFn
    g: RealFn
    h: Callable[[float], float]


@dataclass(frozen=True)
class FuncDescriptor:
    """Parameters for ``eval_sop``.

    ``enc0`` / ``enc1`` are the (width, frac) encodings of the local values
    of P0 and P1.  ``scale0`` / ``scale1`` multiply the local values before
    encoding (to use headroom); ``post`` multiplies the whole result.  Both
    are compensated in the table.  With ``signed`` the local values are
    offset by 2^{w-2} so the cross products never see a set MSB.
    """

    name: str
    terms: tuple
    l: int
    f: int
    enc0: tuple
    enc1: tuple
    h_bits: int
    out_width: int
    out_frac: int
    value_bits: int
    signed: bool = False
    scale0: float = 1.0
    scale1: float = 1.0
    post: float = 1.0
    guard: int = 0
    B: int | None = None

    @property
    def groups(self) -> list:
        out: dict = {}
        for i, t in enumerate(self.terms):
            out.setdefault(id(t.h), []).append(i)
        return list(out.values())

    @property
    def table_bits(self) -> int:
        return self.value_bits + self.guard

    def coeffs(self) -> np.ndarray:
        """Real table coefficients c[g, j] before fixed-point scaling."""
        L = 1 << self.l
        c = np.zeros((len(self.groups), 3))
        for gi, idx in enumerate(self.groups):
            h = self.terms[idx[0]].h
            for j in range(3):
                c[gi, j] = h(-j * L / 2**self.f) * self.post / (self.scale0 * self.scale1)
        return c

    def plan(self) -> tuple[int, list, list]:
        """(extension width, per-entry table fracs, per-entry shifts)."""
        (w0, f0), (w1, f1) = self.enc0, self.enc1
        W = w0 + w1
        top = self.out_frac + self.guard
        c = self.coeffs()
        full = []
        for j in range(3):
            m = float(np.max(np.abs(c[:, j])))
            lead = math.frexp(m)[1] - 1 if m > 0 else 0
            full.append(self.h_bits - 1 - int(self.signed) - lead)
        shifts = [f0 + f1 + fh - top for fh in full]
        T = max(W + self.h_bits, min(shifts) + self.table_bits)
        cap = T - self.table_bits - (f0 + f1) + top
        fracs = [min(fh, cap) for fh in full]
        shifts = [f0 + f1 + fh - top for fh in fracs]
        if min(shifts) < 0:
            raise ValueError("table precision exceeds the product precision")
        return T, fracs, shifts


def _encode_local(desc: FuncDescriptor, share: RingArray, party: int) -> np.ndarray:
    w, fr = desc.enc0 if party == 0 else desc.enc1
    scale = desc.scale0 if party == 0 else desc.scale1
    t = share.v.astype(np.float64) / 2**desc.f
    cols = []
    for term in desc.terms:
        fn = term.f if party == 0 else term.g
        cols.append(np.rint(np.asarray(fn(t), dtype=np.float64) * scale * 2**fr))
    enc = np.stack(cols, axis=-1).astype(np.int64)
    if desc.signed:
        off = 1 << (w - 2)
        if np.any(np.abs(enc) > off):
            raise OverflowError(f"{desc.name}: local value exceeds the signed encoding")
        enc = enc + off
    elif np.any(enc < 0) or np.any(enc >= 1 << w):
        raise OverflowError(f"{desc.name}: local value exceeds the encoding width")
    return enc


def eval_sop(ctx: PartyCtx, desc: FuncDescriptor, x: RingArray, mw_src: RingArray | None = None) -> RingArray:
    """Evaluate sum_i f_i(x0/2^f) g_i(x1/2^f) h_i(-MW L/2^f) on shares of x.

    ``mw_src`` optionally gives the same secret on a wider ring; MW is then
    obtained by ring conversion instead of a direct evaluation.
    """
    if x.width != desc.l:
        raise ValueError(f"{desc.name}: input must be shared over {desc.l} bits")
    (w0, f0), (w1, f1) = desc.enc0, desc.enc1
    W = w0 + w1
    T, fracs, shifts = desc.plan()
    nb = desc.table_bits

    # local evaluation and cross products
    enc = _encode_local(desc, x, ctx.party)
    prod = cross_term(ctx, enc.astype(np.uint64), w0, w1)
    if desc.signed:
        o0, o1 = 1 << (w0 - 2), 1 << (w1 - 2)
        if ctx.is_p0:
            prod = prod - RingArray(enc, W) * o1 + o0 * o1
        else:
            prod = prod - RingArray(enc, W) * o0
    groups = desc.groups
    sums = stack([RingArray(prod.v[..., idx].sum(axis=-1), W) for idx in groups], axis=-1)
    wide = sext(ctx, sums, T) if desc.signed else sext_nonneg(ctx, sums, T)

    # MW of the input
    if mw_src is None:
        B = desc.B if desc.B is not None else 1 << (desc.l - 1)
        mw = pi_mw(ctx, x, MwParams(desc.l, 2, B))
    else:
        mw = pi_mw_conv(ctx, mw_src, desc.l, 2)

    # per-MW table of locally scaled and shifted products
    c = desc.coeffs()
    entries = []
    for j in range(3):
        acc = RingArray.zeros(x.shape, T)
        for gi in range(len(groups)):
            acc = acc + wide[..., gi] * int(round(c[gi, j] * 2 ** fracs[j]))
        if ctx.is_p0 and shifts[j] > 0:
            acc = acc + (1 << shifts[j])
        entries.append(acc.shr(shifts[j]).resize(nb))
    entries.append(RingArray.zeros(x.shape, nb))
    (y,) = lut(ctx, [stack(entries, axis=-1)], mw, mode="shared")

    if desc.guard:
        y = pi_trunc(ctx, y, desc.guard, 1 << (nb - 2)).resize(desc.value_bits)
    vb, lp = desc.value_bits, desc.out_width
    if lp > vb:
        return sext(ctx, y, lp) if desc.signed else sext_nonneg(ctx, y, lp)
    return y.resize(lp)


# ---------------------------------------------------------------------------
# exponential


@dataclass(frozen=True)
class ExpParams:
    """Parameters of a^x for x shared over l = f + alpha bits.

    P0 encodes its local factor with ``fA`` fractional bits on ``lA`` bits;
    P1 uses one extra bit of each.  Both factors are pre-multiplied by
    constants that use the headroom of their encodings.
    """

    a: float = math.e
    f: int = 12
    alpha: int = 3
    fA: int = 10
    fM: int = 32
    out_width: int | None = None
    out_frac: int | None = None

    def __post_init__(self) -> None:
        if self.a <= 1:
            raise ValueError("base must exceed 1")
        if self.mu < 2:
            raise ValueError("base too close to 1 for this input range (mu < 2)")

    @property
    def l(self) -> int:
        return self.f + self.alpha

    @property
    def span(self) -> float:
        """log2 of the largest local factor: 2^alpha * log2(a)."""
        return 2**self.alpha * math.log2(self.a)

    @property
    def mu(self) -> int:
        return math.ceil(self.span) + 1

    @property
    def lA(self) -> int:
        return self.mu + self.fA

    @property
    def lM(self) -> int:
        return self.fM + 2

    @property
    def lp(self) -> int:
        return self.out_width if self.out_width is not None else self.l

    @property
    def fp(self) -> int:
        return self.out_frac if self.out_frac is not None else self.f

    def offsets(self) -> tuple[float, float]:
        """Headroom multipliers (log2) for the two local factors."""
        r = self.span
        o0 = (self.mu - r) - 0.02
        o1 = (2 * (math.ceil(r) - r) + 1) - o0 - 0.02
        return o0, min(o1, self.mu - r - 0.02)


def exp_descriptor(p: ExpParams, post: float = 1.0) -> FuncDescriptor:
    lna = math.log(p.a)
    o0, o1 = p.offsets()

    def power(t):
        return np.exp(t * lna)

    def table(c):
        return math.exp(c * lna)

    vb = min(p.lp, 2 * p.mu + 2 + p.fp)
    return FuncDescriptor(
        name="exp",
        terms=(Term(power, power, table),),
        l=p.l,
        f=p.f,
        enc0=(p.lA, p.fA),
        enc1=(p.lA + 1, p.fA + 1),
        h_bits=p.lM,
        out_width=p.lp,
        out_frac=p.fp,
        value_bits=vb,
        scale0=2.0**o0,
        scale1=2.0**o1,
        post=post,
    )


def pi_exp(ctx: PartyCtx, x: RingArray, p: ExpParams, mw_src: RingArray | None = None, post: float = 1.0) -> RingArray:
    """Shares of a^{Real(x)} (times ``post``) at (lp, fp); x is over f + alpha bits."""
    return eval_sop(ctx, exp_descriptor(p, post), x, mw_src)


def pi_rexp(ctx: PartyCtx, x: RingArray, f: int) -> RingArray:
    """Shares of e^{-Real(x)} for non-negative x on l >= f + 4 bits.

    Outputs keep the input ring and precision; inputs of 8 or more give 0.
    """
    l = x.width
    if l < f + 4:
        raise ValueError("rExp needs l >= f + 4")
    # z' = 4 - x - 2^-f lies in [-4, 4) for x in [0, 8)
    shift = 4 * (1 << f) - 1
    zp = -x + shift if ctx.is_p0 else -x
    z = zp.resize(f + 3)
    p = ExpParams(math.e, f, 3, out_width=l, out_frac=f)
    y = pi_exp(ctx, z, p, mw_src=zp, post=math.exp(-4 + 2.0**-f))
    if l > f + 4:
        lim = 8 * (1 << f) - 1
        keep = drelu(ctx, (-x + lim) if ctx.is_p0 else -x)
        y = mux(ctx, y, keep)
    return y


# ---------------------------------------------------------------------------
# sine


@dataclass(frozen=True)
class SinParams:
    l: int = 21
    f: int = 12
    ft: int = 14
    fT: int = 30
    guard: int = 6
    B: int | None = None
    out_width: int | None = None
    out_frac: int | None = None

    @property
    def lt(self) -> int:
        return self.ft + 2

    @property
    def lT(self) -> int:
        return self.fT + 2

    @property
    def lp(self) -> int:
        return self.out_width if self.out_width is not None else self.l

    @property
    def fp(self) -> int:
        return self.out_frac if self.out_frac is not None else self.f


def sin_descriptor(p: SinParams) -> FuncDescriptor:
    # sin(a + b + c) = (sa cb + ca sb) cos c + (ca cb - sa sb) sin c
    def neg_sin(t):
        return -np.sin(t)

    terms = (
        Term(np.sin, np.cos, math.cos),
        Term(np.cos, np.sin, math.cos),
        Term(np.cos, np.cos, math.sin),
        Term(neg_sin, np.sin, math.sin),
    )
    return FuncDescriptor(
        name="sin",
        terms=terms,
        l=p.l,
        f=p.f,
        enc0=(p.lt, p.ft),
        enc1=(p.lt, p.ft),
        h_bits=p.lT,
        out_width=p.lp,
        out_frac=p.fp,
        value_bits=p.fp + 5,
        signed=True,
        guard=p.guard,
        B=p.B,
    )


def pi_sin(ctx: PartyCtx, x: RingArray, p: SinParams) -> RingArray:
    """Shares of sin(Real(x)) at (lp, fp)."""
    return eval_sop(ctx, sin_descriptor(p), x)


# ---------------------------------------------------------------------------
# max, reciprocal, softmax


def secure_max(ctx: PartyCtx, z: RingArray) -> RingArray:
    """Shares of the maximum of int(z) along the last axis."""
    cur = z
    while cur.shape[-1] > 1:
        n = cur.shape[-1]
        a, b = cur[..., 0 : n - 1 : 2], cur[..., 1:n:2]
        diff = a - b
        best = b + mux(ctx, diff, drelu(ctx, diff))
        if n % 2:
            best = RingArray(np.concatenate([best.v, cur.v[..., -1:]], axis=-1), z.width, reduced=True)
        cur = best
    return cur[..., 0]


RECIP_RING = 60
RECIP_FRAC = 22
RECIP_STEPS = 3


def reciprocal(ctx: PartyCtx, s: RingArray, f: int) -> RingArray:
    """Shares of 1/Real(s) for Real(s) >= 1, at precision 2^-22 on s's ring.

    A piecewise-constant guess 2/3 * 2^-k on [2^k, 2^{k+1}) keeps the
    relative error below 1/3; three Newton steps bring it under 2e-4.
    """
    l = s.width
    R, fD = RECIP_RING, RECIP_FRAC
    if l - 1 > R - 2 or l - f - 1 < 1:
        raise ValueError("unsupported ring for reciprocal")
    wide = sext(ctx, s, R)
    kmax = l - f - 1

    def w(k):
        return int(round(2 / 3 * 2.0**-k * 2**fD))

    if kmax > 1:
        ks = np.arange(1, kmax)
        probe = RingArray(np.repeat(wide.v[..., None], kmax - 1, axis=-1), R, reduced=True)
        if ctx.is_p0:
            probe = probe - RingArray(np.asarray([1 << (k + f) for k in ks], dtype=object), R)
        ge = b2a(ctx, drelu(ctx, probe), R)
        steps = RingArray(np.asarray([w(k) - w(k - 1) for k in ks], dtype=object), R)
        y = RingArray((ge * steps).v.sum(axis=-1), R)
    else:
        y = RingArray.zeros(s.shape, R)
    if ctx.is_p0:
        y = y + w(0)
    quarter = 1 << (R - 2)
    for _ in range(RECIP_STEPS):
        e = pi_trunc(ctx, mul_shared(ctx, wide, y), f, quarter)
        t = (-e + (2 << fD)) if ctx.is_p0 else -e
        y = pi_trunc(ctx, mul_shared(ctx, y, t), fD, quarter)
    return y.resize(l)


def pi_softmax(ctx: PartyCtx, z: RingArray, f: int) -> RingArray:
    """Row-wise softmax of z (shape (..., n)) at the input's precision."""
    l = z.width
    m = secure_max(ctx, z)
    gap = RingArray(m.v[..., None], l, reduced=True) - z
    e = pi_rexp(ctx, gap, f)
    total = RingArray(e.v.sum(axis=-1), l)
    d = reciprocal(ctx, total, f)
    prod = mul_shared(ctx, e, RingArray(d.v[..., None], l, reduced=True))
    # unbiased rounding keeps the row sums centred on 1
    return pi_trunc(ctx, prod, RECIP_FRAC, 1 << (l - 2), exact=False)
