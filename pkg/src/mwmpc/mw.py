"""MW coefficient protocols.

MW(x) = MSB(x) + Wrap(x0, x1, L) is the integer in {0, 1, 2} for which
int(x) = x0 + x1 - MW(x) * L.  When |x| < B for a public B <= L/2 the pair
(x0, x1) avoids a band of width L - 2B, and that slack lets the wrap of the
shifted share x0* = x0 - B be decided by a comparison on far fewer bits
than l (or by a handful of BitMuls when the slack is large).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gates import bit_mul, comp
from .ring import RingArray
from .runtime import PartyCtx, cost_b2a, cost_bitmul, cost_comp


@dataclass(frozen=True)
class MwParams:
    """Public parameters of one MW evaluation.

    ``B`` is the magnitude bound (|x| < B), ``lp`` the output ring width.
    """

    l: int
    lp: int
    B: int

    def __post_init__(self) -> None:
        if self.l < 2:
            raise ValueError("l must be >= 2")
        if self.lp < 2:
            raise ValueError("MW takes values up to 2; need lp >= 2")
        if not 0 < self.B <= self.L // 2:
            raise ValueError(f"B must lie in (0, 2^(l-1)], got {self.B}")

    @classmethod
    def from_fraction(cls, l: int, lp: int, frac: float) -> "MwParams":
        """B given as a fraction of L/2, as in cost-table row labels."""
        return cls(l, lp, max(1, int(frac * (1 << (l - 1)))))

    @property
    def L(self) -> int:
        return 1 << self.l

    @property
    def gap(self) -> int:
        """Width L - 2B of the band that valid share sums avoid."""
        return self.L - 2 * self.B

    @property
    def K(self) -> int | None:
        return self.L // self.gap if self.gap else None

    @property
    def n_terms(self) -> int:
        """BitMuls in the AND-based variant: floor((L-1)/gap)."""
        return (self.L - 1) // self.gap

    @property
    def lstar(self) -> int:
        """Comparison width: bits needed for floor(L/gap), or l at B = L/2."""
        return self.K.bit_length() if self.gap else self.l

    @property
    def branch(self) -> str:
        if not self.gap:
            return "half"
        return "and" if 8 * self.B < 3 * self.L else "comp"

    def modeled_bits(self, branch: str | None = None) -> int:
        branch = branch or self.branch
        if branch == "and":
            return self.n_terms * cost_bitmul(self.lp)
        return cost_comp(self.lstar) + cost_b2a(self.lp)


# ---------------------------------------------------------------------------
# constrained comparison


def _gt(ctx: PartyCtx, val: np.ndarray, bits: int, out_width: int = 1) -> RingArray:
    """1{a > b} for a at P0 and b at P1, both < 2^bits."""
    top = (1 << bits) - 1
    return comp(ctx, top - np.asarray(val, dtype=np.int64), bits, out_width)


def comp_constrained(ctx: PartyCtx, val, A: int, l: int) -> RingArray:
    """XOR shares of 1{y < x} for x at P0 and y at P1.

    Requires x - y in [A, L) or [-L, 0); the comparison then runs on
    floor(x/A) and floor(y/A), which fit in far fewer bits.
    """
    L = 1 << l
    if not 0 < A < L:
        raise ValueError("gap A must satisfy 0 < A < L")
    bits = ((L - 1) // A).bit_length() or 1
    q = np.asarray(val, dtype=np.int64) // A
    return _gt(ctx, q, bits)


def wrap_constrained(ctx: PartyCtx, share: RingArray, A: int, out_width: int = 1) -> RingArray:
    """Shares of Wrap(x0, x1, L) when x0 + x1 avoids [L, L + A)."""
    l = share.width
    L = 1 << l
    if not 0 < A < L:
        raise ValueError("gap A must satisfy 0 < A < L")
    bits = (L // A).bit_length()
    v = share.v.astype(np.int64)
    q = (L - v) // A if ctx.is_p0 else v // A
    return comp(ctx, q, bits, out_width)


# ---------------------------------------------------------------------------
# MW


def _local_terms(ctx: PartyCtx, x: RingArray, p: MwParams):
    """P0: (delta, u) with u = floor((L - x0*)/gap); P1: (None, v = floor(x1/gap))."""
    v = x.v.astype(np.int64)
    if ctx.is_p0:
        delta = (v >= p.B).astype(np.int64)
        xs = (v - p.B) % p.L
        u = (p.L - xs) // p.gap if p.gap else xs
        return delta, u
    return None, (v // p.gap if p.gap else v)


def pi_mw(ctx: PartyCtx, x: RingArray, p: MwParams, branch: str | None = None) -> RingArray:
    """Shares over Z_{2^lp} of MW(x), valid whenever |x| < B."""
    if x.width != p.l:
        raise ValueError(f"share width {x.width} != l = {p.l}")
    if p.l > 62:
        raise ValueError("pi_mw supports l <= 62")
    branch = branch or p.branch
    if branch not in ("and", "comp", "half"):
        raise ValueError(f"unknown branch {branch!r}")
    if (branch == "half") != (p.gap == 0):
        raise ValueError("the B = L/2 branch is only valid at B = L/2")
    delta, t = _local_terms(ctx, x, p)
    if branch == "and":
        i = np.arange(p.n_terms)
        bits = (t[..., None] == i) if ctx.is_p0 else (t[..., None] > i)
        m = bit_mul(ctx, bits.astype(np.int64), p.lp)
        mstar = RingArray(m.v.sum(axis=-1), p.lp)
    elif branch == "comp":
        mstar = comp(ctx, t, p.lstar, p.lp)
    else:
        # wrap of (x0*, x1): x1 > L - 1 - x0*
        mine = (p.L - 1 - t) if ctx.is_p0 else t
        mstar = comp(ctx, mine, p.l, p.lp)
    if ctx.is_p0:
        return mstar + RingArray(delta, p.lp)
    return mstar


def pi_mw_conv(ctx: PartyCtx, x: RingArray, l: int, lp: int = 2) -> RingArray:
    """Shares over Z_{2^lp} of MW(z, 2^l) with z_i = x_i mod 2^l.

    ``x`` lives on a larger ring Z_{2^lr} (lr > l) and must satisfy
    |x| < 2^{l-1} there.  Both BitMuls run in the same two rounds.
    """
    lr = x.width
    if lr < l + 1:
        raise ValueError("source ring must be at least one bit wider than l")
    if lp < 2:
        raise ValueError("lp must be >= 2")
    Ly = 1 << (l + 1)
    y = x.resize(l + 1).v.astype(np.int64)
    quarter = Ly // 4
    yhat = (y + (1 << l)) % Ly
    if ctx.is_p0:
        # MW(y, 2^{l+1}) with B = Ly/4: delta_y plus one AND term
        delta_y = (y >= quarter).astype(np.int64)
        ys = (y - quarter) % Ly
        a_y = (ys > Ly // 2).astype(np.int64)
        delta = (yhat >= quarter).astype(np.int64)
        a_hat = ((yhat - quarter) % Ly >= (1 << l)).astype(np.int64)
        m = bit_mul(ctx, np.stack([a_y, a_hat], axis=-1), lp)
        mw_y = m[..., 0] + RingArray(delta_y, lp)
        # MW(z, 2^l) = MW(y) - (1 - delta - Mhat*)
        return mw_y - RingArray(1 - delta, lp) + m[..., 1]
    b_y = (y >= Ly // 2).astype(np.int64)
    b_hat = (yhat >= (1 << l)).astype(np.int64)
    m = bit_mul(ctx, np.stack([b_y, b_hat], axis=-1), lp)
    return m[..., 0] + m[..., 1]
