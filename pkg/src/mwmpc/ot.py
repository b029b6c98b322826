"""Oblivious transfer on top of dealer-supplied random OT.

The dealer hands the sender k random pads per instance and the receiver a
random index c together with pad c.  Derandomisation costs one message each
way: the receiver sends e = b - c mod k, the sender answers with every
message masked by the pad at offset (j - e) mod k.

Messages may carry several fields of different widths.  The split into
``choose`` / ``respond`` / ``finish`` lets callers run OTs in both directions
inside the same two rounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ring import RingArray, uniform
from .runtime import PartyCtx, cost_cot, cost_ot2, cost_otk


@dataclass
class RotCorr:
    role: str  # "sender" or "receiver"
    k: int
    widths: tuple
    pads: list | None = None  # sender: per field, shape (..., k)
    c: np.ndarray | None = None  # receiver
    pad_c: list | None = None


def _idx_width(k: int) -> int:
    return max(1, (k - 1).bit_length())


def dealer_rot(ctx: PartyCtx, shape: tuple, k: int, widths, sender: int) -> RotCorr:
    """Draw random-OT correlations; both parties must call this in lockstep."""
    widths = tuple(widths)
    shape = tuple(shape)
    pads = [uniform(ctx.dealer, shape + (k,), w) for w in widths]
    c = ctx.dealer.integers(0, k, size=shape, dtype=np.int64)
    if ctx.party == sender:
        return RotCorr("sender", k, widths, pads=pads)
    pad_c = [RingArray(np.take_along_axis(p.v, c[..., None], axis=-1)[..., 0], p.width, reduced=True) for p in pads]
    return RotCorr("receiver", k, widths, c=c, pad_c=pad_c)


@dataclass
class _Pending:
    corr: RotCorr
    choice: np.ndarray


def ot_choose(ctx: PartyCtx, corr: RotCorr, choice) -> _Pending:
    choice = np.asarray(choice, dtype=np.int64)
    e = (choice - corr.c) % corr.k
    ctx.send(RingArray(e.astype(np.uint64), _idx_width(corr.k), reduced=True))
    return _Pending(corr, choice)


def ot_respond(ctx: PartyCtx, corr: RotCorr, messages: list[RingArray]) -> None:
    if len(messages) != len(corr.widths):
        raise ValueError("field count mismatch")
    (e,) = ctx.recv()
    e = e.v.astype(np.int64)
    idx = (np.arange(corr.k, dtype=np.int64) - e[..., None]) % corr.k
    out = []
    for m, p, w in zip(messages, corr.pads, corr.widths):
        if m.width != w:
            raise ValueError(f"message width {m.width} != declared {w}")
        if m.shape != p.shape:
            raise ValueError(f"message shape {m.shape} != {p.shape}")
        shifted = RingArray(np.take_along_axis(p.v, idx, axis=-1), w, reduced=True)
        out.append(m + shifted)
    ctx.send(*out)


def ot_finish(ctx: PartyCtx, pending: _Pending) -> list[RingArray]:
    ys = ctx.recv()
    c = pending.choice[..., None]
    res = []
    for y, pc in zip(ys, pending.corr.pad_c):
        sel = RingArray(np.take_along_axis(y.v, c, axis=-1)[..., 0], y.width, reduced=True)
        res.append(sel - pc)
    return res


def ot_1ofk(
    ctx: PartyCtx,
    sender: int,
    k: int,
    widths,
    messages: list[RingArray] | None = None,
    choice=None,
    shape: tuple | None = None,
):
    """1-of-k OT.  Sender passes ``messages`` (fields shaped (..., k)),
    receiver passes ``choice``.  Returns the chosen fields to the receiver and
    None to the sender."""
    if not 2 <= k <= 1 << 16:
        raise ValueError("k must be in [2, 2^16]")
    widths = tuple(widths)
    if ctx.party == sender:
        shape = messages[0].shape[:-1]
    else:
        choice = np.asarray(choice, dtype=np.int64)
        if np.any((choice < 0) | (choice >= k)):
            raise ValueError("choice index out of range")
        shape = choice.shape
    count = int(np.prod(shape)) if shape else 1
    if k == 2:
        ctx.charge("ot2", cost_ot2(sum(widths)), count)
    else:
        ctx.charge("otk", cost_otk(k, sum(widths)), count)
    corr = dealer_rot(ctx, shape, k, widths, sender)
    if ctx.party == sender:
        ot_respond(ctx, corr, messages)
        return None
    return ot_finish(ctx, ot_choose(ctx, corr, choice))


def ot_1of2(ctx: PartyCtx, sender: int, width: int, m0: RingArray | None = None, m1: RingArray | None = None, choice=None):
    if ctx.party == sender:
        if m0.shape != m1.shape:
            raise ValueError("message length mismatch")
        msgs = [RingArray(np.stack([m0.v, m1.v], axis=-1), width, reduced=True)]
        ot_1ofk(ctx, sender, 2, (width,), messages=msgs)
        return None
    return ot_1ofk(ctx, sender, 2, (width,), choice=choice)[0]


# correlated OT --------------------------------------------------------------


def cot_messages(ctx: PartyCtx, x: RingArray) -> tuple[RingArray, RingArray]:
    """Sender side of a COT: (r, [r, r + x]) with r fresh."""
    r = uniform(ctx.rng, x.shape, x.width)
    return r, RingArray(np.stack([r.v, (r + x).v], axis=-1), x.width, reduced=True)


def cot(ctx: PartyCtx, sender: int, width: int, x: RingArray | None = None, choice=None) -> RingArray:
    """Correlated OT over Z_{2^width}: sender gets r, receiver gets r + b*x."""
    if ctx.party == sender:
        count = x.v.size
        ctx.charge("cot", cost_cot(width), count)
        with ctx.muted():
            r, msgs = cot_messages(ctx, x)
            ot_1ofk(ctx, sender, 2, (width,), messages=[msgs])
        return r
    choice = np.asarray(choice, dtype=np.int64)
    ctx.charge("cot", cost_cot(width), choice.size)
    with ctx.muted():
        return ot_1ofk(ctx, sender, 2, (width,), choice=choice)[0]
