"""Two-party additive / XOR sharing and the plaintext MW reference functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ring import RingArray, RingElem, to_signed, uniform


@dataclass(frozen=True)
class ArithShare:
    value: RingElem
    party: int

    def __post_init__(self) -> None:
        if self.party not in (0, 1):
            raise ValueError("party must be 0 or 1")

    @property
    def width(self) -> int:
        return self.value.width


@dataclass(frozen=True)
class BoolShare:
    bit: int
    party: int

    def __post_init__(self) -> None:
        if self.bit not in (0, 1) or self.party not in (0, 1):
            raise ValueError("bit and party must be 0 or 1")


def share(x: RingElem, rng: np.random.Generator) -> tuple[ArithShare, ArithShare]:
    x0 = RingElem(int(uniform(rng, 1, x.width).v[0]), x.width)
    return ArithShare(x0, 0), ArithShare(x - x0, 1)


def reconstruct(s0: ArithShare, s1: ArithShare) -> RingElem:
    if s0.width != s1.width:
        raise ValueError("width mismatch")
    if {s0.party, s1.party} != {0, 1}:
        raise ValueError("need one share from each party")
    return s0.value + s1.value


def share_bit(bit: int, rng: np.random.Generator) -> tuple[BoolShare, BoolShare]:
    b0 = int(rng.integers(0, 2))
    return BoolShare(b0, 0), BoolShare(b0 ^ bit, 1)


def reconstruct_bit(b0: BoolShare, b1: BoolShare) -> int:
    return b0.bit ^ b1.bit


# vector forms used by the protocol layer


def share_array(x: RingArray, rng: np.random.Generator) -> tuple[RingArray, RingArray]:
    x0 = uniform(rng, x.shape, x.width)
    return x0, x - x0


def reconstruct_array(x0: RingArray, x1: RingArray) -> RingArray:
    return x0 + x1


# plaintext references


def _ints(x0, x1):
    if isinstance(x0, RingElem):
        if x0.width != x1.width:
            raise ValueError("width mismatch")
        return x0.value, x1.value, x0.width
    raise TypeError("expected RingElem operands")


def wrap_plain(x0: RingElem, x1: RingElem) -> int:
    a, b, l = _ints(x0, x1)
    return int(a + b >= 1 << l)


def msb_plain(x: RingElem) -> int:
    return x.msb


def mw_plain(x0: RingElem, x1: RingElem) -> int:
    return msb_plain(x0 + x1) + wrap_plain(x0, x1)


def mw_plain_array(x0: np.ndarray, x1: np.ndarray, l: int) -> np.ndarray:
    """Vectorised MW for unsigned residue arrays (l <= 62)."""
    x0 = np.asarray(x0, dtype=np.int64)
    x1 = np.asarray(x1, dtype=np.int64)
    s = x0 + x1
    L = 1 << l
    x = s & (L - 1)
    return (x >= L // 2).astype(np.int64) + (s >= L).astype(np.int64)


def int_value(x0: RingElem, x1: RingElem) -> int:
    return to_signed(x0 + x1)
