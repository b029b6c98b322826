"""Arithmetic over Z_{2^l} and fixed-point encoding.

Two representations live here:

* ``RingElem``: a single residue with an explicit width (1..128 bits).
* ``RingArray``: a vector of residues sharing one width.  Widths up to 64
  are stored in ``uint64`` numpy arrays; wider rings fall back to object
  arrays of Python ints so that intermediate widths around 80 bits stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

MAX_WIDTH = 128


def mask(width: int) -> int:
    return (1 << width) - 1


def _check_width(width: int) -> None:
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"ring width must be in [1, {MAX_WIDTH}], got {width}")


# ---------------------------------------------------------------------------
# scalar elements


@dataclass(frozen=True)
class FixedPointMeta:
    width: int
    frac_bits: int

    def __post_init__(self) -> None:
        _check_width(self.width)
        if not 0 <= self.frac_bits < self.width:
            raise ValueError("frac_bits must satisfy 0 <= f < l")


@dataclass(frozen=True)
class RingElem:
    value: int
    width: int

    def __post_init__(self) -> None:
        _check_width(self.width)
        object.__setattr__(self, "value", int(self.value) & mask(self.width))

    def _same(self, other: "RingElem") -> None:
        if not isinstance(other, RingElem) or other.width != self.width:
            raise ValueError("width mismatch")

    def __add__(self, other: "RingElem") -> "RingElem":
        self._same(other)
        return RingElem(self.value + other.value, self.width)

    def __sub__(self, other: "RingElem") -> "RingElem":
        self._same(other)
        return RingElem(self.value - other.value, self.width)

    def __mul__(self, other: "RingElem") -> "RingElem":
        self._same(other)
        return RingElem(self.value * other.value, self.width)

    def __neg__(self) -> "RingElem":
        return RingElem(-self.value, self.width)

    def shr_logical(self, k: int) -> "RingElem":
        return RingElem(self.value >> k, self.width)

    def resize(self, width: int) -> "RingElem":
        return RingElem(self.value, width)

    @property
    def msb(self) -> int:
        return self.value >> (self.width - 1)


def to_signed(x: RingElem) -> int:
    """int(x) = uint(x) - MSB(x) * 2^l."""
    return x.value - (x.msb << x.width)


def encode_fix(x_real: float, meta: FixedPointMeta) -> RingElem:
    """floor(x * 2^f) mod 2^l."""
    bound = 2.0 ** (meta.width - meta.frac_bits - 1)
    if not abs(x_real) < bound:
        raise ValueError(f"{x_real} is outside the representable range (+-{bound})")
    return RingElem(math.floor(x_real * 2**meta.frac_bits), meta.width)


def decode_real(x: RingElem, meta: FixedPointMeta) -> float:
    if x.width != meta.width:
        raise ValueError("width mismatch")
    return to_signed(x) / 2**meta.frac_bits


def ring_arith(a: RingElem, b: Union[RingElem, int, None], op: str) -> RingElem:
    """Dispatch for the named ring operations.

    ``b`` is the second operand for add/sub/mul, the shift amount for
    ``shr_logical``, the target width for ``resize`` and ignored for ``neg``.
    """
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "neg":
        return -a
    if op == "shr_logical":
        return a.shr_logical(int(b))
    if op == "resize":
        return a.resize(int(b))
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# vectors


def _dtype(width: int):
    return np.uint64 if width <= 64 else object


def _coerce(values, width: int) -> np.ndarray:
    """Reduce arbitrary integer-like input mod 2^width into the storage dtype."""
    m = mask(width)
    if isinstance(values, np.ndarray) and values.dtype != object:
        if values.dtype == np.bool_:
            values = values.astype(np.uint64)
        if width <= 64:
            # two's complement wrap of signed ints is exactly reduction mod 2^64
            return values.astype(np.uint64) & np.uint64(m)
        return _to_object(values) & m
    arr = np.asarray(values, dtype=object)
    arr = arr & m if arr.ndim else np.asarray(int(arr) & m, dtype=object)
    if width <= 64:
        return arr.astype(np.uint64)
    return arr


def _to_object(a: np.ndarray) -> np.ndarray:
    if a.dtype == object:
        return a
    if np.issubdtype(a.dtype, np.signedinteger):
        return a.astype(object)
    return a.astype(np.uint64).astype(object)


class RingArray:
    """Vector (any shape) of residues mod 2^width."""

    __slots__ = ("v", "width")

    def __init__(self, values, width: int, *, reduced: bool = False):
        _check_width(width)
        self.width = width
        if reduced:
            self.v = values
        else:
            self.v = _coerce(values, width)

    # construction helpers -------------------------------------------------
    @classmethod
    def zeros(cls, shape, width: int) -> "RingArray":
        if width <= 64:
            return cls(np.zeros(shape, dtype=np.uint64), width, reduced=True)
        z = np.empty(shape, dtype=object)
        z.fill(0)
        return cls(z, width, reduced=True)

    @classmethod
    def full(cls, shape, value: int, width: int) -> "RingArray":
        z = cls.zeros(shape, width)
        z.v[...] = int(value) & mask(width) if width > 64 else np.uint64(int(value) & mask(width))
        return z

    # basic container protocol ---------------------------------------------
    @property
    def shape(self):
        return self.v.shape

    def __len__(self) -> int:
        return len(self.v)

    def __getitem__(self, idx) -> "RingArray":
        return RingArray(self.v[idx], self.width, reduced=True)

    def reshape(self, *shape) -> "RingArray":
        return RingArray(self.v.reshape(*shape), self.width, reduced=True)

    def copy(self) -> "RingArray":
        return RingArray(self.v.copy(), self.width, reduced=True)

    def __repr__(self) -> str:
        return f"RingArray(width={self.width}, v={self.v!r})"

    def __eq__(self, other) -> bool:  # exact equality, used in tests
        return (
            isinstance(other, RingArray)
            and other.width == self.width
            and other.shape == self.shape
            and bool(np.all(self.v == other.v))
        )

    __hash__ = None

    # arithmetic ------------------------------------------------------------
    def _operand(self, other) -> np.ndarray:
        if isinstance(other, RingArray):
            if other.width != self.width:
                raise ValueError(f"width mismatch: {self.width} vs {other.width}")
            return other.v
        if isinstance(other, (int, np.integer)):
            o = int(other) & mask(self.width)
            return np.uint64(o) if self.width <= 64 else o
        return _coerce(np.asarray(other), self.width)

    def _wrap(self, raw) -> "RingArray":
        if self.width == 64:
            return RingArray(raw, 64, reduced=True)
        if self.width < 64:
            return RingArray(raw & np.uint64(mask(self.width)), self.width, reduced=True)
        return RingArray(raw & mask(self.width), self.width, reduced=True)

    def __add__(self, other) -> "RingArray":
        return self._wrap(self.v + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other) -> "RingArray":
        return self._wrap(self.v - self._operand(other))

    def __rsub__(self, other) -> "RingArray":
        return self._wrap(self._operand(other) - self.v)

    def __mul__(self, other) -> "RingArray":
        return self._wrap(self.v * self._operand(other))

    __rmul__ = __mul__

    def __neg__(self) -> "RingArray":
        return self._wrap(np.uint64(0) - self.v if self.width <= 64 else -self.v)

    def __xor__(self, other) -> "RingArray":
        return self._wrap(self.v ^ self._operand(other))

    def __and__(self, other) -> "RingArray":
        return self._wrap(self.v & self._operand(other))

    def shr(self, k: int) -> "RingArray":
        """Logical shift of the raw residue (width unchanged)."""
        if k == 0:
            return self.copy()
        return RingArray(self.v >> (np.uint64(k) if self.width <= 64 else k), self.width, reduced=True)

    def shl(self, k: int) -> "RingArray":
        return self._wrap(self.v << (np.uint64(k) if self.width <= 64 else k))

    # width changes ---------------------------------------------------------
    def resize(self, width: int) -> "RingArray":
        """Reduce (smaller width) or zero-extend (larger width) the residue."""
        if width == self.width:
            return self.copy()
        if width > 64 and self.width <= 64:
            return RingArray(_to_object(self.v), width, reduced=True)
        if width <= 64 and self.width > 64:
            return RingArray((self.v & mask(width)).astype(np.uint64), width, reduced=True)
        if width < self.width:
            return self._wrap_to(width)
        return RingArray(self.v, width, reduced=True)

    def _wrap_to(self, width: int) -> "RingArray":
        if width <= 64:
            return RingArray(self.v & np.uint64(mask(width)), width, reduced=True)
        return RingArray(self.v & mask(width), width, reduced=True)

    # views -----------------------------------------------------------------
    def signed(self) -> np.ndarray:
        """int(x) per element: int64 when width <= 62, Python ints otherwise."""
        if self.width <= 62:
            half = np.uint64(1 << (self.width - 1))
            s = self.v.astype(np.int64)
            return np.where(self.v >= half, s - np.int64(1 << self.width), s)
        o = _to_object(self.v)
        half = 1 << (self.width - 1)
        return np.where(o >= half, o - (1 << self.width), o)

    def unsigned(self) -> np.ndarray:
        """Residues as Python-int object array (exact for every width)."""
        return _to_object(self.v)

    def bits(self) -> np.ndarray:
        """Raw residues as uint8 (only meaningful for width 1)."""
        return self.v.astype(np.uint8)

    def msb(self) -> np.ndarray:
        return (self.shr(self.width - 1).v).astype(np.uint8)

    def tolist(self) -> list:
        return [int(a) for a in np.asarray(self.v).ravel()]


def ring_array(values: Iterable[int], width: int) -> RingArray:
    return RingArray(np.asarray(list(values), dtype=object) if not isinstance(values, np.ndarray) else values, width)


def concat(parts: list[RingArray], axis: int = 0) -> RingArray:
    w = parts[0].width
    if any(p.width != w for p in parts):
        raise ValueError("width mismatch")
    return RingArray(np.concatenate([p.v for p in parts], axis=axis), w, reduced=True)


def stack(parts: list[RingArray], axis: int = 0) -> RingArray:
    w = parts[0].width
    if any(p.width != w for p in parts):
        raise ValueError("width mismatch")
    return RingArray(np.stack([p.v for p in parts], axis=axis), w, reduced=True)


def floor_div(x: RingArray, d: int) -> np.ndarray:
    """floor(residue / d) on the unsigned residue, as an exact integer array."""
    if x.width <= 64:
        return x.v // np.uint64(d)
    return x.v // d


def uniform(rng: np.random.Generator, shape, width: int) -> RingArray:
    """Uniform residues mod 2^width from a numpy Generator."""
    shape = (shape,) if isinstance(shape, (int, np.integer)) else tuple(shape)
    n = int(np.prod(shape)) if shape else 1
    limbs = (width + 63) // 64
    raw = rng.bit_generator.random_raw(n * limbs).astype(np.uint64)
    if limbs == 1:
        v = raw.reshape(shape)
        if width < 64:
            v = v & np.uint64(mask(width))
        return RingArray(v, width, reduced=True)
    raw = raw.reshape(n, limbs).astype(object)
    acc = raw[:, 0].copy()
    for i in range(1, limbs):
        acc = acc | (raw[:, i] << (64 * i))
    return RingArray((acc & mask(width)).reshape(shape), width, reduced=True)
