"""Named protocol runs shared by the CLI and the transport tests.

A run is fully determined by its ``RunConfig``: inputs and shares are drawn
from the seed, so two separate processes (one per party) derive the same
instance and each keeps its own half.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import gates
from .funcs import DivParams, ExpParams, SinParams, pi_div, pi_exp, pi_rexp, pi_sin, pi_softmax, pi_trunc
from .mw import MwParams, pi_mw, pi_mw_conv
from .oracle import UlpConfig, ref_div, ref_exp, ref_rexp, ref_sin, ref_softmax, ref_trunc, ulp_error
from .ring import RingArray, uniform
from .sharing import mw_plain_array


@dataclass(frozen=True)
class RunConfig:
    protocol: str
    l: int = 16
    f: int = 12
    lp: int | None = None
    B: float = 1.0  # fraction of L/2 unless > 1, then absolute
    d: int = 7
    k: int = 12
    lr: int | None = None
    batch: int = 1024
    rows: int = 4
    n: int = 768
    seed: int = 0

    def bound(self, l: int | None = None) -> int:
        l = l or self.l
        half = 1 << (l - 1)
        if self.B > 1:
            b = int(self.B)
            if b > half:
                raise ValueError(f"B = {b} exceeds 2^(l-1)")
            return b
        if self.B <= 0:
            raise ValueError("B must be positive")
        return max(1, int(self.B * half))

    def digest(self) -> bytes:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).digest()


@dataclass
class Instance:
    plain: np.ndarray
    in0: object
    in1: object
    meta: dict


@dataclass(frozen=True)
class Entry:
    make: Callable[[RunConfig, np.random.Generator], Instance]
    program: Callable
    # (config, instance, reconstructed output) -> (deviation array, failure mask)
    check: Callable
    approx: bool = False


def _share(x: np.ndarray, l: int, rng) -> tuple[RingArray, RingArray]:
    X = RingArray(np.asarray(x, dtype=np.int64), l)
    x0 = uniform(rng, X.shape, l)
    return x0, X - x0


def _exact(got: np.ndarray, want: np.ndarray):
    got = np.asarray(got, dtype=np.int64)
    want = np.asarray(want, dtype=np.int64)
    return np.abs(got - want).astype(np.float64), got != want


def _ulp(got: RingArray, want: np.ndarray, frac: int):
    u = ulp_error(want, got.signed().astype(np.float64) / 2**frac, UlpConfig(frac))
    return np.asarray(u), np.zeros(np.shape(u), bool)


# --- MW family -------------------------------------------------------------


def _mw_make(cfg, rng):
    B = cfg.bound()
    x = rng.integers(-B + 1, B, size=cfg.batch)
    x0, x1 = _share(x, cfg.l, rng)
    return Instance(x, x0, x1, {"B": B})


def _mw_program(cfg):
    p = MwParams(cfg.l, cfg.lp or 2, cfg.bound())
    return lambda ctx, x: pi_mw(ctx, x, p)


def _mw_check(cfg, inst, out):
    want = mw_plain_array(inst.in0.v.astype(np.int64), inst.in1.v.astype(np.int64), cfg.l)
    return _exact(out.v.astype(np.int64), want)


def _conv_make(cfg, rng):
    lr = cfg.lr or cfg.l + 4
    h = 1 << (cfg.l - 1)
    x = rng.integers(-h + 1, h, size=cfg.batch)
    x0, x1 = _share(x, lr, rng)
    return Instance(x, x0, x1, {"lr": lr})


def _conv_program(cfg):
    return lambda ctx, x: pi_mw_conv(ctx, x, cfg.l, cfg.lp or 2)


def _conv_check(cfg, inst, out):
    m = 1 << cfg.l
    want = mw_plain_array(inst.in0.v.astype(np.int64) % m, inst.in1.v.astype(np.int64) % m, cfg.l)
    return _exact(out.v.astype(np.int64) % (1 << (cfg.lp or 2)), want)


# --- exact arithmetic ------------------------------------------------------


def _int_make(cfg, rng):
    B = cfg.bound()
    x = rng.integers(-B + 1, B, size=cfg.batch)
    x0, x1 = _share(x, cfg.l, rng)
    return Instance(x, x0, x1, {"B": B})


def _div_program(cfg):
    p = DivParams(cfg.l, cfg.d, cfg.bound())
    return lambda ctx, x: pi_div(ctx, x, p)


def _trunc_program(cfg):
    return lambda ctx, x: pi_trunc(ctx, x, cfg.k, cfg.bound())


# --- approximate functions -------------------------------------------------


def _rexp_make(cfg, rng):
    hi = min(8 << cfg.f, 1 << (cfg.l - 1))
    x = rng.integers(0, hi, size=cfg.batch)
    if cfg.l > cfg.f + 4:
        # a quarter of the batch beyond the cut-off
        big = rng.integers(8 << cfg.f, min(1000 << cfg.f, 1 << (cfg.l - 2)), size=cfg.batch // 4)
        x[: big.size] = big
    x0, x1 = _share(x, cfg.l, rng)
    return Instance(x, x0, x1, {})


def _exp_make(cfg, rng):
    l = cfg.f + 3
    x = rng.integers(-(1 << (l - 1)), 1 << (l - 1), size=cfg.batch)
    x0, x1 = _share(x, l, rng)
    return Instance(x, x0, x1, {})


def _exp_check(cfg, inst, out):
    # local factors carry ~f bits of relative precision, so above 1 the error
    # is measured in units of the output's own magnitude
    want = ref_exp(inst.plain / 2**cfg.f, 2.0)
    u, bad = _ulp(out, want, cfg.f)
    return u / np.maximum(1.0, want), bad


def _exp_program(cfg):
    # a^x for x in [-4, 4) with a = 2 keeps the result inside 16 bits
    p = ExpParams(2.0, cfg.f, 3, out_width=cfg.lp or cfg.f + 8, out_frac=cfg.f)
    return lambda ctx, x: pi_exp(ctx, x, p)


def _sin_make(cfg, rng):
    B = cfg.bound()
    x = rng.integers(-B + 1, B, size=cfg.batch)
    x0, x1 = _share(x, cfg.l, rng)
    return Instance(x, x0, x1, {"B": B})


def _sin_program(cfg):
    p = SinParams(l=cfg.l, f=cfg.f, B=cfg.bound())
    return lambda ctx, x: pi_sin(ctx, x, p)


def _softmax_make(cfg, rng):
    z = np.floor(rng.normal(0.0, 2.0, size=(cfg.rows, cfg.n)) * 2**cfg.f).astype(np.int64)
    z0, z1 = _share(z, cfg.l, rng)
    return Instance(z, z0, z1, {})


def _softmax_check(cfg, inst, out):
    got = out.signed().astype(np.float64) / 2**cfg.f
    want = ref_softmax(inst.plain / 2**cfg.f)
    dev = np.abs(got.sum(axis=-1) - 1.0)
    bad = (dev > 0.01) | (got.argmax(axis=-1) != want.argmax(axis=-1))
    return dev, bad


# --- gates -----------------------------------------------------------------


def _comp_make(cfg, rng):
    x = rng.integers(0, 1 << cfg.l, size=cfg.batch)
    y = rng.integers(0, 1 << cfg.l, size=cfg.batch)
    return Instance(np.stack([x, y]), x, y, {})


def _sext_make(cfg, rng):
    q = 1 << (cfg.l - 2)
    x = rng.integers(-q, q, size=cfg.batch)
    x0, x1 = _share(x, cfg.l, rng)
    return Instance(x, x0, x1, {})


def _cross_make(cfg, rng):
    x = rng.integers(0, 1 << cfg.l, size=cfg.batch).astype(np.uint64)
    y = rng.integers(0, 1 << cfg.l, size=cfg.batch).astype(np.uint64)
    return Instance(np.stack([x, y]), x, y, {})


def _cross_check(cfg, inst, out):
    x, y = inst.plain
    want = [(int(a) * int(b)) % (1 << (2 * cfg.l)) for a, b in zip(x, y)]
    return _exact(np.asarray(out.tolist(), dtype=object).astype(np.int64), np.asarray(want, dtype=object).astype(np.int64))


PROTOCOLS: dict[str, Entry] = {
    "mw": Entry(_mw_make, _mw_program, _mw_check),
    "mwconv": Entry(_conv_make, _conv_program, _conv_check),
    "div": Entry(_int_make, _div_program, lambda c, i, o: _exact(o.signed(), ref_div(i.plain, c.d))),
    "trunc": Entry(_int_make, _trunc_program, lambda c, i, o: _exact(o.signed(), ref_trunc(i.plain, c.k))),
    "rexp": Entry(
        _rexp_make,
        lambda cfg: (lambda ctx, x: pi_rexp(ctx, x, cfg.f)),
        lambda c, i, o: _ulp(o, ref_rexp(i.plain / 2**c.f), c.f),
        approx=True,
    ),
    "exp": Entry(
        _exp_make,
        _exp_program,
        _exp_check,
        approx=True,
    ),
    "sin": Entry(_sin_make, _sin_program, lambda c, i, o: _ulp(o, ref_sin(i.plain / 2**c.f), c.f), approx=True),
    "softmax": Entry(_softmax_make, lambda cfg: (lambda ctx, z: pi_softmax(ctx, z, cfg.f)), _softmax_check, approx=True),
    "comp": Entry(
        _comp_make,
        lambda cfg: (lambda ctx, v: gates.comp(ctx, v, cfg.l)),
        lambda c, i, o: _exact(o.v.astype(np.int64), i.plain[0] < i.plain[1]),
    ),
    "drelu": Entry(
        _sext_make,
        lambda cfg: (lambda ctx, x: gates.drelu(ctx, x)),
        lambda c, i, o: _exact(o.v.astype(np.int64), i.plain >= 0),
    ),
    "sext": Entry(
        _sext_make,
        lambda cfg: (lambda ctx, x: gates.sext(ctx, x, cfg.lp or 2 * cfg.l)),
        lambda c, i, o: _exact(o.signed(), i.plain),
    ),
    "crossterm": Entry(_cross_make, lambda cfg: (lambda ctx, v: gates.cross_term(ctx, v, cfg.l, cfg.l)), _cross_check),
}


def entry_for(name: str) -> Entry:
    try:
        return PROTOCOLS[name]
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}") from None


def make_instance(cfg: RunConfig) -> Instance:
    rng = np.random.default_rng([cfg.seed, 3])
    return entry_for(cfg.protocol).make(cfg, rng)


def expected_modeled(cfg: RunConfig) -> int | None:
    """Closed-form per-run cost where one is known for the configuration."""
    if cfg.protocol == "mw":
        return MwParams(cfg.l, cfg.lp or 2, cfg.bound()).modeled_bits()
    return None


def rexp_budget(l: int, f: int) -> int:
    lam = 128
    if l == f + 4:
        return 28 * lam + 2 * l + 4 * f + 897
    return lam * (l + 29) + 18 * l + 4 * f + 897


__all__ = ["RunConfig", "Instance", "Entry", "PROTOCOLS", "entry_for", "make_instance", "rexp_budget"]
