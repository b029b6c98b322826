"""Plaintext references, the ULP metric and brute-force verifiers.

The reference functions never touch shares or transports.  The verifiers at
the bottom run a protocol over every share pair of a small ring (or over a
random sample) and compare against these references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ring import RingArray, uniform
from .runtime import run_pair
from .sharing import mw_plain_array

REF_UNIT = 1e-6
CHUNK = 1 << 17


# ---------------------------------------------------------------------------
# ULP


@dataclass(frozen=True)
class UlpConfig:
    frac_bits: int
    unit: float = REF_UNIT

    def __post_init__(self) -> None:
        if self.unit <= 0:
            raise ValueError("reference unit must be positive")

    @property
    def ulp(self) -> float:
        return 2.0**-self.frac_bits


def round_to_multiple(a, unit: float = REF_UNIT):
    """Round to a multiple of ``unit``, ties to even (numpy's rounding rule)."""
    return np.round(np.asarray(a, dtype=np.float64) / unit) * unit


def ulp_error(a, approx, cfg: UlpConfig):
    """|round(a, u) - approx| / 2^-f, elementwise."""
    out = np.abs(round_to_multiple(a, cfg.unit) - np.asarray(approx, dtype=np.float64)) / cfg.ulp
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# references


def ref_wrap(x0, x1, l: int):
    return ((np.asarray(x0, dtype=object) + np.asarray(x1, dtype=object)) >= (1 << l)).astype(np.int64)


def ref_mw(x0, x1, l: int):
    if l <= 61:
        return mw_plain_array(x0, x1, l)
    s = np.asarray(x0, dtype=object) + np.asarray(x1, dtype=object)
    L = 1 << l
    return (((s % L) >= L // 2).astype(np.int64) + (s >= L).astype(np.int64))


def mw_case_split(x0, x1, l: int, B: int):
    """MW from the interval of x0 + x1; -1 where |x| < B does not hold."""
    s = np.asarray(x0, dtype=np.int64) + np.asarray(x1, dtype=np.int64)
    L = 1 << l
    out = np.full(s.shape, -1, dtype=np.int64)
    out[s < B] = 0
    out[(s >= L - B) & (s < L)] = 1
    out[(s >= L) & (s < L + B)] = 1
    out[(s >= 2 * L - B)] = 2
    return out


def classify_region(x0, x1, l: int, B: int):
    """Region label of the point (x0, x1): 'A', 'B', 'C', 'D' or '' (outside)."""
    s = np.asarray(x0, dtype=np.int64) + np.asarray(x1, dtype=np.int64)
    L = 1 << l
    lab = np.full(s.shape, "", dtype="<U1")
    lab[s < B] = "A"
    lab[(s >= L - B) & (s < L)] = "B"
    lab[(s >= L) & (s < L + B)] = "C"
    lab[s >= 2 * L - B] = "D"
    return lab


def ref_comp(x, y):
    return (np.asarray(x) < np.asarray(y)).astype(np.int64)


def ref_div(x, d: int):
    return np.asarray(x, dtype=np.int64) // d


def ref_trunc(x, k: int):
    return np.asarray(x, dtype=np.int64) >> k


def ref_sin(x):
    return np.sin(np.asarray(x, dtype=np.float64))


def ref_exp(x, a: float = math.e):
    return np.exp(np.asarray(x, dtype=np.float64) * math.log(a))


def ref_rexp(x):
    return np.exp(-np.asarray(x, dtype=np.float64))


def ref_softmax(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


_REFS = {
    "mw": ref_mw,
    "wrap": ref_wrap,
    "comp": ref_comp,
    "div": ref_div,
    "trunc": ref_trunc,
    "sin": ref_sin,
    "exp": ref_exp,
    "rexp": ref_rexp,
    "softmax": ref_softmax,
}


def oracle_suite(fn: str, *args, **kwargs):
    """Dispatch to the named plaintext reference."""
    try:
        ref = _REFS[fn]
    except KeyError:
        raise ValueError(f"no oracle named {fn!r}; choose from {sorted(_REFS)}") from None
    return ref(*args, **kwargs)


# ---------------------------------------------------------------------------
# brute-force verification


@dataclass
class VerifyReport:
    protocol: str
    cases: int = 0
    failures: int = 0
    max_dev: float = 0.0
    mean_dev: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def add(self, dev: np.ndarray, bad: np.ndarray) -> None:
        n = int(dev.size)
        if n == 0:
            return
        total = self.mean_dev * self.cases + float(np.sum(dev))
        self.cases += n
        self.failures += int(np.count_nonzero(bad))
        self.max_dev = max(self.max_dev, float(np.max(dev)))
        self.mean_dev = total / self.cases

    def as_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "params": self.params,
            "cases": self.cases,
            "failures": self.failures,
            "max_dev": round(self.max_dev, 6),
            "mean_dev": round(self.mean_dev, 6),
        }


def all_pairs(l: int) -> tuple[np.ndarray, np.ndarray]:
    L = 1 << l
    x0, x1 = np.meshgrid(np.arange(L, dtype=np.int64), np.arange(L, dtype=np.int64), indexing="ij")
    return x0.ravel(), x1.ravel()


def bounded_pairs(l: int, B: int) -> tuple[np.ndarray, np.ndarray]:
    """All share pairs over Z_{2^l} whose secret satisfies |x| < B."""
    x0, x1 = all_pairs(l)
    L = 1 << l
    s = (x0 + x1) % L
    keep = (s < B) | (s >= L - B)
    return x0[keep], x1[keep]


def _chunks(n: int, size: int = CHUNK):
    for i in range(0, n, size):
        yield slice(i, min(n, i + size))


def b_grid(l: int, points: int = 20) -> list[int]:
    """B values spanning (0, L/2], always including 3L/8 and L/2."""
    half = 1 << (l - 1)
    L = 1 << l
    grid = {max(1, (half * k) // points) for k in range(1, points + 1)}
    grid |= {3 * L // 8 - 1, 3 * L // 8, 3 * L // 8 + 1, half - 1, half}
    return sorted(b for b in grid if 0 < b <= half)


def verify_mw(l: int, Bs: list[int] | None = None, lp: int = 2, seed: int = 0, both_branches: bool = False) -> VerifyReport:
    from .mw import MwParams, pi_mw

    Bs = Bs or b_grid(l)
    rep = VerifyReport("mw", params={"l": l, "B": Bs, "lp": lp})
    for B in Bs:
        p = MwParams(l, lp, B)
        branches = [p.branch]
        if both_branches and p.branch != "half":
            branches = ["and", "comp"]
        x0, x1 = bounded_pairs(l, B)
        want = mw_plain_array(x0, x1, l)
        for br in branches:
            for sl in _chunks(x0.size):
                o0, o1, _ = run_pair(
                    lambda c, v, br=br: pi_mw(c, RingArray(v, l), p, br), x0[sl], x1[sl], seed
                )
                got = (o0 + o1).v.astype(np.int64)
                dev = np.abs(got - want[sl]).astype(np.float64)
                rep.add(dev, got != want[sl])
    return rep


def verify_mwconv(l: int, lrs: list[int] | None = None, lp: int = 2, seed: int = 0) -> VerifyReport:
    from .mw import pi_mw_conv

    lrs = lrs or [l + 1, l + 2, l + 4]
    rep = VerifyReport("mwconv", params={"l": l, "lr": lrs})
    m = 1 << l
    for lr in lrs:
        x0, x1 = bounded_pairs(lr, 1 << (l - 1))
        want = mw_plain_array(x0 % m, x1 % m, l)
        for sl in _chunks(x0.size):
            o0, o1, _ = run_pair(lambda c, v: pi_mw_conv(c, RingArray(v, lr), l, lp), x0[sl], x1[sl], seed)
            got = (o0 + o1).v.astype(np.int64) % (1 << lp)
            rep.add(np.abs(got - want[sl]).astype(np.float64), got != want[sl])
    return rep


def verify_constrained(l: int = 8, seed: int = 0) -> VerifyReport:
    """Constrained comparison and constrained wrap, every gap A and pair."""
    from .mw import comp_constrained, wrap_constrained

    L = 1 << l
    rep = VerifyReport("constrained", params={"l": l})
    a, b = all_pairs(l)
    for A in range(1, L):
        diff = a - b  # a at P0 is x, b at P1 is y
        ok = ((diff >= A) & (diff < L)) | ((diff >= -L) & (diff < 0))
        x, y = a[ok], b[ok]
        if x.size:
            o0, o1, _ = run_pair(lambda c, v: comp_constrained(c, v, A, l), x, y, seed)
            got = (o0 + o1).v.astype(np.int64)
            want = (y < x).astype(np.int64)
            rep.add((got != want).astype(np.float64), got != want)
        s = a + b
        ok = (s < L) | (s >= L + A)
        x0, x1 = a[ok], b[ok]
        if x0.size:
            o0, o1, _ = run_pair(lambda c, v: wrap_constrained(c, RingArray(v, l), A), x0, x1, seed)
            got = (o0 + o1).v.astype(np.int64)
            want = (x0 + x1 >= L).astype(np.int64)
            rep.add((got != want).astype(np.float64), got != want)
    return rep


def _random_shares(x: np.ndarray, l: int, seed: int) -> tuple[RingArray, RingArray]:
    rng = np.random.default_rng([seed, 7])
    X = RingArray(np.asarray(x, dtype=np.int64), l)
    x0 = uniform(rng, X.shape, l)
    return x0, X - x0


def verify_div(l: int, d: int, B: int | None = None, xs=None, seed: int = 0) -> VerifyReport:
    """Exhaustive over |x| < B unless explicit ``xs`` are given."""
    from .funcs import DivParams, pi_div

    p = DivParams(l, d, B)
    if xs is None:
        xs = np.arange(-p.bound + 1, p.bound, dtype=np.int64)
    rep = VerifyReport("div", params={"l": l, "d": d, "B": p.bound})
    for sl in _chunks(len(xs)):
        x = np.asarray(xs[sl], dtype=np.int64)
        a, b = _random_shares(x, l, seed)
        o0, o1, _ = run_pair(lambda c, v: pi_div(c, v, p), a, b, seed)
        got = (o0 + o1).signed().astype(np.int64)
        want = ref_div(x, d)
        rep.add(np.abs(got - want).astype(np.float64), got != want)
    return rep


def verify_trunc(l: int, k: int, B: int | None = None, xs=None, seed: int = 0) -> VerifyReport:
    from .funcs import pi_trunc

    bound = B if B is not None else 1 << (l - 1)
    if xs is None:
        xs = np.arange(-bound + 1, bound, dtype=np.int64)
    rep = VerifyReport("trunc", params={"l": l, "k": k, "B": bound})
    for sl in _chunks(len(xs)):
        x = np.asarray(xs[sl], dtype=np.int64)
        a, b = _random_shares(x, l, seed)
        o0, o1, _ = run_pair(lambda c, v: pi_trunc(c, v, k, bound), a, b, seed)
        got = (o0 + o1).signed().astype(np.int64)
        want = ref_trunc(x, k)
        rep.add(np.abs(got - want).astype(np.float64), got != want)
    return rep


def verify_rexp(l: int, f: int, xs=None, bound: float | None = None, seed: int = 0) -> VerifyReport:
    """ULP statistics of e^{-x}; every fixed-point input in [0, 8) by default."""
    from .funcs import pi_rexp

    if xs is None:
        xs = np.arange(8 << f, dtype=np.int64)
    cfg = UlpConfig(f)
    rep = VerifyReport("rexp", params={"l": l, "f": f, "bound": bound})
    for sl in _chunks(len(xs), 1 << 15):
        x = np.asarray(xs[sl], dtype=np.int64)
        a, b = _random_shares(x, l, seed)
        o0, o1, _ = run_pair(lambda c, v: pi_rexp(c, v, f), a, b, seed)
        got = (o0 + o1).signed().astype(np.float64) / 2**f
        u = ulp_error(ref_rexp(x / 2**f), got, cfg)
        rep.add(u, u > bound if bound is not None else np.zeros(u.shape, bool))
    return rep


def verify_sin(l: int, f: int, B: int, n: int = 1 << 14, bound: float | None = None, seed: int = 0) -> VerifyReport:
    from .funcs import SinParams, pi_sin

    rng = np.random.default_rng([seed, 11])
    xs = rng.integers(-B + 1, B, size=n, dtype=np.int64)
    cfg = UlpConfig(f)
    rep = VerifyReport("sin", params={"l": l, "f": f, "B": B, "n": n})
    p = SinParams(l=l, f=f, B=B)
    a, b = _random_shares(xs, l, seed)
    o0, o1, _ = run_pair(lambda c, v: pi_sin(c, v, p), a, b, seed)
    got = (o0 + o1).signed().astype(np.float64) / 2**f
    u = ulp_error(ref_sin(xs / 2**f), got, cfg)
    rep.add(u, u > bound if bound is not None else np.zeros(u.shape, bool))
    return rep


def exhaustive_verify(protocol: str, **kw) -> VerifyReport:
    """Entry point used by the CLI: dispatch on the protocol name."""
    table = {
        "mw": verify_mw,
        "mwconv": verify_mwconv,
        "constrained": verify_constrained,
        "div": verify_div,
        "trunc": verify_trunc,
        "rexp": verify_rexp,
        "sin": verify_sin,
    }
    if protocol not in table:
        raise ValueError(f"unknown protocol {protocol!r}; choose from {sorted(table)}")
    if protocol in ("mw", "mwconv", "constrained") and kw.get("l", 0) > 12:
        raise ValueError("exhaustive mode needs l <= 12")
    return table[protocol](**kw)
