"""Two-party execution: transports, party contexts and the cost ledger.

Every protocol is written as a function ``program(ctx, inp)`` that both
parties run with their own context.  Messages are lists of ``RingArray``
fields, always serialised to bytes so that in-memory and TCP runs meter the
same traffic.

Rounds are counted causally: a message sent after receiving a message of
round r carries round r + 1, and messages sent before anything was received
carry round 1.  Two simultaneous sends therefore share a round, and the count
does not depend on thread scheduling.
"""

from __future__ import annotations

import contextlib
import os
import queue
import socket
import struct
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .ring import RingArray

LAMBDA = 128
DEFAULT_TIMEOUT = float(os.environ.get("MWMPC_TIMEOUT", "600"))


# ---------------------------------------------------------------------------
# modelled communication (bits per instance)


def cost_ot2(n: int) -> int:
    return LAMBDA + 2 * n


def cost_otk(k: int, n: int) -> int:
    return 2 * LAMBDA + k * n


def cost_cot(n: int) -> int:
    return LAMBDA + n


def cost_and() -> int:
    return LAMBDA + 20


def cost_bitmul(lp: int) -> int:
    return LAMBDA + lp


def cost_comp(l: int) -> int:
    return LAMBDA * l + 14 * l


def cost_comp_small_ot(b: int, lp: int) -> int:
    return 3 * LAMBDA + 2**b + lp


def cost_comp_small_and(n: int, lp: int) -> int:
    return (n - 1) * (LAMBDA + lp)


def cost_drelu(l: int) -> int:
    return LAMBDA * (l - 1) + 14 * (l - 1)


def cost_b2a(l: int) -> int:
    return LAMBDA + l


def cost_mux(l: int) -> int:
    return 2 * (LAMBDA + l)


def cost_lut(M: int, n: int) -> int:
    return 2 * LAMBDA + M * n


def cost_sext_general(l: int, lp: int) -> int:
    return LAMBDA * (l + 1) + 13 * l + lp


def cost_sext_constrained(l: int, lp: int) -> int:
    return LAMBDA + lp - l


def cost_crossterm(m: int, n: int) -> int:
    u = min(m, n)
    return u * LAMBDA + u * (u + 1) // 2 + m * n


def cost_mul_shared(l: int) -> int:
    # x*y = x0 y0 + x1 y1 + two cross terms; only the cross terms communicate
    return 2 * cost_crossterm(l, l)


# ---------------------------------------------------------------------------
# ledger


@dataclass
class CostLedger:
    modeled_bits: int = 0
    actual_bytes: int = 0
    rounds: int = 0
    messages: int = 0
    breakdown: dict = field(default_factory=lambda: defaultdict(int))
    calls: dict = field(default_factory=lambda: defaultdict(int))

    def record(self, primitive: str, bits: int, count: int = 1) -> None:
        if bits < 0:
            raise ValueError("modelled bits must be non-negative")
        self.modeled_bits += bits * count
        self.breakdown[primitive] += bits * count
        self.calls[primitive] += count

    def per_run(self, runs: int) -> float:
        return self.modeled_bits / runs

    def as_dict(self) -> dict:
        return {
            "modeled_bits": self.modeled_bits,
            "actual_bytes": self.actual_bytes,
            "rounds": self.rounds,
            "messages": self.messages,
            "breakdown": dict(sorted(self.breakdown.items())),
        }


def record_modeled(ledger: CostLedger, primitive: str, bits: int, count: int = 1) -> None:
    ledger.record(primitive, bits, count)


def merge_ledgers(l0: CostLedger, l1: CostLedger) -> CostLedger:
    if l0.modeled_bits != l1.modeled_bits:
        raise RuntimeError("parties disagree on the modelled cost; programs diverged")
    out = CostLedger(
        modeled_bits=l0.modeled_bits,
        actual_bytes=l0.actual_bytes + l1.actual_bytes,
        rounds=max(l0.rounds, l1.rounds),
        messages=l0.messages + l1.messages,
    )
    out.breakdown.update(l0.breakdown)
    out.calls.update(l0.calls)
    return out


# ---------------------------------------------------------------------------
# wire format


def _pack_field(a: RingArray) -> bytes:
    w = a.width
    v = np.ascontiguousarray(a.v)
    head = struct.pack("<BB", w, v.ndim) + struct.pack(f"<{v.ndim}I", *v.shape)
    flat = v.ravel()
    if w == 1:
        body = np.packbits(flat.astype(np.uint8)).tobytes()
    elif w <= 64:
        nb = (w + 7) // 8
        body = flat.astype("<u8").view(np.uint8).reshape(-1, 8)[:, :nb].tobytes()
    else:
        nb = (w + 7) // 8
        body = b"".join(int(x).to_bytes(nb, "little") for x in flat)
    return head + body


def _unpack_field(buf: memoryview, pos: int) -> tuple[RingArray, int]:
    w, nd = struct.unpack_from("<BB", buf, pos)
    pos += 2
    shape = struct.unpack_from(f"<{nd}I", buf, pos)
    pos += 4 * nd
    n = int(np.prod(shape)) if nd else 1
    if w == 1:
        nbytes = (n + 7) // 8
        bits = np.unpackbits(np.frombuffer(buf, np.uint8, nbytes, pos))[:n]
        arr = bits.astype(np.uint64)
    elif w <= 64:
        nb = (w + 7) // 8
        nbytes = n * nb
        raw = np.frombuffer(buf, np.uint8, nbytes, pos).reshape(n, nb)
        full = np.zeros((n, 8), np.uint8)
        full[:, :nb] = raw
        arr = full.view("<u8").reshape(n).astype(np.uint64)
    else:
        nb = (w + 7) // 8
        nbytes = n * nb
        data = bytes(buf[pos : pos + nbytes])
        arr = np.empty(n, dtype=object)
        for i in range(n):
            arr[i] = int.from_bytes(data[i * nb : (i + 1) * nb], "little")
    return RingArray(arr.reshape(shape), w, reduced=True), pos + nbytes


def encode_message(round_tag: int, fields: list[RingArray]) -> bytes:
    parts = [struct.pack("<IH", round_tag, len(fields))]
    parts.extend(_pack_field(f) for f in fields)
    return b"".join(parts)


def decode_message(payload: bytes) -> tuple[int, list[RingArray]]:
    buf = memoryview(payload)
    round_tag, nf = struct.unpack_from("<IH", buf, 0)
    pos = 6
    out = []
    for _ in range(nf):
        f, pos = _unpack_field(buf, pos)
        out.append(f)
    return round_tag, out


# ---------------------------------------------------------------------------
# transports


class TransportError(RuntimeError):
    pass


class PeerAborted(TransportError):
    pass


_ABORT = object()


class MemoryChannel:
    """One endpoint of an in-process duplex pipe."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue):
        self._in = inbox
        self._out = outbox

    @classmethod
    def pair(cls) -> tuple["MemoryChannel", "MemoryChannel"]:
        a, b = queue.Queue(), queue.Queue()
        return cls(a, b), cls(b, a)

    def send(self, payload: bytes) -> None:
        self._out.put(payload)

    def recv(self, timeout: float) -> bytes:
        try:
            item = self._in.get(timeout=timeout)
        except queue.Empty:
            raise TransportError(f"no message within {timeout}s (deadlock?)") from None
        if item is _ABORT:
            raise PeerAborted("peer aborted")
        return item

    def abort(self) -> None:
        self._out.put(_ABORT)

    def close(self) -> None:
        pass


class TcpChannel:
    """Length-prefixed frames over a socket.

    Sends go through a background thread so that two parties can both push
    large messages before reading without filling the kernel buffers.
    """

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._q: queue.Queue = queue.Queue()
        self._err: BaseException | None = None
        self._t = threading.Thread(target=self._pump, daemon=True)
        self._t.start()

    def _pump(self) -> None:
        while True:
            item = self._q.get()
            if item is None:
                return
            try:
                self.sock.sendall(item)
            except OSError as e:  # surfaced on the next send/recv
                self._err = e
                return

    def send(self, payload: bytes) -> None:
        if self._err:
            raise TransportError(str(self._err))
        self._q.put(struct.pack("<I", len(payload)) + payload)

    def send_raw(self, payload: bytes) -> None:
        self.send(payload)

    def _read_exact(self, n: int) -> bytes:
        chunks = []
        while n:
            c = self.sock.recv(min(n, 1 << 20))
            if not c:
                raise TransportError("connection closed by peer")
            chunks.append(c)
            n -= len(c)
        return b"".join(chunks)

    def recv(self, timeout: float) -> bytes:
        self.sock.settimeout(timeout)
        try:
            (n,) = struct.unpack("<I", self._read_exact(4))
            return self._read_exact(n)
        except socket.timeout:
            raise TransportError(f"no message within {timeout}s (deadlock?)") from None

    def abort(self) -> None:
        self.close()

    def close(self) -> None:
        self._q.put(None)
        self._t.join(timeout=5)
        with contextlib.suppress(OSError):
            self.sock.shutdown(socket.SHUT_RDWR)
        self.sock.close()


# ---------------------------------------------------------------------------
# party context


def _seed_seq(seed: int, *tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64([int(seed) & 0xFFFFFFFFFFFFFFFF, *tag]))


class PartyCtx:
    """Everything one party needs while running a protocol.

    ``rng`` is private to the party.  ``dealer`` is seeded identically on
    both sides and stands in for a trusted correlation dealer: both parties
    draw the same correlated randomness in lockstep and each keeps its half.
    """

    def __init__(self, party: int, channel, seed: int = 0, timeout: float = DEFAULT_TIMEOUT):
        if party not in (0, 1):
            raise ValueError("party must be 0 or 1")
        self.party = party
        self.channel = channel
        self.rng = _seed_seq(seed, 1, party)
        self.dealer = _seed_seq(seed, 2)
        self.ledger = CostLedger()
        self.timeout = timeout
        self._clock = 0
        self._mute = 0

    # communication
    def send(self, *fields: RingArray) -> None:
        tag = self._clock + 1
        payload = encode_message(tag, list(fields))
        self.channel.send(payload)
        self.ledger.actual_bytes += 4 + len(payload)
        self.ledger.messages += 1
        self.ledger.rounds = max(self.ledger.rounds, tag)

    def recv(self) -> list[RingArray]:
        tag, fields = decode_message(self.channel.recv(self.timeout))
        self._clock = max(self._clock, tag)
        self.ledger.rounds = max(self.ledger.rounds, tag)
        return fields

    def exchange(self, *fields: RingArray) -> list[RingArray]:
        """Simultaneous send/receive (one round)."""
        self.send(*fields)
        return self.recv()

    # cost model
    def charge(self, primitive: str, bits: int, count: int = 1) -> None:
        if not self._mute:
            self.ledger.record(primitive, bits, count)

    @contextlib.contextmanager
    def muted(self):
        self._mute += 1
        try:
            yield
        finally:
            self._mute -= 1

    @property
    def is_p0(self) -> bool:
        return self.party == 0


Program = Callable[[PartyCtx, Any], Any]


def _run_party(program: Program, ctx: PartyCtx, inp, result: dict) -> None:
    try:
        result["out"] = program(ctx, inp)
    except BaseException as e:  # propagate to the caller thread
        result["err"] = e
        ctx.channel.abort()


def run_pair(program: Program, input0, input1, seed: int = 0, timeout: float = DEFAULT_TIMEOUT):
    """Run ``program`` for both parties in-process; return (out0, out1, ledger)."""
    c0, c1 = MemoryChannel.pair()
    ctx0 = PartyCtx(0, c0, seed, timeout)
    ctx1 = PartyCtx(1, c1, seed, timeout)
    r0: dict = {}
    r1: dict = {}
    t1 = threading.Thread(target=_run_party, args=(program, ctx1, input1, r1), daemon=True)
    t1.start()
    _run_party(program, ctx0, input0, r0)
    t1.join()
    for r in (r0, r1):
        if "err" in r and not isinstance(r["err"], PeerAborted):
            raise r["err"]
    for r in (r0, r1):
        if "err" in r:
            raise r["err"]
    return r0["out"], r1["out"], merge_ledgers(ctx0.ledger, ctx1.ledger)


# ---------------------------------------------------------------------------
# TCP sessions


def tcp_listen(host: str, port: int, timeout: float = 30.0) -> TcpChannel:
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(1)
    srv.settimeout(timeout)
    try:
        conn, _ = srv.accept()
    finally:
        srv.close()
    return TcpChannel(conn)


def tcp_connect(host: str, port: int, timeout: float = 30.0, retry: float = 0.05) -> TcpChannel:
    import time

    deadline = time.monotonic() + timeout
    while True:
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
            return TcpChannel(sock)
        except OSError:
            if time.monotonic() > deadline:
                raise
            time.sleep(retry)


HANDSHAKE = struct.Struct("<4sB32s")


def handshake(channel: TcpChannel, role: int, params_digest: bytes, timeout: float = 30.0) -> None:
    """Exchange role and parameter digest; reject collisions and mismatches."""
    channel.send(HANDSHAKE.pack(b"MWPC", role, params_digest[:32].ljust(32, b"\0")))
    magic, peer_role, peer_digest = HANDSHAKE.unpack(channel.recv(timeout))
    if magic != b"MWPC":
        raise TransportError("handshake: bad magic")
    if peer_role == role:
        raise TransportError(f"handshake: both endpoints claim role {role}")
    if peer_digest != params_digest[:32].ljust(32, b"\0"):
        raise TransportError("handshake: parameter mismatch between parties")


def run_party(program: Program, inp, role: int, channel, seed: int = 0, timeout: float = DEFAULT_TIMEOUT):
    ctx = PartyCtx(role, channel, seed, timeout)
    out = program(ctx, inp)
    return out, ctx.ledger
