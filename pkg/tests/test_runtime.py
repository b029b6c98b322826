import numpy as np
import pytest

from mwmpc.mw import MwParams, pi_mw
from mwmpc.ring import RingArray
from mwmpc.runtime import (
    CostLedger,
    PeerAborted,
    cost_b2a,
    cost_comp,
    cost_crossterm,
    cost_lut,
    cost_sext_constrained,
    cost_sext_general,
    decode_message,
    encode_message,
    merge_ledgers,
    record_modeled,
    run_pair,
)

from helpers import share


def test_exchange_is_one_round():
    def prog(ctx, v):
        (other,) = ctx.exchange(RingArray([v], 8))
        return RingArray([v], 8) + other

    o0, o1, led = run_pair(prog, 200, 100)
    assert o0.tolist() == o1.tolist() == [44]
    assert led.rounds == 1
    assert led.messages == 2


def test_noop_costs_nothing():
    _, _, led = run_pair(lambda ctx, v: v, 1, 2)
    assert led.rounds == 0
    assert led.actual_bytes == 0
    assert led.modeled_bits == 0


def test_mw_quarter_bound_two_rounds():
    l = 12
    p = MwParams(l, 2, 1 << (l - 2))
    x0, x1 = share(np.arange(-100, 100), l)
    _, _, led = run_pair(lambda c, x: pi_mw(c, x, p), x0, x1)
    assert led.rounds == 2


def test_sequential_messages_count_rounds():
    def prog(ctx, _):
        for _ in range(3):
            if ctx.is_p0:
                ctx.send(RingArray([1], 4))
                ctx.recv()
            else:
                ctx.recv()
                ctx.send(RingArray([2], 4))

    _, _, led = run_pair(prog, None, None)
    assert led.rounds == 6


def test_wire_format_round_trip():
    fields = [RingArray([1, 2, 3], 5), RingArray([2**100], 128), RingArray.zeros((2, 3), 1)]
    tag, back = decode_message(encode_message(7, fields))
    assert tag == 7
    assert all(a == b for a, b in zip(fields, back))


def test_error_propagates_and_peer_unblocks():
    def prog(ctx, _):
        if ctx.is_p0:
            raise ValueError("boom")
        return ctx.recv()

    with pytest.raises(ValueError, match="boom"):
        run_pair(prog, None, None, timeout=5)


def test_ledger_record_and_merge():
    led = CostLedger()
    record_modeled(led, "x", 10, 3)
    assert led.modeled_bits == 30
    assert led.as_dict()["breakdown"] == {"x": 30}
    with pytest.raises(ValueError):
        led.record("x", -1)
    other = CostLedger()
    with pytest.raises(RuntimeError):
        merge_ledgers(led, other)


def test_cost_formulas():
    assert cost_comp(37) == 128 * 37 + 14 * 37
    assert cost_b2a(37) == 165
    assert cost_lut(4, 45) == 436
    assert cost_sext_general(37, 37) == 128 * 38 + 13 * 37 + 37
    assert cost_sext_constrained(16, 32) == 128 + 16
    assert cost_crossterm(23, 24) == 23 * 128 + 23 * 24 // 2 + 23 * 24


def test_peer_aborted_is_transport_error():
    from mwmpc.runtime import TransportError

    assert issubclass(PeerAborted, TransportError)
