"""Shared test helpers (imported by test modules)."""

import json
import os
import socket
import subprocess
import sys

import numpy as np

from mwmpc.ring import RingArray, uniform
from mwmpc.runtime import run_pair


def share(x, l, seed=0):
    """Additive shares of the integers ``x`` over Z_{2^l}."""
    X = RingArray(np.asarray(x, dtype=object if l > 62 else np.int64), l)
    x0 = uniform(np.random.default_rng([seed, 99]), X.shape, l)
    return x0, X - x0


def run2(program, in0, in1, seed=0):
    """Run both parties and return (reconstructed output, ledger)."""
    o0, o1, led = run_pair(program, in0, in1, seed)
    if isinstance(o0, list):
        return [a + b for a, b in zip(o0, o1)], led
    return o0 + o1, led


# --- two-process TCP runs ------------------------------------------------

# small per-protocol settings for subprocess runs (every registered protocol)
TCP_ARGS = {
    "mw": ["--l", "37", "--B", "0.9999"],
    "mwconv": ["--l", "12"],
    "div": ["--l", "37", "--d", "1000"],
    "trunc": ["--l", "37", "--k", "12"],
    "rexp": ["--l", "37"],
    "exp": ["--l", "15"],
    "sin": ["--l", "21"],
    "softmax": ["--rows", "2", "--n", "16"],
    "comp": ["--l", "20"],
    "drelu": ["--l", "37"],
    "sext": ["--l", "20", "--lp", "50"],
    "crossterm": ["--l", "24"],
}
TCP_BATCH = 128
TCP_SEED = 11


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def launch_party(proto, role, port, extra, side=None):
    cmd = [sys.executable, "-m", "mwmpc", "party", proto, "--role", str(role), "--port", str(port)]
    cmd += ["--batch", str(TCP_BATCH), "--seed", str(TCP_SEED), "--timeout", "60", "--test-mode", "--show-output"]
    cmd += extra
    if side:
        cmd.append(side)
    return subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, env=dict(os.environ))


def tcp_pair(proto, extra=None):
    """Run both parties as separate processes; return their JSON reports."""
    extra = TCP_ARGS[proto] if extra is None else extra
    port = free_port()
    procs = [launch_party(proto, 0, port, extra), launch_party(proto, 1, port, extra)]
    reports = []
    for p in procs:
        out, err = p.communicate(timeout=300)
        if p.returncode != 0:
            raise RuntimeError(f"{proto} party failed: {err}")
        reports.append(json.loads(out))
    return reports


def memory_run(proto, extra=None):
    """The same configuration run in-process: (reconstructed output list, ledger)."""
    from mwmpc.cli import _config, build_parser
    from mwmpc.registry import make_instance, entry_for

    extra = TCP_ARGS[proto] if extra is None else extra
    argv = ["party", proto, "--role", "0", "--batch", str(TCP_BATCH), "--seed", str(TCP_SEED)] + extra
    args = build_parser().parse_args(argv)
    cfg = _config(args, proto, args.B[0] if args.B else 1.0)
    inst = make_instance(cfg)
    o0, o1, led = run_pair(entry_for(proto).program(cfg), inst.in0, inst.in1, cfg.seed)
    return (o0 + o1).tolist(), led


# --- acceptance summary ----------------------------------------------------

ACCEPTANCE: dict = {}


def report(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    return ok
