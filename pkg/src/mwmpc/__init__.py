"""Semi-honest two-party protocols built on the MW coefficient.

Shares live in ``Z_{2^l}``; ``run_pair`` drives both parties in-process and
``cli`` exposes verification, cost tables and a TCP party runner.
"""

from .funcs import DivParams, ExpParams, SinParams, pi_div, pi_exp, pi_rexp, pi_sin, pi_softmax, pi_trunc
from .mw import MwParams, pi_mw, pi_mw_conv
from .ring import RingArray
from .runtime import CostLedger, PartyCtx, run_pair

__version__ = "0.1.0"

__all__ = [
    "CostLedger",
    "DivParams",
    "ExpParams",
    "MwParams",
    "PartyCtx",
    "RingArray",
    "SinParams",
    "pi_div",
    "pi_exp",
    "pi_mw",
    "pi_mw_conv",
    "pi_rexp",
    "pi_sin",
    "pi_softmax",
    "pi_trunc",
    "run_pair",
]
