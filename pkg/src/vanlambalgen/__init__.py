"""Finite, exact experiments on interleaved binary sequences: prefix-free
coding, time-bounded complexity on a small reference machine, martingale
combinators, lookahead betting games and staged counterexample pairs."""

__version__ = "0.1.0"

from .exactcap import Capital, NonDyadicResult
from .refmachine import BASE_MACHINE, ExecBudget, Machine, ParseError
from .coding import DESK_MACHINE
from .seqcore import BitString, deinterleave, interleave

__all__ = [
    "__version__",
    "BASE_MACHINE",
    "DESK_MACHINE",
    "BitString",
    "Capital",
    "ExecBudget",
    "Machine",
    "NonDyadicResult",
    "ParseError",
    "deinterleave",
    "interleave",
]
