"""Bounded request sets, the leftmost-fit prefix-code allocator, and the
two fixed-tail prefix codes used to compress interleavings.

``Q_n``   codes are ``beta ++ a`` where ``beta`` is a machine program printing
          ``b`` (with ``|b| = |a| = n``); they decode to ``a ⊎ b``.
``Q_m,n`` codes are ``tau ++ b ++ a_tail`` where ``tau`` run on conditional
          ``b`` (``|b| = m``) prints the first ``n`` bits of ``a`` and ``a_tail``
          holds the remaining ``m - n``; they decode to ``a ⊎ b`` of length ``2m``.

Both decoders are machine opcodes (k=6 for ``Q_m,n``, k=7 for ``Q_n``), so
time-bounded complexity searches see these codes like any other program.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Optional, Sequence

from .exactcap import Capital
from .refmachine import (
    BASE_MACHINE,
    ExecBudget,
    Machine,
    Node,
    Opcode,
    ParseError,
    Program,
    gamma,
    header,
)
from .seqcore import BitString, LengthMismatch, interleave

__all__ = [
    "RequestSet",
    "CodeAssignment",
    "PrefixCodeSet",
    "kraft_sum",
    "kc_allocate",
    "QMN_OPCODE",
    "QN_OPCODE",
    "DESK_MACHINE",
    "with_q_decoders",
    "qn_header_constant",
    "qmn_header_constant",
    "encode_Qn",
    "decode_Qn",
    "encode_Qmn",
    "decode_Qmn",
    "qn_program",
    "qmn_program",
    "BudgetExceeded",
    "InternalInconsistency",
    "PreconditionViolation",
]


class BudgetExceeded(RuntimeError):
    pass


class InternalInconsistency(ParseError):
    pass


class PreconditionViolation(ValueError):
    pass


# ---------------------------------------------------------------------------
# bounded request sets and allocation


@dataclass(frozen=True)
class RequestSet:
    requests: tuple[tuple[BitString, int], ...] = ()

    def __init__(self, requests: Iterable[tuple[str, int]] = ()):
        reqs = []
        for target, n in requests:
            if n < 1:
                raise ValueError(f"requested length must be positive, got {n}")
            reqs.append((BitString(target), int(n)))
        object.__setattr__(self, "requests", tuple(reqs))

    def __len__(self) -> int:
        return len(self.requests)

    @property
    def bounded(self) -> bool:
        return kraft_sum(self) <= Capital(1)


@dataclass(frozen=True)
class CodeAssignment:
    entries: dict[int, BitString] = field(default_factory=dict)

    def codes(self) -> list[BitString]:
        return [self.entries[i] for i in sorted(self.entries)]

    def to_csv(self, requests: Optional[RequestSet] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "target", "requested_len", "code"])
        for i in sorted(self.entries):
            target, n = requests.requests[i] if requests else ("", len(self.entries[i]))
            w.writerow([i, target, n, self.entries[i]])
        return buf.getvalue()


def kraft_sum(r: RequestSet) -> Capital:
    total = Capital(0)
    for _, n in r.requests:
        total = total + Capital(1, n)
    return total


def kc_allocate(r: RequestSet) -> CodeAssignment:
    """Online leftmost-fit: each length-l request takes the leftmost free
    aligned interval of width 2^-l in [0, 1)."""
    if kraft_sum(r) > Capital(1):
        raise ValueError("request set is not bounded (Kraft sum exceeds 1)")
    if not r.requests:
        return CodeAssignment({})
    depth = max(n for _, n in r.requests)
    taken: list[tuple[int, int]] = []  # [start, end) in units of 2^-depth, sorted
    entries: dict[int, BitString] = {}
    for idx, (_, n) in enumerate(r.requests):
        size = 1 << (depth - n)
        pos = 0
        for start, end in taken:
            if end <= pos:
                continue
            if start >= pos + size:
                break
            pos = -(-end // size) * size
        assert pos + size <= 1 << depth, "leftmost-fit failed on a bounded request set"
        taken.append((pos, pos + size))
        taken.sort()
        entries[idx] = BitString(format(pos >> (depth - n), f"0{n}b"))
    return CodeAssignment(entries)


# ---------------------------------------------------------------------------
# Q decoders as machine opcodes


def _run_inner(run, node: Node, conditional: str) -> str:
    saved = run.conditional
    run.conditional = conditional
    try:
        return run.execute(node)
    finally:
        run.conditional = saved


def _parse_qmn(r, m: Machine) -> Node:
    start = r.pos
    width = r.gamma()
    tau = m._parse_node(r)
    b_prefix = r.raw(width)
    probe = m.execute_node(tau, b_prefix)
    if not probe.halted:
        raise ParseError(f"Q_m,n program does not halt ({probe.status})", start)
    n = len(probe.output)
    if n > width:
        raise InternalInconsistency(f"recovered n={n} exceeds m={width}", start)
    a_tail = r.raw(width - n)
    return Node(6, (width, b_prefix, a_tail), (tau,))


def _exec_qmn(node: Node, run) -> str:
    width, b_prefix, a_tail = node.args
    head = _run_inner(run, node.children[0], b_prefix)
    if len(head) + len(a_tail) != width:
        raise RuntimeError("Q_m,n replay disagrees with parse")
    return run.emit(interleave(head + a_tail, b_prefix))


def _parse_qn(r, m: Machine) -> Node:
    start = r.pos
    beta = m._parse_node(r)
    probe = m.execute_node(beta, "")
    if not probe.halted:
        raise ParseError(f"Q_n program does not halt ({probe.status})", start)
    a_prefix = r.raw(len(probe.output))
    return Node(7, (a_prefix,), (beta,))


def _exec_qn(node: Node, run) -> str:
    (a_prefix,) = node.args
    b = _run_inner(run, node.children[0], "")
    return run.emit(interleave(a_prefix, b))


QMN_OPCODE = Opcode(6, "Q_m,n", _parse_qmn, _exec_qmn)
QN_OPCODE = Opcode(7, "Q_n", _parse_qn, _exec_qn)


def with_q_decoders(machine: Machine = BASE_MACHINE) -> Machine:
    if len(machine.opcodes) != 5:
        raise ValueError("Q decoders are installed on a base five-opcode machine")
    return machine.register(QMN_OPCODE).register(QN_OPCODE)


DESK_MACHINE = with_q_decoders(BASE_MACHINE)


def qn_header_constant(machine: Machine = DESK_MACHINE) -> int:
    """Bits a Q_n code gains when wrapped as a machine program."""
    return machine.header_length(7)


def qmn_header_constant(m: int, machine: Machine = DESK_MACHINE) -> int:
    return machine.header_length(6) + len(gamma(m))


def qn_program(qcode: str) -> BitString:
    return BitString(header(7) + qcode)


def qmn_program(qcode: str, m: int) -> BitString:
    return BitString(header(6) + gamma(m) + qcode)


def _as_program(p: Program | str, machine: Machine) -> Program:
    return p if isinstance(p, Program) else machine.parse_program(p)


def encode_Qn(b_code: Program | str, a_prefix: str, machine: Machine = DESK_MACHINE,
              budget: Optional[ExecBudget] = None) -> BitString:
    b_code = _as_program(b_code, machine)
    out = machine.run(b_code, "", budget)
    if not out.halted:
        raise PreconditionViolation(f"program for the B half does not halt: {out.status}")
    if len(out.output) != len(a_prefix):
        raise LengthMismatch(f"B half has length {len(out.output)}, A prefix has {len(a_prefix)}")
    return BitString(b_code.code + a_prefix)


def _decode(program: str, machine: Machine, budget: Optional[ExecBudget]) -> BitString:
    try:
        machine.parse_program(program)
    except InternalInconsistency:
        raise
    except ParseError as e:
        raise ParseError(f"not a valid code: {e}", e.position) from None
    out = machine.run(program, "", budget)
    if out.status == "budget_exceeded":
        raise BudgetExceeded(f"decoding used {out.steps_used} steps, over budget {budget.name}")
    if not out.halted:
        raise ParseError(f"decoder stopped with {out.status}", 0)
    return out.output


def decode_Qn(code: str, budget: Optional[ExecBudget] = None, machine: Machine = DESK_MACHINE) -> BitString:
    return _decode(qn_program(code), machine, budget)


def encode_Qmn(cond_code: Program | str, b_prefix: str, a_tail: str, machine: Machine = DESK_MACHINE,
               budget: Optional[ExecBudget] = None) -> BitString:
    cond_code = _as_program(cond_code, machine)
    m = len(b_prefix)
    out = machine.run(cond_code, b_prefix, budget)
    if not out.halted:
        raise PreconditionViolation(f"conditional program does not halt on B prefix: {out.status}")
    n = len(out.output)
    if n > m:
        raise PreconditionViolation(f"n={n} exceeds m={m}")
    if len(a_tail) != m - n:
        raise LengthMismatch(f"A tail must have m-n={m - n} bits, got {len(a_tail)}")
    return BitString(cond_code.code + b_prefix + a_tail)


def decode_Qmn(code: str, m: int, budget: Optional[ExecBudget] = None, machine: Machine = DESK_MACHINE) -> BitString:
    return _decode(qmn_program(code, m), machine, budget)


# ---------------------------------------------------------------------------
# code sets


@dataclass(frozen=True)
class PrefixCodeSet:
    kind: str  # "Qn" or "Qmn"
    params: tuple[int, ...]
    base_machine: Machine = DESK_MACHINE

    def tail_length(self, program_output_len: int = 0) -> int:
        if self.kind == "Qn":
            return self.params[0]
        m, n = self.params
        return 2 * m - n

    def members(self, max_program_len: int) -> Iterator[BitString]:
        """Every ``tau ++ sigma`` with ``tau`` a valid code of at most
        ``max_program_len`` bits and ``|sigma|`` the fixed tail length."""
        tail = self.tail_length()
        for prog in self.base_machine.program_table(max_program_len):
            for bits in product("01", repeat=tail):
                yield BitString(prog.code + "".join(bits))

