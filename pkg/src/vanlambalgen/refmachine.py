"""A small prefix-free reference machine with step budgets.

Program format (all integers use :func:`gamma`, the Elias gamma code of
``n + 1``, so zero is encodable)::

    header 1^(k-1) 0     selects opcode k
    k=1 LITERAL      gamma(l) then l raw bits
    k=2 REPEAT       gamma(l) gamma(r) then l raw bits, output pattern * r
    k=3 COPY-COND    gamma(l) gamma(offset), output conditional[offset:offset+l]
    k=4 CONCAT       two subprograms
    k=5 INTERLEAVE   two subprograms, output lengths must differ by at most one

Further opcodes (k >= 6) are installed with :meth:`Machine.register`.

Step costs: one per parsed code bit, one per opcode dispatch, one per
emitted output bit (every node charges for the bits it produces), one per
conditional bit read.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Optional

from .seqcore import BitString, interleave

__all__ = [
    "ParseError",
    "CapExceeded",
    "TIME_BOUNDS",
    "ExecBudget",
    "UNBOUNDED",
    "Node",
    "Program",
    "ExecOutcome",
    "Opcode",
    "Machine",
    "BASE_MACHINE",
    "gamma",
    "encode_literal",
    "encode_repeat",
    "encode_copy",
    "encode_concat",
    "encode_interleave",
    "header",
]

ENUMERATION_CAP = 16


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at bit {position}")
        self.position = position


class CapExceeded(ValueError):
    pass


def _ceil_log2(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0


TIME_BOUNDS: dict[str, Callable[[int], int]] = {
    "n^2": lambda n: n * n,
    "nlogn": lambda n: n * _ceil_log2(n + 2),
    "2n": lambda n: 2 * n,
}


@dataclass(frozen=True)
class ExecBudget:
    """The step allowance ``constant * t(n)`` for a named time bound ``t``."""

    bound_name: str = "n^2"
    constant: int = 4

    def __post_init__(self):
        if self.bound_name not in TIME_BOUNDS:
            raise ValueError(f"unknown time bound {self.bound_name!r}; known: {sorted(TIME_BOUNDS)}")
        if self.constant < 1:
            raise ValueError("budget constant must be a positive integer")

    def t(self, n: int) -> int:
        return TIME_BOUNDS[self.bound_name](n)

    def allowance(self, n: int) -> int:
        return self.constant * self.t(n)

    def check_superlinear(self, upto: int = 256) -> bool:
        """``t`` nondecreasing with ``t(n) >= n`` on ``0..upto``."""
        vals = [self.t(n) for n in range(upto + 1)]
        return all(v >= n for n, v in enumerate(vals)) and all(a <= b for a, b in zip(vals, vals[1:]))

    def dominates(self, other: "ExecBudget", upto: int = 256) -> bool:
        return all(self.allowance(n) >= other.allowance(n) for n in range(upto + 1))

    @property
    def name(self) -> str:
        return f"{self.constant}*{self.bound_name}"

    @classmethod
    def parse(cls, text: str) -> Optional["ExecBudget"]:
        """Inverse of :attr:`name`; ``"unbounded"`` gives ``None``.  A bare
        bound name means constant 1."""
        text = text.strip()
        if text == "unbounded":
            return None
        const, sep, bound = text.partition("*")
        if not sep:
            return cls(text, 1)
        try:
            return cls(bound, int(const))
        except ValueError as e:
            raise ValueError(f"bad budget {text!r}: {e}") from None


UNBOUNDED = None


def gamma(n: int) -> str:
    """Prefix-free code of ``n >= 0``: Elias gamma of ``n + 1``."""
    if n < 0:
        raise ValueError("gamma codes nonnegative integers")
    body = bin(n + 1)[2:]
    return "0" * (len(body) - 1) + body


def header(k: int) -> str:
    return "1" * (k - 1) + "0"


def encode_literal(bits: str) -> BitString:
    return BitString(header(1) + gamma(len(bits)) + bits)


def encode_repeat(pattern: str, times: int) -> BitString:
    return BitString(header(2) + gamma(len(pattern)) + gamma(times) + pattern)


def encode_copy(length: int, offset: int) -> BitString:
    return BitString(header(3) + gamma(length) + gamma(offset))


def encode_concat(left: str, right: str) -> BitString:
    return BitString(header(4) + left + right)


def encode_interleave(left: str, right: str) -> BitString:
    return BitString(header(5) + left + right)


@dataclass(frozen=True)
class Node:
    opcode: int
    args: tuple = ()
    children: tuple = ()


@dataclass(frozen=True)
class Program:
    code: BitString
    root: Node

    def __len__(self) -> int:
        return len(self.code)


@dataclass(frozen=True)
class ExecOutcome:
    status: str  # halted | budget_exceeded | parse_error | oracle_out_of_range | invalid_operands
    output: Optional[BitString]
    steps_used: int
    cond_reads: tuple = ()  # (offset, length) ranges read from the conditional tape

    @property
    def halted(self) -> bool:
        return self.status == "halted"


class _Reader:
    __slots__ = ("code", "pos")

    def __init__(self, code: str, pos: int = 0):
        self.code = code
        self.pos = pos

    def bit(self) -> str:
        if self.pos >= len(self.code):
            raise ParseError("unexpected end of code", self.pos)
        ch = self.code[self.pos]
        self.pos += 1
        return ch

    def raw(self, n: int) -> str:
        if self.pos + n > len(self.code):
            raise ParseError(f"expected {n} raw bits", len(self.code))
        out = self.code[self.pos : self.pos + n]
        self.pos += n
        return out

    def gamma(self) -> int:
        zeros = 0
        while self.bit() == "0":
            zeros += 1
        return int("1" + self.raw(zeros), 2) - 1


class _Halt(Exception):
    def __init__(self, status: str):
        self.status = status


class _Run:
    """Mutable execution context: conditional tape, step counter, ceiling."""

    __slots__ = ("machine", "conditional", "steps", "ceiling", "reads")

    def __init__(self, machine: "Machine", conditional: str, ceiling: Optional[int]):
        self.machine = machine
        self.conditional = conditional
        self.steps = 0
        self.ceiling = ceiling
        self.reads: list[tuple[int, int]] = []

    def charge(self, n: int) -> None:
        self.steps += n
        if self.ceiling is not None and self.steps > self.ceiling:
            raise _Halt("budget_exceeded")

    def read(self, offset: int, length: int) -> str:
        if offset + length > len(self.conditional):
            raise _Halt("oracle_out_of_range")
        self.reads.append((offset, length))
        self.charge(length)
        return self.conditional[offset : offset + length]

    def emit(self, bits: str) -> str:
        if len(bits) > self.machine.max_output:
            raise _Halt("budget_exceeded")
        self.charge(len(bits))
        return bits

    def execute(self, node: Node) -> str:
        self.charge(1)
        return self.machine.opcodes[node.opcode].execute(node, self)


@dataclass(frozen=True)
class Opcode:
    k: int
    name: str
    parse: Callable[[_Reader, "Machine"], Node]
    execute: Callable[[Node, _Run], str]


def _parse_literal(r: _Reader, m: "Machine") -> Node:
    n = r.gamma()
    return Node(1, (r.raw(n),))


def _exec_literal(node: Node, run: _Run) -> str:
    return run.emit(node.args[0])


def _parse_repeat(r: _Reader, m: "Machine") -> Node:
    start = r.pos
    n = r.gamma()
    times = r.gamma()
    if n * times > m.max_output:
        raise ParseError("REPEAT output exceeds machine output cap", start)
    return Node(2, (r.raw(n), times))


def _exec_repeat(node: Node, run: _Run) -> str:
    pattern, times = node.args
    return run.emit(pattern * times)


def _parse_copy(r: _Reader, m: "Machine") -> Node:
    return Node(3, (r.gamma(), r.gamma()))


def _exec_copy(node: Node, run: _Run) -> str:
    length, offset = node.args
    return run.emit(run.read(offset, length))


def _parse_pair(k: int):
    def parse(r: _Reader, m: "Machine") -> Node:
        left = m._parse_node(r)
        right = m._parse_node(r)
        return Node(k, (), (left, right))

    return parse


def _exec_concat(node: Node, run: _Run) -> str:
    left = run.execute(node.children[0])
    right = run.execute(node.children[1])
    return run.emit(left + right)


def _exec_interleave(node: Node, run: _Run) -> str:
    left = run.execute(node.children[0])
    right = run.execute(node.children[1])
    if len(left) - len(right) not in (0, 1):
        raise _Halt("invalid_operands")
    return run.emit(interleave(left, right))


BASE_OPCODES = (
    Opcode(1, "LITERAL", _parse_literal, _exec_literal),
    Opcode(2, "REPEAT", _parse_repeat, _exec_repeat),
    Opcode(3, "COPY-COND", _parse_copy, _exec_copy),
    Opcode(4, "CONCAT", _parse_pair(4), _exec_concat),
    Opcode(5, "INTERLEAVE", _parse_pair(5), _exec_interleave),
)


class Machine:
    """An opcode registry plus the output cap used as a hard ceiling."""

    def __init__(self, opcodes=BASE_OPCODES, max_output: int = 4096, enumeration_cap: int = ENUMERATION_CAP):
        self.opcodes: dict[int, Opcode] = {op.k: op for op in opcodes}
        if sorted(self.opcodes) != list(range(1, len(self.opcodes) + 1)):
            raise ValueError("opcodes must be numbered 1..K without gaps")
        self.max_output = max_output
        self.enumeration_cap = enumeration_cap

    def register(self, opcode: Opcode) -> "Machine":
        """A new machine with ``opcode`` appended; ``self`` is unchanged."""
        if opcode.k != len(self.opcodes) + 1:
            raise ValueError(f"next free opcode is {len(self.opcodes) + 1}, got {opcode.k}")
        return Machine(tuple(self.opcodes.values()) + (opcode,), self.max_output, self.enumeration_cap)

    def header_length(self, k: int) -> int:
        if k not in self.opcodes:
            raise KeyError(k)
        return k

    def config_lines(self) -> list[str]:
        lines = [f"opcode.{k} = {op.name}" for k, op in sorted(self.opcodes.items())]
        lines += [f"max_output = {self.max_output}", f"enumeration_cap = {self.enumeration_cap}"]
        return lines

    @property
    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.config_lines()).encode()).hexdigest()[:16]

    def __eq__(self, other) -> bool:
        return isinstance(other, Machine) and self.config_lines() == other.config_lines()

    def __hash__(self) -> int:
        return hash(tuple(self.config_lines()))

    def __repr__(self) -> str:
        names = ",".join(op.name for _, op in sorted(self.opcodes.items()))
        return f"Machine({names})"

    # -- parsing ---------------------------------------------------------

    def _parse_node(self, r: _Reader) -> Node:
        start = r.pos
        k = 1
        while r.bit() == "1":
            k += 1
            if k > len(self.opcodes):
                raise ParseError(f"no opcode registered past {len(self.opcodes)}", start)
        return self.opcodes[k].parse(r, self)

    def parse_program(self, code: str) -> Program:
        code = BitString(code)
        r = _Reader(code)
        root = self._parse_node(r)
        if r.pos != len(code):
            raise ParseError("trailing bits after a complete program", r.pos)
        return Program(code, root)

    def parse_prefix(self, code: str, pos: int = 0) -> tuple[Node, int]:
        """Parse one program starting at ``pos``; return it and the end position."""
        r = _Reader(code, pos)
        node = self._parse_node(r)
        return node, r.pos

    def is_valid(self, code: str) -> bool:
        try:
            self.parse_program(code)
        except ParseError:
            return False
        return True

    # -- execution -------------------------------------------------------

    def execute_node(self, node: Node, conditional: str = "", ceiling: Optional[int] = None) -> ExecOutcome:
        run = _Run(self, conditional, ceiling)
        try:
            out = run.execute(node)
        except _Halt as h:
            return ExecOutcome(h.status, None, run.steps, tuple(run.reads))
        return ExecOutcome("halted", BitString(out), run.steps, tuple(run.reads))

    def run(self, program: Program | str, conditional: str = "", budget: Optional[ExecBudget] = UNBOUNDED) -> ExecOutcome:
        """Run ``program`` on ``conditional``; never raises for bad programs."""
        if not isinstance(program, Program):
            try:
                program = self.parse_program(program)
            except ParseError:
                return ExecOutcome("parse_error", None, 0)
        ceiling = None if budget is None else budget.allowance(self.max_output)
        run = _Run(self, conditional, ceiling)
        try:
            run.charge(len(program.code))
            out = run.execute(program.root)
        except _Halt as h:
            return ExecOutcome(h.status, None, run.steps, tuple(run.reads))
        if budget is not None and run.steps > budget.allowance(len(out)):
            return ExecOutcome("budget_exceeded", None, run.steps, tuple(run.reads))
        return ExecOutcome("halted", BitString(out), run.steps, tuple(run.reads))

    # -- enumeration -----------------------------------------------------

    def enumerate_programs(self, max_code_len: int) -> Iterator[Program]:
        """Every valid program of length <= ``max_code_len``, by length then lexicographically."""
        yield from _enumerate(self, max_code_len)

    def program_table(self, max_code_len: int) -> tuple[Program, ...]:
        return _enumerate(self, max_code_len)


@lru_cache(maxsize=32)
def _enumerate(machine: Machine, max_code_len: int) -> tuple[Program, ...]:
    if max_code_len > machine.enumeration_cap:
        raise CapExceeded(f"code length {max_code_len} exceeds enumeration cap {machine.enumeration_cap}")
    found: list[Program] = []
    # depth-first over code bits; a branch dies once the parser rejects a bit
    # it has already seen (errors at the end of the prefix mean 'need more bits')
    by_length: dict[int, list[Program]] = {}
    stack = [""]
    while stack:
        prefix = stack.pop()
        if prefix:
            try:
                node, end = machine.parse_prefix(prefix)
            except ParseError as e:
                if e.position < len(prefix):
                    continue
            else:
                if end == len(prefix):
                    by_length.setdefault(len(prefix), []).append(Program(BitString(prefix), node))
                continue
        if len(prefix) < max_code_len:
            stack.append(prefix + "1")
            stack.append(prefix + "0")
    for n in sorted(by_length):
        found.extend(sorted(by_length[n], key=lambda p: p.code))
    return tuple(found)


BASE_MACHINE = Machine()
