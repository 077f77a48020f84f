"""Plain, conditional and time-bounded complexity by exhaustive enumeration.

Every program up to the search cap is run once per (conditional, budget)
pair; the shortest program printing each output is kept in a table, ties
broken by the lexicographically smaller code.  Queries are table lookups.
"""
from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from .coding import DESK_MACHINE
from .refmachine import CapExceeded, ExecBudget, Machine, Program
from .seqcore import BitString, all_strings

__all__ = [
    "ComplexityQuery",
    "ComplexityReport",
    "NoWitness",
    "complexity",
    "complexity_table",
    "certifies_at_least",
    "find_incompressible",
    "incompressibility_profile",
    "discover_slack",
    "report_csv",
    "DEFAULT_SEARCH_CAP",
]

DEFAULT_SEARCH_CAP = 14


class NoWitness(LookupError):
    pass


@dataclass(frozen=True)
class ComplexityQuery:
    target: BitString
    conditional: BitString = BitString("")
    budget: Optional[ExecBudget] = None
    search_cap: int = DEFAULT_SEARCH_CAP
    machine: Machine = DESK_MACHINE

    def __post_init__(self):
        object.__setattr__(self, "target", BitString(self.target))
        object.__setattr__(self, "conditional", BitString(self.conditional))
        if self.search_cap > self.machine.enumeration_cap:
            raise CapExceeded(f"search cap {self.search_cap} exceeds enumeration cap {self.machine.enumeration_cap}")


@dataclass(frozen=True)
class ComplexityReport:
    value: Optional[int]
    witness: Optional[Program]
    exhaustive: bool
    search_cap: int

    @property
    def lower_bound(self) -> int:
        """What the search proves: the exact value, or ``cap + 1`` when nothing was found."""
        return self.value if self.value is not None else self.search_cap + 1


@lru_cache(maxsize=256)
def complexity_table(machine: Machine, conditional: str, budget: Optional[ExecBudget], cap: int) -> dict:
    """Map each reachable output to its shortest (then lexicographically first) program."""
    table: dict[str, Program] = {}
    for prog in machine.program_table(cap):
        out = machine.run(prog, conditional, budget)
        if out.halted and out.output not in table:
            table[out.output] = prog
    return table


def complexity(q: ComplexityQuery) -> ComplexityReport:
    table = complexity_table(q.machine, str(q.conditional), q.budget, q.search_cap)
    prog = table.get(q.target)
    if prog is None:
        return ComplexityReport(None, None, True, q.search_cap)
    return ComplexityReport(len(prog.code), prog, True, q.search_cap)


def _k(x: str, conditional: str, budget, cap: int, machine: Machine) -> ComplexityReport:
    return complexity(ComplexityQuery(x, conditional, budget, cap, machine))


def certifies_at_least(report: ComplexityReport, bound: int) -> bool:
    """True when the search proves complexity >= ``bound``."""
    return report.lower_bound >= bound


def find_incompressible(length: int, conditional: str = "", slack: int = 0, budget: Optional[ExecBudget] = None,
                        *, base: str = "", search_cap: int = DEFAULT_SEARCH_CAP, machine: Machine = DESK_MACHINE,
                        extra_check=None) -> BitString:
    """First ``rho`` of the given length (lexicographic order) such that every
    ``base + delta`` with ``delta`` a prefix of ``rho`` is certified to have
    complexity at least ``|base + delta| - slack`` given ``conditional``.

    ``extra_check(rho)`` may impose further requirements on a candidate.
    """
    if length > 24:
        raise CapExceeded("witness search length is capped at 24 bits")
    base = BitString(base)
    if not all(certifies_at_least(_k(base[:i], conditional, budget, search_cap, machine), i - slack)
               for i in range(len(base) + 1)):
        raise NoWitness(f"base prefix already fails at slack {slack}")
    ok_prefix: dict[str, bool] = {}

    def passes(x: str) -> bool:
        if x not in ok_prefix:
            rep = _k(base + x, conditional, budget, search_cap, machine)
            ok_prefix[x] = certifies_at_least(rep, len(base) + len(x) - slack)
        return ok_prefix[x]

    # depth-first in lexicographic order, pruning at the first failing prefix
    stack = [""]
    while stack:
        x = stack.pop()
        if not passes(x):
            continue
        if len(x) == length:
            if extra_check is None or extra_check(BitString(x)):
                return BitString(x)
            continue
        stack.append(x + "1")
        stack.append(x + "0")
    raise NoWitness(f"no string of length {length} is incompressible at slack {slack}")


def discover_slack(search, max_slack: int = 16):
    """Call ``search(slack)`` for slack = 0, 1, ... until it succeeds."""
    for slack in range(max_slack + 1):
        try:
            return search(slack), slack
        except NoWitness:
            continue
    raise NoWitness(f"no witness up to slack {max_slack}")


def incompressibility_profile(x: str, conditional: str = "", budget: Optional[ExecBudget] = None,
                              search_cap: int = DEFAULT_SEARCH_CAP, machine: Machine = DESK_MACHINE,
                              profile_cap: int = 64) -> list[tuple[int, ComplexityReport]]:
    if len(x) > profile_cap:
        raise CapExceeded(f"profile length {len(x)} exceeds cap {profile_cap}")
    return [(n, _k(x[:n], conditional, budget, search_cap, machine)) for n in range(len(x) + 1)]


def conditional_digest(conditional: str) -> str:
    return hashlib.sha256(conditional.encode()).hexdigest()[:12] if conditional else "-"


def report_csv(rows: Iterable[tuple[str, str, Optional[ExecBudget], ComplexityReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["target", "conditional_digest", "budget", "value", "witness", "exhaustive"])
    for target, cond, budget, rep in rows:
        w.writerow([
            target,
            conditional_digest(cond),
            "unbounded" if budget is None else budget.name,
            "" if rep.value is None else rep.value,
            "" if rep.witness is None else rep.witness.code,
            str(rep.exhaustive).lower(),
        ])
    return buf.getvalue()
