"""Staged builders for finite counterexample pairs.

Every builder grows a pair ``(a, b)`` stage by stage.  The ``b`` side is
``B_s = B_{s-1} β_s α_s``: a fresh block ``β_s`` followed by a copy of the
block ``α_s`` that extends ``a``.  The schedule keeps each copy of ``α_s``
in ``b`` beyond the reach of a ``c*t``-bounded reader standing at ``A_s``,
which is what lets ``a`` look random given ``b`` while ``a ⊎ b`` does not.

The asymmetric builder mirrors the roles: the long side is ``a`` and the
shared blocks come from ``b``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .coding import DESK_MACHINE, qn_header_constant, qn_program
from .exactcap import Capital
from .kolmo import DEFAULT_SEARCH_CAP, NoWitness, complexity_table
from .martingale import (
    Martingale,
    last_index_bettor,
    machine_pool,
    mixture,
    oracle_copy_bettor,
    oracle_machine_pool,
    replay,
)
from .refmachine import ExecBudget, Machine, encode_literal
from .seqcore import BitString, interleave

__all__ = [
    "StageSchedule",
    "PairArtifact",
    "DigestMismatch",
    "ScheduleError",
    "DEFAULT_SCHEDULE",
    "SEPARATION_BUDGET",
    "COMPRESSION_BUDGET",
    "build_pair_incompressibility",
    "build_pair_martingale",
    "build_pair_asymmetric",
    "default_pools",
    "stage_transfer",
    "first_block",
    "pool_gains",
    "copy_predictor",
    "far_copy_bettors",
    "TransferRecord",
    "CertificateRow",
]

SEPARATION_BUDGET = ExecBudget("2n", 1)
COMPRESSION_BUDGET = ExecBudget("n^2", 4)
MAX_SLACK = 4


class ScheduleError(ValueError):
    pass


class DigestMismatch(ValueError):
    pass


@dataclass(frozen=True)
class StageSchedule:
    alpha_len: tuple[int, ...] = (2, 2, 2)
    beta_len: tuple[int, ...] = (4, 4, 4)
    budget: ExecBudget = SEPARATION_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "alpha_len", tuple(int(v) for v in self.alpha_len))
        object.__setattr__(self, "beta_len", tuple(int(v) for v in self.beta_len))
        if len(self.alpha_len) != len(self.beta_len):
            raise ScheduleError("alpha_len and beta_len need one entry per stage")
        if any(v < 1 for v in self.alpha_len + self.beta_len):
            raise ScheduleError("block lengths must be positive")

    @property
    def stages(self) -> int:
        return len(self.alpha_len)

    def a_len(self, s: int) -> int:
        """``|A_s|`` (``s = 0`` is the empty prefix)."""
        return sum(self.alpha_len[:s])

    def b_len(self, s: int) -> int:
        return sum(self.alpha_len[:s]) + sum(self.beta_len[:s])

    def alpha_slot_a(self, s: int) -> int:
        """Start of ``α_s`` inside ``a`` (stages count from 1)."""
        return self.a_len(s - 1)

    def alpha_slot_b(self, s: int) -> int:
        return self.b_len(s - 1) + self.beta_len[s - 1]

    def audit(self) -> list[str]:
        """Broken invariants, as messages; empty means the schedule is sound."""
        problems = []
        for s in range(1, self.stages + 1):
            reach = self.budget.allowance(self.a_len(s))
            if self.alpha_slot_b(s) < reach:
                problems.append(f"stage {s}: copy of alpha at b[{self.alpha_slot_b(s)}] is inside "
                                f"the readable window {reach} of a-prefix {self.a_len(s)}")
            if not self.alpha_slot_b(s) > self.budget.allowance(self.alpha_slot_a(s)):
                problems.append(f"stage {s}: separation fails at a-position {self.alpha_slot_a(s)}")
        return problems

    def to_lines(self) -> list[str]:
        return [
            "schedule.alpha = " + ",".join(map(str, self.alpha_len)),
            "schedule.beta = " + ",".join(map(str, self.beta_len)),
            f"schedule.budget = {self.budget.name}",
        ]


DEFAULT_SCHEDULE = StageSchedule()


@dataclass(frozen=True)
class CertificateRow:
    stage: int
    role: str  # which string or transcript the row talks about
    prefix_len: int
    value: str
    bound: str
    detail: str = ""


@dataclass
class PairArtifact:
    kind: str
    a: BitString
    b: BitString
    schedule: StageSchedule
    blocks: list[tuple[BitString, BitString]]  # (alpha_s, beta_s)
    slacks: dict[str, int] = field(default_factory=dict)
    certificates: list[CertificateRow] = field(default_factory=list)
    machine: Machine = DESK_MACHINE
    search_cap: int = DEFAULT_SEARCH_CAP
    pools: Optional[tuple] = None

    # -- structural checks ------------------------------------------------

    def copy_property(self) -> bool:
        long, short = (self.a, self.b) if self.kind == "asymmetric" else (self.b, self.a)
        sched = self.schedule
        for s, (alpha, _) in enumerate(self.blocks, start=1):
            i, j = sched.alpha_slot_a(s), sched.alpha_slot_b(s)
            if short[i : i + len(alpha)] != alpha or long[j : j + len(alpha)] != alpha:
                return False
        return True

    def audit(self) -> list[str]:
        problems = self.schedule.audit()
        if not self.copy_property():
            problems.append("copy property fails")
        long, short = (self.a, self.b) if self.kind == "asymmetric" else (self.b, self.a)
        if len(short) != self.schedule.a_len(self.schedule.stages) or len(long) != self.schedule.b_len(self.schedule.stages):
            problems.append("prefix lengths disagree with the schedule")
        return problems

    # -- certificates -----------------------------------------------------

    def replay(self) -> list[CertificateRow]:
        """Recompute every certificate; returns the rows that do not reproduce."""
        if self.kind != "incompressibility":
            fresh = _martingale_certificates(self)
            return [r for r, f in zip(self.certificates, fresh) if r != f] + fresh[len(self.certificates):]
        bad = []
        for row in self.certificates:
            target, cond = _incompressibility_target(self, row)
            table = complexity_table(self.machine, cond, None, self.search_cap)
            prog = table.get(target)
            value = str(len(prog.code)) if prog else f">{self.search_cap}"
            lower = len(prog.code) if prog else self.search_cap + 1
            if value != row.value or lower < int(row.bound):
                bad.append(row)
        return bad

    def certificates_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "role", "prefix_len", "value", "bound", "detail"])
        for r in self.certificates:
            w.writerow([r.stage, r.role, r.prefix_len, r.value, r.bound, r.detail])
        return buf.getvalue()

    # -- fixture files ----------------------------------------------------

    def to_fixture(self) -> str:
        lines = ["# pair fixture v1", f"kind = {self.kind}", *self.schedule.to_lines(),
                 f"machine = {self.machine.digest}", f"search_cap = {self.search_cap}"]
        lines += [f"slack.{k} = {v}" for k, v in sorted(self.slacks.items())]
        lines += [f"alpha.{s} = {al}" for s, (al, _) in enumerate(self.blocks, start=1)]
        lines += [f"beta.{s} = {be}" for s, (_, be) in enumerate(self.blocks, start=1)]
        lines += [f"a = {self.a}", f"b = {self.b}", "[certificates]"]
        return "\n".join(lines) + "\n" + self.certificates_csv()

    @classmethod
    def from_fixture(cls, text: str, machine: Machine = DESK_MACHINE) -> "PairArtifact":
        head, _, body = text.partition("[certificates]\n")
        kv = {}
        for line in head.splitlines():
            if line.startswith("#") or not line.strip():
                continue
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()
        if kv.get("machine") != machine.digest:
            raise DigestMismatch(f"fixture was built on machine {kv.get('machine')}, "
                                 f"this run uses {machine.digest}")
        ints = lambda v: tuple(int(x) for x in v.split(",") if x)  # noqa: E731
        sched = StageSchedule(ints(kv["schedule.alpha"]), ints(kv["schedule.beta"]),
                              ExecBudget.parse(kv["schedule.budget"]))
        blocks = [(BitString(kv[f"alpha.{s}"]), BitString(kv[f"beta.{s}"])) for s in range(1, sched.stages + 1)]
        slacks = {k[6:]: int(v) for k, v in kv.items() if k.startswith("slack.")}
        rows = [CertificateRow(int(r["stage"]), r["role"], int(r["prefix_len"]), r["value"], r["bound"], r["detail"])
                for r in csv.DictReader(io.StringIO(body))]
        return cls(kv["kind"], BitString(kv["a"]), BitString(kv["b"]), sched, blocks, slacks, rows,
                   machine, int(kv["search_cap"]))


# ---------------------------------------------------------------------------
# block search


def first_block(length: int, extends: Callable[[str], bool],
                accept: Optional[Callable[[str], bool]] = None) -> BitString:
    """Lexicographically first string of ``length`` bits whose every nonempty
    prefix passes ``extends`` (checked once per prefix) and that passes
    ``accept`` as a whole."""
    stack = [""]
    while stack:
        x = stack.pop()
        if x and not extends(x):
            continue
        if len(x) == length:
            if accept is None or accept(x):
                return BitString(x)
            continue
        stack += [x + "1", x + "0"]
    raise NoWitness(f"no block of length {length}")


# ---------------------------------------------------------------------------
# incompressibility build


def _lower(machine: Machine, target: str, cond: str, cap: int) -> int:
    prog = complexity_table(machine, cond, None, cap).get(target)
    return len(prog.code) if prog else cap + 1


def _incompressibility_target(art: PairArtifact, row: CertificateRow) -> tuple[str, str]:
    if row.role == "b":
        return art.b[: row.prefix_len], ""
    s = row.stage
    return art.a[: row.prefix_len], art.b[: art.schedule.alpha_slot_b(s)]


def _try_incompressible(sched: StageSchedule, slack_b: int, slack_a: int,
                        machine: Machine, cap: int) -> list[tuple[BitString, BitString]]:
    a, b = "", ""
    blocks = []
    for s in range(1, sched.stages + 1):
        la, lb = sched.alpha_len[s - 1], sched.beta_len[s - 1]
        found: dict[str, BitString] = {}

        def b_ok(x: str) -> bool:
            return _lower(machine, x, "", cap) >= len(x) - slack_b

        def alpha_for(beta: str) -> bool:
            cond = b + beta

            def ok(tau: str) -> bool:
                return b_ok(cond + tau) and _lower(machine, a + tau, cond, cap) >= len(a) + len(tau) - slack_a

            try:
                found[beta] = first_block(la, ok)
            except NoWitness:
                return False
            return True

        beta = first_block(lb, lambda x: b_ok(b + x), alpha_for)
        alpha = found[beta]
        blocks.append((alpha, beta))
        a, b = a + alpha, b + beta + alpha
    return blocks


def build_pair_incompressibility(sched: StageSchedule = DEFAULT_SCHEDULE, slack_policy="discover",
                                 machine: Machine = DESK_MACHINE, search_cap: int = DEFAULT_SEARCH_CAP,
                                 max_slack: int = MAX_SLACK) -> PairArtifact:
    """Build ``(a, b)`` with every prefix of ``b`` certified incompressible
    (slack ``slack_B``) and every prefix of ``a`` certified incompressible
    given the ``b``-prefix its stage ends on (slack ``slack_A``).

    ``slack_policy`` is ``"discover"`` (smallest slacks, ``slack_B`` first,
    up to ``max_slack`` each) or a fixed pair ``(slack_B, slack_A)``.
    """
    problems = sched.audit()
    if problems:
        raise ScheduleError("; ".join(problems))
    if slack_policy == "discover":
        candidates = [(sb, sa) for sb in range(max_slack + 1) for sa in range(max_slack + 1)]
    else:
        candidates = [tuple(slack_policy)]
    blocks = None
    for slack_b, slack_a in candidates:
        try:
            blocks = _try_incompressible(sched, slack_b, slack_a, machine, search_cap)
            break
        except NoWitness:
            continue
    if blocks is None:
        raise NoWitness(f"no pair with slacks {candidates[-1]} or smaller for schedule {sched}")
    a = "".join(al for al, _ in blocks)
    b = "".join(be + al for al, be in blocks)
    art = PairArtifact("incompressibility", BitString(a), BitString(b), sched, blocks,
                       {"B": slack_b, "A": slack_a}, [], machine, search_cap)
    rows = []
    for n in range(1, len(b) + 1):
        stage = next(s for s in range(1, sched.stages + 1) if n <= sched.b_len(s))
        low = _lower(machine, b[:n], "", search_cap)
        rows.append(CertificateRow(stage, "b", n, _fmt(low, search_cap), str(n - slack_b)))
    for s in range(1, sched.stages + 1):
        cond = b[: sched.alpha_slot_b(s)]
        for n in range(sched.a_len(s - 1) + 1, sched.a_len(s) + 1):
            low = _lower(machine, a[:n], cond, search_cap)
            rows.append(CertificateRow(s, "a|b", n, _fmt(low, search_cap), str(n - slack_a), f"cond_len={len(cond)}"))
    art.certificates = rows
    return art


def _fmt(low: int, cap: int) -> str:
    return f">{cap}" if low > cap else str(low)


@dataclass(frozen=True)
class TransferRecord:
    n: int
    b_witness: BitString
    c: int
    program: BitString
    output_ok: bool
    within_budget: bool
    bound: int

    @property
    def holds(self) -> bool:
        return self.output_ok and self.within_budget and len(self.program) <= self.bound


def stage_transfer(art: PairArtifact, budget: ExecBudget = COMPRESSION_BUDGET,
                   machine: Machine = DESK_MACHINE, search_cap: int = DEFAULT_SEARCH_CAP) -> list[TransferRecord]:
    """At each stage boundary ``n = |A_s|``: take the shortest time-bounded
    program for ``b↾n`` (a literal if the search finds none), set
    ``c = n - |witness|``, and check that the Q_n program built from it
    prints ``(a ⊎ b)↾2n`` within budget using at most ``2n - c + k0`` bits."""
    k0 = qn_header_constant(machine)
    out = []
    for s in range(1, art.schedule.stages + 1):
        n = art.schedule.a_len(s)
        target = art.b[:n]
        prog = complexity_table(machine, "", budget, search_cap).get(target)
        witness = BitString(prog.code) if prog else encode_literal(target)
        c = n - len(witness)
        program = qn_program(witness + art.a[:n])
        run = machine.run(program, "", budget)
        out.append(TransferRecord(n, witness, c, program, run.halted and run.output == interleave(art.a[:n], target),
                                  run.status != "budget_exceeded", 2 * n - c + k0))
    return out


# ---------------------------------------------------------------------------
# martingale builds


def default_pools(machine: Machine = DESK_MACHINE, max_code_len: int = 10,
                  budget: ExecBudget = SEPARATION_BUDGET) -> tuple[list[Martingale], list[Martingale]]:
    """Plain and oracle pools as single mixtures of every machine-derived bettor."""
    return ([mixture(machine_pool(machine, max_code_len))],
            [mixture(oracle_machine_pool(machine, max_code_len, budget.allowance), kind="oracle")])


def _nonincreasing_block(length: int, pool: Sequence[Martingale], before: str, oracle: Optional[str] = None) -> BitString:
    def ok(x: str) -> bool:
        w = before + x
        return all(d(w, oracle) <= d(w[:-1], oracle) for d in pool)

    try:
        return first_block(length, ok)
    except NoWitness:
        # smallest failing length, for the report
        for k in range(1, length + 1):
            try:
                first_block(k, ok)
            except NoWitness:
                raise NoWitness(f"pool is too strong: no block of length {k} after {len(before)} bits") from None
        raise


def _martingale_core(sched: StageSchedule, plain_pool, oracle_pool) -> list[tuple[BitString, BitString]]:
    """Blocks for the long side (β then copied α) and the short side (α).

    ``β_s`` keeps every plain pool member non-increasing on the long side;
    ``α_s`` keeps every oracle member non-increasing on the short side with
    the long prefix ``L_{s-1} β_s`` as oracle.
    """
    short, long = "", ""
    blocks = []
    for s in range(1, sched.stages + 1):
        beta = _nonincreasing_block(sched.beta_len[s - 1], plain_pool, long)
        alpha = _nonincreasing_block(sched.alpha_len[s - 1], oracle_pool, short, long + beta)
        blocks.append((alpha, beta))
        short, long = short + alpha, long + beta + alpha
    return blocks


def _assemble(kind, sched, blocks, pools) -> PairArtifact:
    short = "".join(al for al, _ in blocks)
    long = "".join(be + al for al, be in blocks)
    a, b = (long, short) if kind == "asymmetric" else (short, long)
    art = PairArtifact(kind, BitString(a), BitString(b), sched, blocks, pools=pools)
    art.certificates = _martingale_certificates(art)
    return art


def build_pair_martingale(sched: StageSchedule = DEFAULT_SCHEDULE, pool=None) -> PairArtifact:
    """``b``'s fresh blocks defeat the plain pool, ``a``'s blocks defeat the
    oracle pool reading ``b`` inside its window; ``a ⊎ b`` still loses to
    the copy predictor, which doubles once per stage.

    ``pool`` is ``(plain, oracle)``, two sequences of strategies each of
    which must stay non-increasing; default: machine-derived mixtures.
    """
    problems = sched.audit()
    if problems:
        raise ScheduleError("; ".join(problems))
    pool = pool if pool is not None else default_pools(budget=sched.budget)
    return _assemble("martingale", sched, _martingale_core(sched, *pool), pool)


def build_pair_asymmetric(sched: StageSchedule = DEFAULT_SCHEDULE, pool=None) -> PairArtifact:
    """Mirror of :func:`build_pair_martingale`: ``a`` is the long side and
    carries far copies of ``b``'s blocks."""
    problems = sched.audit()
    if problems:
        raise ScheduleError("; ".join(problems))
    pool = pool if pool is not None else default_pools(budget=sched.budget)
    return _assemble("asymmetric", sched, _martingale_core(sched, *pool), pool)


def copy_predictor(art: PairArtifact) -> Martingale:
    """Last-index bettor on ``a ⊎ b`` predicting each ``α_s`` copy in ``b``."""
    sched = art.schedule
    starts = {sched.alpha_slot_a(s): sched.alpha_slot_b(s) for s in range(1, sched.stages + 1)}
    return last_index_bettor(lambda w: w[-1], sched.budget, starts, reach=starts.__getitem__)


def far_copy_bettors(art: PairArtifact) -> tuple[Martingale, Martingale]:
    """For an asymmetric pair: the oracle bettor on ``a`` reading ``b``'s
    blocks, and the reverse bettor on ``b`` reading ``a``'s far copies,
    both limited to the honesty window."""
    sched = art.schedule
    window = sched.budget.allowance
    forward = {sched.alpha_slot_b(s) + k: sched.alpha_slot_a(s) + k
               for s in range(1, sched.stages + 1) for k in range(sched.alpha_len[s - 1])}
    reverse = {v: k for k, v in forward.items()}
    return oracle_copy_bettor(forward, window, "forward_copy"), oracle_copy_bettor(reverse, window, "reverse_copy")


def _martingale_certificates(art: PairArtifact) -> list[CertificateRow]:
    sched = art.schedule
    rows = []
    plain, oracle = art.pools if art.pools is not None else default_pools(budget=sched.budget)
    long, short = (art.a, art.b) if art.kind == "asymmetric" else (art.b, art.a)
    long_role, short_role = ("a", "b") if art.kind == "asymmetric" else ("b", "a")
    for s in range(1, sched.stages + 1):
        start = sched.b_len(s - 1)
        for n in range(start, start + sched.beta_len[s - 1] + 1):
            for i, d in enumerate(plain):
                v = d(long[:n])
                rows.append(CertificateRow(s, f"{long_role}:plain{i}", n, str(v), "nonincreasing"))
        cond = long[: sched.alpha_slot_b(s)]
        for n in range(sched.a_len(s - 1), sched.a_len(s) + 1):
            for i, d in enumerate(oracle):
                v, reads = d.evaluate(short[:n], cond)
                rows.append(CertificateRow(s, f"{short_role}:oracle{i}", n, str(v), "nonincreasing",
                                           f"max_read={max(reads) if reads else -1}"))
    if art.kind == "martingale":
        t = replay(copy_predictor(art), _joint(art))
        for s in range(1, sched.stages + 1):
            p = 2 * sched.alpha_slot_b(s) + 2
            rows.append(CertificateRow(s, "copy_predictor", p, str(t.prefix_values[p]), str(2 ** s)))
    else:
        fwd, rev = far_copy_bettors(art)
        tf = replay(fwd, art.a, art.b)
        tr = replay(rev, art.b, art.a)
        for s in range(1, sched.stages + 1):
            p = sched.alpha_slot_b(s) + sched.alpha_len[s - 1]
            rows.append(CertificateRow(s, "forward_copy", p, str(tf.prefix_values[p]),
                                       str(2 ** sum(sched.alpha_len[:s]))))
            q = sched.a_len(s)
            rows.append(CertificateRow(s, "reverse_copy", q, str(tr.prefix_values[q]), "1"))
    return rows


def _joint(art: PairArtifact) -> BitString:
    """``a ⊎ b`` over the common length, with ``a`` padded by zeros so that
    every copy in ``b`` is reached (the padding is never bet on)."""
    a = art.a + "0" * (len(art.b) - len(art.a))
    return interleave(a, art.b)


def pool_gains(art: PairArtifact) -> list[CertificateRow]:
    """Certificate rows where a pool strategy gained capital over the
    previous row of the same stage and role (should be empty)."""
    gains = []
    last: dict[tuple[int, str], CertificateRow] = {}
    for row in art.certificates:
        if row.bound != "nonincreasing":
            continue
        key = (row.stage, row.role)
        prev = last.get(key)
        if prev is not None and Capital.parse(row.value) > Capital.parse(prev.value):
            gains.append(row)
        last[key] = row
    return gains
