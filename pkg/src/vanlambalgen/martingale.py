"""Martingales with exact capital, and the combinators that move capital
between an interleaved sequence and its two halves.

A plain strategy is called as ``d(w)``; an oracle strategy as
``d(w, oracle)`` where ``oracle`` is a finite prefix of the other sequence.
Oracle reads go through :class:`OracleTape`, which logs every position so
transcripts can be audited against an honesty window.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .exactcap import ONE, ZERO, Capital, mul_ratio
from .refmachine import ExecBudget, Machine
from .seqcore import BitString, all_strings, deinterleave, interleave

__all__ = [
    "OracleTape",
    "Martingale",
    "PoolMember",
    "MartingaleTranscript",
    "WindowViolation",
    "constant",
    "from_bets",
    "oracle_from_bets",
    "from_values",
    "validate_fairness",
    "lift_interleave",
    "project_average",
    "projection",
    "savings_transform",
    "split_h_g",
    "last_index_bettor",
    "copy_bettor",
    "oracle_copy_bettor",
    "resilience_check",
    "machine_pool",
    "oracle_machine_pool",
    "mixture",
    "replay",
    "strongly_influenced_by_last_index",
    "DEFAULT_THRESHOLDS",
]

DEFAULT_THRESHOLDS = (2, 4, 8, 16, 32, 64)
HALF = Capital(1, 1)


class WindowViolation(RuntimeError):
    pass


class OracleTape:
    """Read-logging view of a finite oracle prefix."""

    __slots__ = ("bits", "reads")

    def __init__(self, bits: str):
        self.bits = str(bits)
        self.reads: list[int] = []

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i: int) -> str:
        if not 0 <= i < len(self.bits):
            raise IndexError(f"oracle position {i} not available (prefix has {len(self.bits)} bits)")
        self.reads.append(i)
        return self.bits[i]

    def prefix(self, n: int) -> str:
        if n > len(self.bits):
            raise IndexError(f"oracle prefix {n} not available (have {len(self.bits)} bits)")
        self.reads.extend(range(n))
        return self.bits[:n]


class Martingale:
    """A betting strategy: a deterministic map from strings to capital."""

    def __init__(self, func: Callable, *, kind: str = "plain", name: str = "",
                 budget: Optional[ExecBudget] = None, window: Optional[Callable[[int], int]] = None):
        if kind not in ("plain", "oracle"):
            raise ValueError(kind)
        self.func = func
        self.kind = kind
        self.name = name or getattr(func, "__name__", "martingale")
        self.declared_budget = budget
        self.window = window  # oracle strategies: readable oracle prefix length for |w|
        self._cache: dict = {}

    def __call__(self, w: str, oracle: Optional[str] = None) -> Capital:
        if self.kind == "plain":
            key = w
            if key not in self._cache:
                self._cache[key] = self.func(w)
            return self._cache[key]
        if oracle is None:
            raise TypeError(f"oracle strategy {self.name} needs an oracle prefix")
        return self.evaluate(w, oracle)[0]

    def evaluate(self, w: str, oracle: Optional[str] = None) -> tuple[Capital, tuple[int, ...]]:
        """Value at ``w`` and the oracle positions read to compute it."""
        if self.kind == "plain":
            return self(w), ()
        key = (w, oracle)
        if key not in self._cache:
            tape = OracleTape(oracle)
            value = self.func(w, tape)
            self._cache[key] = (value, tuple(sorted(set(tape.reads))))
        return self._cache[key]

    def __repr__(self) -> str:
        return f"Martingale({self.name!r}, kind={self.kind})"


@dataclass(frozen=True)
class PoolMember:
    strategy: Martingale
    weight: Capital
    code: str = ""


# ---------------------------------------------------------------------------
# constructors


def constant(value: Capital = ONE, kind: str = "plain") -> Martingale:
    value = Capital.coerce(value)
    if kind == "oracle":
        return Martingale(lambda w, tape: value, kind="oracle", name="constant")
    return Martingale(lambda w: value, name="constant")


def _walk(w: str, step) -> Capital:
    value = ONE
    for n in range(len(w)):
        pick = step(n, w[:n])
        if pick is None:
            continue
        bit, stake = pick
        stake = Capital.coerce(stake)
        value = value * (ONE + stake if w[n] == bit else ONE - stake)
        if not value:
            break
    return value


def from_bets(bet: Callable[[str], Optional[tuple[str, Capital]]], name: str = "") -> Martingale:
    """Martingale that, at history ``w``, stakes a fraction of its capital on a bit.

    ``bet(w)`` returns ``(bit, fraction)`` with ``0 <= fraction <= 1`` or
    ``None`` for no bet.  Every step ratio is ``1 ± fraction``, so ratios
    stay dyadic whenever the fractions are.
    """
    def func(w: str) -> Capital:
        if not w:
            return ONE
        prev = d(w[:-1])  # memoized, so each history is settled once
        pick = bet(w[:-1]) if prev else None
        if pick is None:
            return prev
        bit, stake = pick
        stake = Capital.coerce(stake)
        return prev * (ONE + stake if w[-1] == bit else ONE - stake)

    d = Martingale(func, name=name or "from_bets")
    return d


def oracle_from_bets(bet: Callable[[str, OracleTape], Optional[tuple[str, Capital]]], name: str = "",
                     window: Optional[Callable[[int], int]] = None) -> Martingale:
    return Martingale(lambda w, tape: _walk(w, lambda n, h: bet(h, tape)), kind="oracle",
                      name=name or "oracle_from_bets", window=window)


def from_values(values: dict[str, Capital], default_fair: bool = True, name: str = "table") -> Martingale:
    """Strategy given by an explicit table; unlisted strings inherit their
    longest listed prefix's value (no bet) when ``default_fair``."""
    vals = {k: Capital.coerce(v) for k, v in values.items()}

    def func(w: str) -> Capital:
        for n in range(len(w), -1, -1):
            if w[:n] in vals:
                return vals[w[:n]]
        return ONE if default_fair else ZERO

    return Martingale(func, name=name)


# ---------------------------------------------------------------------------
# fairness


def validate_fairness(d: Martingale, domain_depth: int, oracle: Optional[str] = None) -> bool:
    """``d(w0) + d(w1) == 2 d(w)`` for every ``w`` shorter than ``domain_depth``."""
    if domain_depth > 16:
        raise ValueError("fairness is checked exhaustively only up to depth 16")
    for n in range(domain_depth):
        for w in all_strings(n):
            if d(w + "0", oracle) + d(w + "1", oracle) != d(w, oracle).double():
                return False
    return True


# ---------------------------------------------------------------------------
# interleaving combinators


def lift_interleave(d_b: Martingale) -> Martingale:
    """Bet only on the odd (B) positions of an interleaved string, as ``d_b`` would."""
    return Martingale(lambda x: d_b(deinterleave(x)[1]), name=f"lift({d_b.name})",
                      budget=d_b.declared_budget)


def project_average(d_ab: Martingale, sigma: str, cap: int = 16) -> Capital:
    """Average of ``d_ab(tau ⊎ sigma)`` over all ``tau`` with ``|tau| = |sigma|``."""
    if len(sigma) > cap:
        raise ValueError(f"projection over 2^{len(sigma)} terms exceeds cap 2^{cap}")
    total = ZERO
    for tau in all_strings(len(sigma)):
        total = total + d_ab(interleave(tau, sigma))
    return Capital(total.numerator, total.exponent + len(sigma))


def projection(d_ab: Martingale, cap: int = 16) -> Martingale:
    return Martingale(lambda s: project_average(d_ab, s, cap), name=f"proj({d_ab.name})")


def _step(value: Capital, num: Capital, den: Capital) -> Capital:
    """Scale by a capital ratio; once the source is ruined (``den == 0``) so is the result."""
    return mul_ratio(value, num, den) if den else ZERO


def savings_transform(d: Martingale) -> tuple[Callable[[str], Capital], Callable[[str], Capital]]:
    """Split ``d`` into a betting part ``f`` (kept below 2) and a savings part ``s``.

    ``f`` follows ``d``'s capital ratios; once ``f`` would reach 2 it resets
    to 1 and the excess is banked into ``s``, which never decreases.
    """
    memo: dict[str, tuple[Capital, Capital]] = {"": (ONE, ZERO)}

    def state(sigma: str) -> tuple[Capital, Capital]:
        if sigma in memo:
            return memo[sigma]
        start = len(sigma)
        while sigma[:start] not in memo:
            start -= 1
        f, s = memo[sigma[:start]]
        for n in range(start, len(sigma)):
            v = _step(f, d(sigma[: n + 1]), d(sigma[:n]))
            if v < 2:
                f = v
            else:
                f, s = ONE, s + (v - ONE)
            memo[sigma[: n + 1]] = (f, s)
        return f, s

    return (lambda sigma: state(sigma)[0]), (lambda sigma: state(sigma)[1])


def split_h_g(d: Martingale) -> tuple[Martingale, Martingale]:
    """Oracle martingales ``h`` (bets on the A half, oracle = B) and ``g``
    (bets on the B half, oracle = A) whose product telescopes to
    ``d(λ) * d(a ⊎ b ↾ 2n)``."""

    def h(x: str, tape: OracleTape) -> Capital:
        n = len(x)
        y = tape.prefix(max(n - 1, 0))
        value = d("")
        for k in range(1, n + 1):
            value = _step(value, d(interleave(x[:k], y[: k - 1])), d(interleave(x[: k - 1], y[: k - 1])))
        return value

    def g(y: str, tape: OracleTape) -> Capital:
        n = len(y)
        x = tape.prefix(n)
        value = d("")
        for k in range(1, n + 1):
            value = _step(value, d(interleave(x[:k], y[:k])), d(interleave(x[:k], y[: k - 1])))
        return value

    return (Martingale(h, kind="oracle", name=f"h({d.name})", window=lambda n: max(n - 1, 0)),
            Martingale(g, kind="oracle", name=f"g({d.name})", window=lambda n: n))


# ---------------------------------------------------------------------------
# copy bettors


def strongly_influenced_by_last_index(f: Callable[[str], str], max_len: int = 8) -> bool:
    """Flipping the last bit of any nonempty window (up to ``max_len``) flips ``f``."""
    for n in range(1, max_len + 1):
        for w in all_strings(n):
            flipped = w[:-1] + ("1" if w[-1] == "0" else "0")
            if f(w) == f(flipped):
                return False
    return True


def copy_bettor(pairs: dict[int, int], name: str = "copy") -> Martingale:
    """At each target position ``p`` bet everything that ``x[p] == x[pairs[p]]``.

    Sources must come strictly before their targets.
    """
    for p, q in pairs.items():
        if not 0 <= q < p:
            raise ValueError(f"source {q} must precede target {p}")

    def func(x: str) -> Capital:
        value = ONE
        for p in sorted(pairs):
            if p >= len(x):
                break
            if x[p] != x[pairs[p]]:
                return ZERO
            value = value.double()
        return value

    return Martingale(func, name=name)


def last_index_bettor(f: Callable[[str], str], t_bound: ExecBudget, S: Iterable[int],
                      reach: Optional[Callable[[int], int]] = None) -> Martingale:
    """Plain martingale on ``a ⊎ b`` that predicts ``b`` at the last index of a
    window ending at ``reach(i)`` and bets everything that ``f(window) == a_i``.

    The window is ``b[max(0, i - c*t(i)) .. reach(i)]``; by default
    ``reach(i) = i + c*t(i) - 1``.  Positions with ``reach(i) < i`` are skipped
    because ``a_i`` would not be visible yet.  Every other position is an
    even bet (capital unchanged).
    """
    horizon = t_bound.allowance
    if reach is None:
        reach = lambda i: i + horizon(i) - 1  # noqa: E731
    bets: dict[int, tuple[int, int]] = {}  # interleaved position -> (i, window start)
    for i in sorted(set(S)):
        j = reach(i)
        if j < i:
            continue
        p = 2 * j + 1
        if p in bets:
            raise ValueError(f"two indices of S reach the same position {j}")
        bets[p] = (i, max(0, i - horizon(i)))

    def func(x: str) -> Capital:
        value = ONE
        for p in sorted(bets):
            if p >= len(x):
                break
            i, start = bets[p]
            window = x[2 * start + 1 : p + 1 : 2]
            if f(window) != x[2 * i]:
                return ZERO
            value = value.double()
        return value

    d = Martingale(func, name="last_index", budget=t_bound)
    d.bet_positions = tuple(sorted(bets))
    return d


def oracle_copy_bettor(sources: dict[int, int], window: Callable[[int], int], name: str = "oracle_copy") -> Martingale:
    """Oracle martingale on ``x`` betting that ``x[q] == oracle[sources[q]]``,
    but only when that oracle position lies inside the readable window for
    the value being computed (``window(q + 1)`` bits); otherwise it does not bet."""

    def bet(h: str, tape: OracleTape):
        q = len(h)
        src = sources.get(q)
        if src is None or src >= min(window(q + 1), len(tape)):
            return None
        return tape[src], ONE

    return oracle_from_bets(bet, name=name, window=window)


# ---------------------------------------------------------------------------
# machine-derived pools


def _pattern_bet(pattern: str, stake: Capital):
    if not pattern:
        return lambda h: None
    return lambda h: (pattern[len(h) % len(pattern)], stake)


def machine_pool(machine: Machine, max_code_len: int, stake: Capital = HALF) -> list[PoolMember]:
    """One plain bettor per valid program: it stakes ``stake`` of its capital
    on the program's output read cyclically; weight ``2^-|code|``."""
    members = []
    for prog in machine.program_table(max_code_len):
        out = machine.run(prog, "")
        pattern = out.output if out.halted else ""
        d = from_bets(_pattern_bet(pattern, stake), name=f"pattern[{prog.code}]")
        members.append(PoolMember(d, Capital(1, len(prog.code)), prog.code))
    return members


def oracle_machine_pool(machine: Machine, max_code_len: int, window: Callable[[int], int],
                        stake: Capital = HALF) -> list[PoolMember]:
    """One oracle bettor per program: to bet on ``x_n`` it runs the program on
    the readable oracle prefix (``window(n + 1)`` bits) and stakes on bit
    ``n mod |output|`` of the result."""
    members = []
    for prog in machine.program_table(max_code_len):
        def bet(h: str, tape: OracleTape, prog=prog):
            n = len(h)
            visible = tape.bits[: min(window(n + 1), len(tape))]
            out = machine.run(prog, visible)
            if not out.halted or not out.output:
                return None
            for off, length in out.cond_reads:
                for pos in range(off, off + length):
                    tape[pos]
            return out.output[n % len(out.output)], stake

        d = oracle_from_bets(bet, name=f"oracle[{prog.code}]", window=window)
        members.append(PoolMember(d, Capital(1, len(prog.code)), prog.code))
    return members


def mixture(pool: Sequence[PoolMember], kind: Optional[str] = None) -> Martingale:
    """``sum w_i d_i + (1 - sum w_i)``: a single exact martingale dominating
    every member up to its weight."""
    total = sum((m.weight for m in pool), ZERO)
    if total > ONE:
        raise ValueError("pool weights sum above 1")
    rest = ONE - total
    kind = kind or (pool[0].strategy.kind if pool else "plain")
    if kind == "plain":
        def func(w):
            return sum((m.weight * m.strategy(w) for m in pool), rest)
        return Martingale(func, name="pool-mixture")

    def ofunc(w, tape: OracleTape):
        value = rest
        for m in pool:
            v, reads = m.strategy.evaluate(w, tape.bits)
            for pos in reads:
                tape[pos]
            value = value + m.weight * v
        return value

    window = pool[0].strategy.window if pool else None
    return Martingale(ofunc, kind="oracle", name="oracle-pool-mixture", window=window)


# ---------------------------------------------------------------------------
# transcripts


@dataclass
class MartingaleTranscript:
    prefix_values: list[Capital]
    oracle_reads: list[tuple[int, ...]] = field(default_factory=list)
    threshold_hits: dict = field(default_factory=dict)
    name: str = ""

    def step_bound_ok(self) -> bool:
        """``0 <= value(n) <= 2 value(n-1)`` along the whole transcript."""
        return all(v <= u.double() for u, v in zip(self.prefix_values, self.prefix_values[1:]))

    def window_ok(self, window: Callable[[int], int]) -> bool:
        return all(all(pos < window(n) for pos in reads) for n, reads in enumerate(self.oracle_reads))

    @property
    def final(self) -> Capital:
        return self.prefix_values[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["prefix_len", "numerator", "exponent", "oracle_reads"])
        for n, v in enumerate(self.prefix_values):
            reads = self.oracle_reads[n] if n < len(self.oracle_reads) else ()
            w.writerow([n, v.numerator, v.exponent, " ".join(map(str, reads))])
        return buf.getvalue()


def replay(d: Martingale, x: str, oracle: Optional[str] = None,
           oracle_for: Optional[Callable[[int], str]] = None,
           thresholds: Sequence[int] = DEFAULT_THRESHOLDS) -> MartingaleTranscript:
    """Capital of ``d`` on every prefix of ``x``.

    Oracle strategies read ``oracle`` (fixed) or ``oracle_for(n)`` (the
    oracle prefix to use at prefix length ``n``).
    """
    values, reads = [], []
    hits: dict[int, int] = {}
    for n in range(len(x) + 1):
        orc = oracle_for(n) if oracle_for is not None else oracle
        v, r = d.evaluate(x[:n], orc)
        values.append(v)
        reads.append(r)
        for level in thresholds:
            if level not in hits and v >= level:
                hits[level] = n
    return MartingaleTranscript(values, reads, hits, d.name)


def resilience_check(a: str, b: str, pool: Sequence[Martingale], threshold: Capital) -> list[dict]:
    """For each oracle strategy, its best capital in the two roles of a
    resilient pair: on ``a↾n`` reading ``b`` (window ``n - 1``) and on
    ``b↾n`` reading ``a`` (window ``n``).  ``honest`` records whether every
    oracle read stayed inside its role's window."""
    if len(a) != len(b):
        raise ValueError("resilience is checked on equal-length prefixes")
    threshold = Capital.coerce(threshold)
    rows = []
    for e in pool:
        h_vals, g_vals, honest = [], [], True
        for n in range(len(a) + 1):
            v, reads = e.evaluate(a[:n], b)
            h_vals.append(v)
            honest &= all(p < n - 1 for p in reads)
            v, reads = e.evaluate(b[:n], a)
            g_vals.append(v)
            honest &= all(p < n for p in reads)
        h_max, g_max = max(h_vals), max(g_vals)
        rows.append({"name": e.name, "h_max": h_max, "g_max": g_max, "honest": honest,
                     "violation": h_max > threshold or g_max > threshold})
    return rows
