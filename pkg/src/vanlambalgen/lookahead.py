"""Betting games where a strategy may peek at future positions.

At step ``n`` a strategy decides the capital after bit ``n-1`` is revealed.
It sees the history ``x↾n-1`` and may query positions in
``{0..n-2} ∪ {n..horizon(n)}``; never position ``n-1`` itself.  Every
queried position joins a ledger that only grows, and a strategy may not
bet on a position already in its ledger (it may still query).

A strategy is a callable ``step(ctx) -> (v0, v1) | None`` where ``v0`` and
``v1`` are the capital after a 0 or a 1 at position ``n-1``.  ``None`` means
no bet.  The harness in :func:`play` enforces every rule and raises
:class:`ProtocolViolation` naming the rule, step and position.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

from .exactcap import ONE, Capital
from .martingale import MartingaleTranscript
from .refmachine import ExecBudget

__all__ = [
    "ProtocolViolation",
    "GameContext",
    "LookaheadStrategy",
    "LedgerStep",
    "LookaheadTranscript",
    "QueryLedger",
    "play",
    "lift_lookahead_B",
    "lift_lookahead_cond",
    "never_querying",
    "check_fair_on_all",
]


class ProtocolViolation(RuntimeError):
    def __init__(self, rule: str, step: int, position: Optional[int] = None):
        self.rule, self.step, self.position = rule, step, position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"{rule} violation in step {step}{where}")


@dataclass
class GameContext:
    """What a strategy sees at one step."""

    n: int
    history: str
    capital: Capital
    ledger: frozenset
    length: int
    query: Callable[[int], str]
    oracle: Optional[Callable[[int], str]] = None


@dataclass(frozen=True)
class LookaheadStrategy:
    step: Callable[[GameContext], Optional[tuple[Capital, Capital]]]
    horizon: Callable[[int], int]
    name: str = "lookahead"
    oracle_horizon: Optional[Callable[[int], int]] = None

    @classmethod
    def with_budget(cls, step, budget: ExecBudget, name: str = "lookahead", oracle: bool = False):
        """Query horizon ``c*t(n)`` taken from an execution budget."""
        return cls(step, budget.allowance, name, budget.allowance if oracle else None)

    @property
    def uses_oracle(self) -> bool:
        return self.oracle_horizon is not None


@dataclass(frozen=True)
class LedgerStep:
    step: int
    bet_position: Optional[int]
    queried: tuple[int, ...]
    oracle_reads: tuple[int, ...]
    ledger: frozenset


@dataclass
class QueryLedger:
    """Ledger trail along one played path; ``revealed[n]`` is the ledger after step ``n``."""

    revealed: list[frozenset] = field(default_factory=lambda: [frozenset()])

    def extend(self, positions) -> frozenset:
        new = self.revealed[-1] | frozenset(positions)
        self.revealed.append(new)
        return new

    def monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.revealed, self.revealed[1:]))

    @property
    def current(self) -> frozenset:
        return self.revealed[-1]


@dataclass
class LookaheadTranscript:
    transcript: MartingaleTranscript
    trail: list[LedgerStep]
    ledger: QueryLedger

    @property
    def values(self) -> list[Capital]:
        return self.transcript.prefix_values

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "bet_positions", "queried_positions", "oracle_reads", "numerator", "exponent"])
        for s in self.trail:
            v = self.values[s.step]
            w.writerow([s.step, "" if s.bet_position is None else s.bet_position,
                        " ".join(map(str, s.queried)), " ".join(map(str, s.oracle_reads)),
                        v.numerator, v.exponent])
        return buf.getvalue()


def play(d: LookaheadStrategy, x: str, oracle: Optional[str] = None) -> LookaheadTranscript:
    """Replay the game on the fixture ``x`` (and ``oracle`` for oracle strategies)."""
    if len(x) < 1:
        raise ValueError("play needs a nonempty fixture")
    if d.uses_oracle and oracle is None:
        raise TypeError(f"{d.name} reads an oracle; pass one")
    capital = ONE
    ledger = QueryLedger()
    values, reads, trail = [capital], [()], []
    for n in range(1, len(x) + 1):
        queried: list[int] = []
        oread: list[int] = []
        horizon = d.horizon(n)

        def query(i: int, n=n, horizon=horizon, queried=queried) -> str:
            if i == n - 1:
                raise ProtocolViolation("no-reveal", n, i)
            if i < 0 or (i >= n and i > horizon):
                raise ProtocolViolation("window", n, i)
            if i >= len(x):
                raise ProtocolViolation("out-of-fixture", n, i)
            queried.append(i)
            return x[i]

        def read_oracle(j: int, n=n, oread=oread) -> str:
            if j < 0 or j > d.oracle_horizon(n):
                raise ProtocolViolation("oracle-window", n, j)
            if j >= len(oracle):
                raise ProtocolViolation("out-of-fixture", n, j)
            oread.append(j)
            return oracle[j]

        ctx = GameContext(n, x[: n - 1], capital, ledger.current, len(x), query,
                          read_oracle if d.uses_oracle else None)
        bet = d.step(ctx)
        forbidden = (n - 1) in ledger.current
        if bet is None:
            bet_position = None
        else:
            v0, v1 = Capital.coerce(bet[0]), Capital.coerce(bet[1])
            if v0 + v1 != capital.double():
                raise ProtocolViolation("fairness", n, n - 1)
            if v0 != v1 and forbidden:
                raise ProtocolViolation("forbidden-bet", n, n - 1)
            capital = v1 if x[n - 1] == "1" else v0
            bet_position = n - 1 if v0 != v1 else None
        new = ledger.extend(queried)
        values.append(capital)
        reads.append(tuple(sorted(set(oread))))
        trail.append(LedgerStep(n, bet_position, tuple(sorted(set(queried))), reads[-1], new))
    hits: dict[int, int] = {}
    for n, v in enumerate(values):
        for level in (2, 4, 8, 16, 32, 64):
            if level not in hits and v >= level:
                hits[level] = n
    return LookaheadTranscript(MartingaleTranscript(values, reads, hits, d.name), trail, ledger)


def never_querying(bet: Callable[[str], Optional[tuple[str, Capital]]], name: str = "plain") -> LookaheadStrategy:
    """Adapt an ordinary betting rule ``bet(history) -> (bit, fraction)``."""

    def step(ctx: GameContext):
        pick = bet(ctx.history)
        if pick is None:
            return None
        bit, frac = pick
        up = ctx.capital * (ONE + Capital.coerce(frac))
        down = ctx.capital * (ONE - Capital.coerce(frac))
        return (down, up) if bit == "1" else (up, down)

    return LookaheadStrategy(step, lambda n: 0, name)


def lift_lookahead_B(h: LookaheadStrategy) -> LookaheadStrategy:
    """Play ``h`` on the odd positions of ``x ⊎ y``; flat on the even ones.

    Capital after ``(x⊎y)↾2m`` equals ``h`` on ``y↾m``, and ``h``'s query
    ``i`` becomes ledger entry ``2i + 1``.
    """
    if h.uses_oracle:
        raise TypeError("lift_lookahead_B takes a strategy without oracle")

    def step(ctx: GameContext):
        if ctx.n % 2:
            return None
        m = ctx.n // 2
        sub = GameContext(
            m, ctx.history[1::2], ctx.capital,
            frozenset((p - 1) // 2 for p in ctx.ledger if p % 2),
            ctx.length // 2, lambda i: ctx.query(2 * i + 1),
        )
        return h.step(sub)

    return LookaheadStrategy(step, lambda n: 2 * h.horizon(max(n // 2, 1)) + 1, f"liftB({h.name})")


def lift_lookahead_cond(g: LookaheadStrategy) -> LookaheadStrategy:
    """Play the oracle strategy ``g`` on the even positions of ``x ⊎ y``,
    answering its oracle reads from the odd positions; flat on odd-indexed bits.

    Capital after ``(x⊎y)↾2m-1`` equals ``g`` on ``x↾m`` with oracle ``y``;
    ``g``'s queries ``i`` land in the ledger as ``2i`` and its oracle reads
    ``j`` as ``2j + 1``.
    """
    if not g.uses_oracle:
        raise TypeError("lift_lookahead_cond takes an oracle strategy")

    def step(ctx: GameContext):
        if ctx.n % 2 == 0:
            return None
        m = (ctx.n + 1) // 2
        sub = GameContext(
            m, ctx.history[0::2], ctx.capital,
            frozenset(p // 2 for p in ctx.ledger if p % 2 == 0),
            (ctx.length + 1) // 2, lambda i: ctx.query(2 * i), lambda j: ctx.query(2 * j + 1),
        )
        return g.step(sub)

    def horizon(n: int) -> int:
        m = max((n + 1) // 2, 1)
        return max(2 * g.horizon(m), 2 * g.oracle_horizon(m) + 1)

    return LookaheadStrategy(step, horizon, f"liftC({g.name})")


def check_fair_on_all(d: LookaheadStrategy, fixtures, oracle: Optional[str] = None) -> bool:
    """Play every fixture; any protocol violation (fairness included) means False."""
    try:
        for x in fixtures:
            play(d, x, oracle)
    except ProtocolViolation:
        return False
    return True
