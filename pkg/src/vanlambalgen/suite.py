"""The acceptance checks, one function per criterion.

Each check returns a :class:`CriterionResult` whose ``measured`` dict holds
only deterministic values (no timings), so reports are byte-reproducible.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .coding import DESK_MACHINE, RequestSet, kc_allocate, qn_header_constant, qn_program
from .construct import (
    COMPRESSION_BUDGET,
    DEFAULT_SCHEDULE,
    StageSchedule,
    build_pair_asymmetric,
    build_pair_incompressibility,
    build_pair_martingale,
    default_pools,
    pool_gains,
    stage_transfer,
)
from .exactcap import ONE, ZERO, Capital
from .kolmo import NoWitness, complexity_table
from .lookahead import (
    GameContext,
    LookaheadStrategy,
    ProtocolViolation,
    check_fair_on_all,
    lift_lookahead_B,
    lift_lookahead_cond,
    never_querying,
    play,
)
from .martingale import (
    Martingale,
    from_bets,
    lift_interleave,
    project_average,
    projection,
    savings_transform,
    split_h_g,
    validate_fairness,
)
from .refmachine import BASE_MACHINE, ExecBudget, Machine
from .seqcore import all_strings, interleave, is_prefix_free

__all__ = ["CriterionResult", "SuiteSettings", "CRITERIA", "run_criteria", "random_strategy",
           "lookahead_corpus"]


@dataclass
class CriterionResult:
    number: int
    title: str
    status: str  # pass | fail | inconclusive
    measured: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class SuiteSettings:
    machine: Machine = DESK_MACHINE
    search_cap: int = 14
    fairness_depth: int = 8
    kraft_sets: int = 500
    kraft_max_requests: int = 64
    kraft_max_len: int = 16
    transfer_max_n: int = 12
    transfer_c: int = 4
    transfer_budget: ExecBudget = COMPRESSION_BUDGET
    schedule: StageSchedule = DEFAULT_SCHEDULE
    max_slack: int = 4
    identity_strategies: int = 100
    identity_len: int = 4
    savings_strategies: int = 200
    savings_depth: int = 12
    pool_code_len: int = 10
    seed: int = 20240601


# ---------------------------------------------------------------------------
# deterministic strategy families

_FRACTIONS = [Capital(k, 3) for k in range(1, 8)]  # 1/8 .. 7/8, keeps capital positive


def random_strategy(rng: random.Random, depth: int, name: str = "") -> Martingale:
    """Fair strategy with a fixed random bet (bit, fraction) per history node
    up to ``depth``; deeper histories do not bet."""
    table = {}
    for n in range(depth):
        for w in all_strings(n):
            table[w] = (rng.choice("01"), rng.choice(_FRACTIONS))
    return from_bets(table.get, name=name or "random")


def _peek_alternating() -> LookaheadStrategy:
    """Query the next position and bet that the current one differs from it."""

    def step(ctx: GameContext):
        n = ctx.n
        if (n - 1) in ctx.ledger or n >= ctx.length:
            return None
        guess = "1" if ctx.query(n) == "0" else "0"
        c = ctx.capital.double()
        return (c, ZERO) if guess == "0" else (ZERO, c)

    return LookaheadStrategy(step, lambda n: n, "peek_alternating")


def _peek_back_and_ahead() -> LookaheadStrategy:
    """Query the previous and the next position; bet half that the current
    bit equals their majority with a tie going to the previous bit."""

    def step(ctx: GameContext):
        n = ctx.n
        if (n - 1) in ctx.ledger:
            return None
        votes = []
        if n >= 2:
            votes.append(ctx.query(n - 2))
        if n + 1 < ctx.length:
            votes.append(ctx.query(n + 1))
        if not votes:
            return None
        guess = votes[0]
        up, down = ctx.capital * Capital(3, 1), ctx.capital * Capital(1, 1)
        return (up, down) if guess == "0" else (down, up)

    return LookaheadStrategy(step, lambda n: n + 1, "peek_back_and_ahead")


def _oracle_copier() -> LookaheadStrategy:
    """Oracle strategy: bet everything that x_{n-1} equals oracle bit n-1."""

    def step(ctx: GameContext):
        bit = ctx.oracle(ctx.n - 1)
        c = ctx.capital.double()
        return (c, ZERO) if bit == "0" else (ZERO, c)

    return LookaheadStrategy(step, lambda n: 0, "oracle_copier", lambda n: n)


def _oracle_peeker() -> LookaheadStrategy:
    """Oracle strategy that also peeks ahead in its own sequence: bets half
    on oracle bit n-1 xor own bit n."""

    def step(ctx: GameContext):
        n = ctx.n
        if (n - 1) in ctx.ledger or n >= ctx.length:
            return None
        guess = "1" if ctx.oracle(n - 1) != ctx.query(n) else "0"
        up, down = ctx.capital * Capital(3, 1), ctx.capital * Capital(1, 1)
        return (up, down) if guess == "0" else (down, up)

    return LookaheadStrategy(step, lambda n: n, "oracle_peeker", lambda n: n)


def lookahead_corpus() -> tuple[list[LookaheadStrategy], list[LookaheadStrategy]]:
    """(strategies without oracle, oracle strategies) used by the protocol suite."""
    plain = [
        never_querying(lambda h: ("1", Capital(1, 1)), "always_one_half"),
        never_querying(lambda h: (h[-1], ONE) if h else None, "repeat_last"),
        _peek_alternating(),
        _peek_back_and_ahead(),
    ]
    return plain, [_oracle_copier(), _oracle_peeker()]


# ---------------------------------------------------------------------------
# criteria


def criterion_fairness(cfg: SuiteSettings) -> CriterionResult:
    rng = random.Random(cfg.seed)
    depth = cfg.fairness_depth
    checks = {}
    for i in range(3):
        d_b = random_strategy(rng, depth)
        checks[f"lift_interleave[{i}]"] = validate_fairness(lift_interleave(d_b), depth)
    for i in range(2):
        d_ab = random_strategy(rng, 2 * depth)
        checks[f"projection[{i}]"] = validate_fairness(projection(d_ab), depth)
        h, g = split_h_g(d_ab)
        for j, oracle in enumerate(("0" * depth, "01" * (depth // 2), "1101001110"[:depth])):
            checks[f"split_h[{i}|{j}]"] = validate_fairness(h, depth, oracle)
            checks[f"split_g[{i}|{j}]"] = validate_fairness(g, depth, oracle)
    plain, oracles = lookahead_corpus()
    fixtures = list(all_strings(depth))
    for h in plain:
        checks[f"lookahead_B({h.name})"] = check_fair_on_all(lift_lookahead_B(h), fixtures)
    for g in oracles:
        checks[f"lookahead_cond({g.name})"] = check_fair_on_all(lift_lookahead_cond(g), fixtures)
    failed = [k for k, ok in checks.items() if not ok]
    return CriterionResult(1, "fairness of every combinator to depth 8",
                           "fail" if failed else "pass", {"checked": len(checks), "failed": failed})


def _bounded_request_set(rng: random.Random, max_requests: int, max_len: int) -> RequestSet:
    reqs, total = [], Fraction(0)
    for _ in range(rng.randint(1, max_requests)):
        n = rng.randint(1, max_len)
        if total + Fraction(1, 2 ** n) <= 1:
            reqs.append((format(len(reqs), "b"), n))
            total += Fraction(1, 2 ** n)
    return RequestSet(reqs)


def criterion_kraft(cfg: SuiteSettings) -> CriterionResult:
    rng = random.Random(cfg.seed + 2)
    bad = 0
    for _ in range(cfg.kraft_sets):
        r = _bounded_request_set(rng, cfg.kraft_max_requests, cfg.kraft_max_len)
        codes = kc_allocate(r).codes()
        if [len(c) for c in codes] != [n for _, n in r.requests] or not is_prefix_free(codes):
            bad += 1
    sums = {}
    for label, m in (("base", BASE_MACHINE), ("desk", cfg.machine)):
        progs = m.program_table(cfg.search_cap)
        total = sum((Capital(1, len(p.code)) for p in progs), ZERO)
        sums[label] = (len(progs), str(total), total <= ONE and is_prefix_free(p.code for p in progs))
    ok = bad == 0 and all(v[2] for v in sums.values())
    return CriterionResult(2, "prefix-free allocation and enumeration Kraft sum",
                           "pass" if ok else "fail",
                           {"request_sets": cfg.kraft_sets, "bad_assignments": bad,
                            **{f"kraft_{k}": f"{v[0]} programs, sum {v[1]}" for k, v in sums.items()}})


def _transfer_check(cfg: SuiteSettings, art) -> dict:
    """Q_n transfer on every time-bounded witness with ``n <= transfer_max_n``,
    paired with a fixed A half; plus the stage boundaries of the build."""
    m, budget = cfg.machine, cfg.transfer_budget
    k0 = qn_header_constant(m)
    table = complexity_table(m, "", budget, cfg.search_cap)
    a_source = (art.b * 2)[: cfg.transfer_max_n]
    checked = failures = at_c = 0
    for target, prog in sorted(table.items()):
        n = len(target)
        if not 1 <= n <= cfg.transfer_max_n:
            continue
        c = n - len(prog.code)
        a = a_source[:n]
        program = qn_program(prog.code + a)
        run = m.run(program, "", budget)
        checked += 1
        at_c += c >= cfg.transfer_c
        if not (run.halted and run.output == interleave(a, target) and len(program) <= 2 * n - c + k0):
            failures += 1
    stages = stage_transfer(art, budget, m, cfg.search_cap)
    return {"k0": k0, "witnesses_checked": checked, "witnesses_with_c_at_least_target": at_c,
            "witness_failures": failures,
            "stage_boundaries": [(r.n, len(r.b_witness), r.c, len(r.program), r.bound, r.holds) for r in stages],
            "stages_ok": all(r.holds for r in stages)}


def criterion_transfer(cfg: SuiteSettings, art) -> CriterionResult:
    res = _transfer_check(cfg, art)
    ok = res["witness_failures"] == 0 and res["stages_ok"]
    return CriterionResult(3, "compressible B half transfers to the interleaving", "pass" if ok else "fail", res)


def criterion_incompressible_pair(cfg: SuiteSettings, art) -> CriterionResult:
    if art is None:
        return CriterionResult(4, "incompressibility pair build", "inconclusive",
                               {"reason": f"no pair within slack {cfg.max_slack}"})
    replay_bad = art.replay()
    transfer = stage_transfer(art, cfg.transfer_budget, cfg.machine, cfg.search_cap)
    ok = (not art.audit() and not replay_bad and all(r.holds for r in transfer)
          and max(art.slacks.values()) <= cfg.max_slack
          and all(_lower_of(r.value) >= int(r.bound) for r in art.certificates))
    return CriterionResult(4, "incompressibility pair build", "pass" if ok else "fail",
                           {"a": str(art.a), "b": str(art.b), "slack_B": art.slacks["B"], "slack_A": art.slacks["A"],
                            "certificates": len(art.certificates), "replay_mismatches": len(replay_bad),
                            "audit": art.audit()})


def _lower_of(value: str) -> int:
    return int(value[1:]) + 1 if value.startswith(">") else int(value)


def criterion_identities(cfg: SuiteSettings) -> CriterionResult:
    rng = random.Random(cfg.seed + 5)
    L = cfg.identity_len
    bad = {"lift": 0, "projection": 0, "telescoping": 0}
    for _ in range(cfg.identity_strategies):
        d_b = random_strategy(rng, L)
        lifted = lift_interleave(d_b)
        d = random_strategy(rng, 2 * L)
        h, g = split_h_g(d)
        for n in range(L + 1):
            for sigma in all_strings(n):
                if project_average(lifted, sigma) != d_b(sigma):
                    bad["projection"] += 1
            for a in all_strings(n):
                for b in all_strings(n):
                    z = interleave(a, b)
                    if lifted(z) != d_b(b):
                        bad["lift"] += 1
                    if h(a, b[: max(n - 1, 0)]) * g(b, a) != d("") * d(z):
                        bad["telescoping"] += 1
    ok = not any(bad.values())
    return CriterionResult(5, "capital-transfer identities", "pass" if ok else "fail",
                           {"strategies": cfg.identity_strategies, "max_len": L, "mismatches": bad})


def _doubling_level(v: Capital) -> int:
    """Largest k >= 0 with v > 2^k, or -1 when v <= 1."""
    if not v:
        return -1
    return max((v.numerator - 1).bit_length() - 1 - v.exponent, -1)


def criterion_savings(cfg: SuiteSettings) -> CriterionResult:
    rng = random.Random(cfg.seed + 6)
    decreases = law_breaks = nodes = 0
    for _ in range(cfg.savings_strategies):
        d = random_strategy(rng, cfg.savings_depth)
        _, s = savings_transform(d)
        for n in range(1, cfg.savings_depth + 1):
            for w in all_strings(n):
                nodes += 1
                if s(w) < s(w[:-1]):
                    decreases += 1
                k = _doubling_level(d(w) / d(""))
                if k >= 1 and not s(w) > k - 1:
                    law_breaks += 1
    ok = decreases == 0 and law_breaks == 0
    return CriterionResult(6, "savings account law", "pass" if ok else "fail",
                           {"strategies": cfg.savings_strategies, "nodes": nodes,
                            "savings_decreases": decreases, "law_violations": law_breaks})


def criterion_asymmetry(cfg: SuiteSettings, mart, asym) -> CriterionResult:
    sched = mart.schedule
    window = sched.budget.allowance
    doubles = [(r.stage, r.value, r.bound) for r in mart.certificates if r.role == "copy_predictor"]
    window_ok = all(int(r.detail.split("=")[1]) < window(r.prefix_len)
                    for art in (mart, asym) for r in art.certificates if r.detail.startswith("max_read"))
    fwd = [(r.stage, r.value, r.bound) for r in asym.certificates if r.role == "forward_copy"]
    rev = [(r.stage, r.value) for r in asym.certificates if r.role == "reverse_copy"]
    ok = (all(v == b for _, v, b in doubles) and len(doubles) == sched.stages
          and not pool_gains(mart) and not pool_gains(asym) and window_ok
          and all(v == b for _, v, b in fwd) and all(v == "1" for _, v in rev)
          and not mart.audit() and not asym.audit())
    return CriterionResult(7, "copy predictor wins, window-limited pool does not", "pass" if ok else "fail",
                           {"a": str(mart.a), "b": str(mart.b), "copy_predictor": doubles,
                            "pool_gains": len(pool_gains(mart)) + len(pool_gains(asym)),
                            "oracle_reads_within_window": window_ok,
                            "asymmetric_forward": fwd, "asymmetric_reverse": rev,
                            "pool_code_len": cfg.pool_code_len})


def _first_crossing(values, level) -> int | None:
    return next((n for n, v in enumerate(values) if v >= level), None)


def criterion_lookahead(cfg: SuiteSettings) -> CriterionResult:
    plain, oracles = lookahead_corpus()
    fixtures = list(all_strings(6))
    replays = violations = mismatches = 0
    non_monotone = 0
    for x in fixtures:
        for h in plain:
            try:
                t = play(h, x)
                replays += 1
                non_monotone += not t.ledger.monotone()
            except ProtocolViolation:
                violations += 1
    for a in fixtures[::3]:
        for b in fixtures[::5]:
            z = interleave(a, b)
            for h in plain:
                try:
                    src, lift = play(h, b), play(lift_lookahead_B(h), z)
                except ProtocolViolation:
                    violations += 1
                    continue
                replays += 2
                non_monotone += not lift.ledger.monotone()
                if any(p % 2 == 0 for p in lift.ledger.current):
                    mismatches += 1
                for level in (2, 4, 8):
                    m = _first_crossing(src.values, level)
                    if _first_crossing(lift.values, level) != (None if m is None else 2 * m):
                        mismatches += 1
            for g in oracles:
                try:
                    src, lift = play(g, a, b), play(lift_lookahead_cond(g), z)
                except ProtocolViolation:
                    violations += 1
                    continue
                replays += 2
                non_monotone += not lift.ledger.monotone()
                for level in (2, 4, 8):
                    m = _first_crossing(src.values, level)
                    if _first_crossing(lift.values, level) != (None if m is None else 2 * m - 1):
                        mismatches += 1
    ok = violations == 0 and mismatches == 0 and non_monotone == 0
    return CriterionResult(8, "lookahead protocol and crossing transfer", "pass" if ok else "fail",
                           {"replays": replays, "protocol_violations": violations,
                            "non_monotone_ledgers": non_monotone, "crossing_mismatches": mismatches})


CRITERIA: dict[int, str] = {
    1: "fairness", 2: "kraft", 3: "transfer", 4: "incompressible-pair", 5: "identities",
    6: "savings", 7: "asymmetry", 8: "lookahead", 9: "determinism",
}


def run_criteria(cfg: SuiteSettings, only: set[int] | None = None,
                 progress: Callable[[CriterionResult, float], None] | None = None):
    """Run criteria 1-8 (criterion 9 needs two full runs and lives in the CLI).

    ``progress(result, seconds)`` is called after each criterion with its
    wall-clock time (shared setup counts toward the first criterion using it).
    Returns ``(results, artifacts)``.
    """
    wanted = only or set(range(1, 9))
    results, artifacts = [], {}
    clock = [time.perf_counter()]

    def emit(r):
        results.append(r)
        now = time.perf_counter()
        if progress:
            progress(r, now - clock[0])
        clock[0] = now

    if 1 in wanted:
        emit(criterion_fairness(cfg))
    if 2 in wanted:
        emit(criterion_kraft(cfg))
    if wanted & {3, 4}:
        try:
            art = build_pair_incompressibility(cfg.schedule, "discover", cfg.machine, cfg.search_cap, cfg.max_slack)
        except NoWitness:
            art = None
        artifacts["pair_incompressibility"] = art
        if 3 in wanted:
            emit(criterion_transfer(cfg, art) if art else
                 CriterionResult(3, "compressible B half transfers to the interleaving", "inconclusive",
                                 {"reason": f"no pair within slack {cfg.max_slack}"}))
        if 4 in wanted:
            emit(criterion_incompressible_pair(cfg, art))
    if 5 in wanted:
        emit(criterion_identities(cfg))
    if 6 in wanted:
        emit(criterion_savings(cfg))
    if 7 in wanted:
        pools = default_pools(cfg.machine, cfg.pool_code_len, cfg.schedule.budget)
        mart = build_pair_martingale(cfg.schedule, pools)
        asym = build_pair_asymmetric(cfg.schedule, pools)
        artifacts["pair_martingale"], artifacts["pair_asymmetric"] = mart, asym
        emit(criterion_asymmetry(cfg, mart, asym))
    if 8 in wanted:
        emit(criterion_lookahead(cfg))
    return results, artifacts
