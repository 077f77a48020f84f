from fractions import Fraction

import pytest
from hypothesis import given

from vanlambalgen.exactcap import ONE, ZERO, Capital
from vanlambalgen.lookahead import (
    GameContext,
    LookaheadStrategy,
    ProtocolViolation,
    check_fair_on_all,
    lift_lookahead_B,
    lift_lookahead_cond,
    never_querying,
    play,
)
from vanlambalgen.seqcore import all_strings, interleave
from vanlambalgen.suite import lookahead_corpus

from strategies import equal_pairs

PLAIN, ORACLE = lookahead_corpus()


def all_in(ctx: GameContext, bit: str):
    c = ctx.capital.double()
    return (c, ZERO) if bit == "0" else (ZERO, c)


def strategy(step, horizon=lambda n: n + 1, oracle=None):
    return LookaheadStrategy(step, horizon, "probe", oracle)


def naive_fraction_replay(x, bit, frac):
    """Capital of a constant-fraction bettor, computed with Fractions."""
    cap, out = Fraction(1), [Fraction(1)]
    for c in x:
        cap *= (1 + frac) if c == bit else (1 - frac)
        out.append(cap)
    return out


@pytest.mark.parametrize("x", ["1", "1101", "000111", "0110100110"])
def test_never_querying_is_plain_replay(x):
    t = play(PLAIN[0], x)
    assert [Fraction(v.numerator, 2 ** v.exponent) for v in t.values] == naive_fraction_replay(x, "1", Fraction(1, 2))
    assert t.ledger.current == frozenset()
    assert all(s.queried == () for s in t.trail)


def test_bet_on_queried_position_is_forbidden():
    def step(ctx):
        if ctx.n == 1:
            ctx.query(1)
            return None
        return all_in(ctx, "0")

    with pytest.raises(ProtocolViolation) as err:
        play(strategy(step), "0000")
    assert (err.value.rule, err.value.step, err.value.position) == ("forbidden-bet", 2, 1)


def test_flat_on_forbidden_step_is_allowed():
    def step(ctx):
        if ctx.n == 1:
            ctx.query(1)
            return None
        return None if ctx.n - 1 in ctx.ledger else all_in(ctx, "0")

    t = play(strategy(step), "0000")
    assert t.values == [1, 1, 1, 2, 4]


def test_reading_current_position_is_rejected():
    with pytest.raises(ProtocolViolation) as err:
        play(strategy(lambda ctx: ctx.query(ctx.n - 1) and None), "01")
    assert (err.value.rule, err.value.step, err.value.position) == ("no-reveal", 1, 0)


def test_query_beyond_horizon_is_rejected():
    with pytest.raises(ProtocolViolation) as err:
        play(strategy(lambda ctx: ctx.query(ctx.n + 2) and None, horizon=lambda n: n), "000000")
    assert err.value.rule == "window"


def test_query_past_fixture_is_rejected():
    with pytest.raises(ProtocolViolation) as err:
        play(strategy(lambda ctx: ctx.query(ctx.n) and None), "00")
    assert err.value.rule == "out-of-fixture"


def test_unfair_bet_is_rejected():
    with pytest.raises(ProtocolViolation) as err:
        play(strategy(lambda ctx: (ctx.capital, ctx.capital.double())), "0")
    assert err.value.rule == "fairness"


def test_queries_allowed_on_forbidden_step():
    def step(ctx):
        if ctx.n == 1:
            ctx.query(1)
        elif ctx.n == 2:
            ctx.query(2)
        return None

    t = play(strategy(step), "0000")
    assert t.ledger.revealed[2] == {1, 2}


def test_later_query_of_earlier_position():
    def step(ctx):
        if ctx.n == 3:
            ctx.query(0)
            ctx.query(1)
        return None

    t = play(strategy(step), "0101")
    assert t.trail[2].queried == (0, 1)


def test_peek_alternating_doubles_when_permitted():
    x = "0101010101"
    t = play(PLAIN[2], x)
    # bets on odd steps, flat on the step whose position it just revealed,
    # and flat at the last step where nothing lies ahead
    expected = [1] + [2 ** ((n + 1) // 2) for n in range(1, 10)] + [32]
    assert t.values == expected[: len(x) + 1]
    assert [s.bet_position for s in t.trail] == [0, None, 2, None, 4, None, 6, None, 8, None]


@given(equal_pairs(8))
def test_ledger_is_monotone(pair):
    a, b = pair
    if not a:
        return
    for d in PLAIN:
        assert play(d, a).ledger.monotone()
    for g in ORACLE:
        assert play(g, a, b).ledger.monotone()


def test_oracle_strategy_needs_oracle():
    with pytest.raises(TypeError):
        play(ORACLE[0], "01")


def test_lifts_reject_wrong_kind():
    with pytest.raises(TypeError):
        lift_lookahead_B(ORACLE[0])
    with pytest.raises(TypeError):
        lift_lookahead_cond(PLAIN[0])


def test_lifts_fair_on_depth_six():
    fixtures = list(all_strings(6))
    for h in PLAIN:
        assert check_fair_on_all(lift_lookahead_B(h), fixtures)
    for g in ORACLE:
        assert check_fair_on_all(lift_lookahead_cond(g), fixtures)


def test_constant_lift_is_constant():
    const = never_querying(lambda h: None, "flat")
    for z in all_strings(6):
        assert all(v == ONE for v in play(lift_lookahead_B(const), z).values)


@pytest.mark.parametrize("a", ["00", "01", "10", "11"])
def test_liftB_doubles_on_first_b_bit(a):
    b = "01"
    z = interleave(a, b)
    t = play(lift_lookahead_B(PLAIN[2]), z)
    assert t.values[2] == 2


@given(equal_pairs(7))
def test_liftB_transfers_capital_and_ledger(pair):
    a, b = pair
    if not b:
        return
    z = interleave(a, b)
    for h in PLAIN:
        src = play(h, b)
        lift = play(lift_lookahead_B(h), z)
        for m in range(len(b) + 1):
            assert lift.values[2 * m] == src.values[m]
            if m:
                assert lift.values[2 * m - 1] == lift.values[2 * m - 2]
                assert lift.ledger.revealed[2 * m] == {2 * i + 1 for i in src.ledger.revealed[m]}
        assert all(p % 2 == 1 for p in lift.ledger.current)
        for level, n in src.transcript.threshold_hits.items():
            assert lift.transcript.threshold_hits[level] == 2 * n


@given(equal_pairs(7))
def test_liftC_transfers_capital_and_ledger(pair):
    a, b = pair
    if not a:
        return
    z = interleave(a, b)
    for g in ORACLE:
        src = play(g, a, b)
        lift = play(lift_lookahead_cond(g), z)
        reads = set()
        for m in range(1, len(a) + 1):
            assert lift.values[2 * m - 1] == src.values[m]
            assert lift.values[2 * m] == lift.values[2 * m - 1]
            reads |= set(src.trail[m - 1].oracle_reads)
            expected = {2 * i for i in src.ledger.revealed[m]} | {2 * j + 1 for j in reads}
            assert lift.ledger.revealed[2 * m - 1] == expected
        for level, n in src.transcript.threshold_hits.items():
            if n:
                assert lift.transcript.threshold_hits[level] == 2 * n - 1


def test_liftC_with_oracle_blind_g_bets_on_even_positions_only():
    blind = LookaheadStrategy(PLAIN[0].step, lambda n: 0, "blind", lambda n: 0)
    t = play(lift_lookahead_cond(blind), interleave("1111", "0000"))
    assert [s.bet_position for s in t.trail] == [0, None, 2, None, 4, None, 6, None]
    assert t.ledger.current == frozenset()


def test_transcript_csv_columns():
    t = play(PLAIN[3], "01101")
    lines = t.to_csv().splitlines()
    assert lines[0] == "step,bet_positions,queried_positions,oracle_reads,numerator,exponent"
    assert len(lines) == 6
    # step 1 peeks at position 2 ("1"), loses half on x_0 = 0
    assert lines[1] == "1,0,2,,1,1"
