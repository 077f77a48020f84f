from fractions import Fraction
from itertools import product

import pytest

from vanlambalgen.construct import (
    DEFAULT_SCHEDULE,
    DigestMismatch,
    PairArtifact,
    ScheduleError,
    StageSchedule,
    build_pair_asymmetric,
    build_pair_incompressibility,
    build_pair_martingale,
    copy_predictor,
    first_block,
    pool_gains,
    stage_transfer,
)
from vanlambalgen.exactcap import ONE, Capital
from vanlambalgen.kolmo import NoWitness
from vanlambalgen.martingale import from_bets, oracle_from_bets, replay
from vanlambalgen.refmachine import BASE_MACHINE, ExecBudget

from oracles import brute_k

EMPTY = StageSchedule((), ())
ONE_STAGE = StageSchedule((2,), (4,))


@pytest.fixture(scope="module")
def mart():
    return build_pair_martingale()


@pytest.fixture(scope="module")
def asym():
    return build_pair_asymmetric()


@pytest.fixture(scope="module")
def incompressible():
    return build_pair_incompressibility()


def test_schedule_lengths():
    s = DEFAULT_SCHEDULE
    assert [s.a_len(k) for k in range(4)] == [0, 2, 4, 6]
    assert [s.b_len(k) for k in range(4)] == [0, 6, 12, 18]
    assert [s.alpha_slot_b(k) for k in (1, 2, 3)] == [4, 10, 16]
    assert s.audit() == []


def test_schedule_rejects_bad_shapes():
    with pytest.raises(ScheduleError):
        StageSchedule((1, 2), (3,))
    with pytest.raises(ScheduleError):
        StageSchedule((0,), (3,))


def test_schedule_audit_reports_short_gap():
    tight = StageSchedule((4,), (1,), ExecBudget("2n", 1))
    assert tight.audit()
    with pytest.raises(ScheduleError):
        build_pair_martingale(tight, pool=([], []))


@pytest.mark.parametrize("build", [build_pair_martingale, build_pair_asymmetric])
def test_zero_stages_give_empty_pair(build):
    art = build(EMPTY, pool=([], []))
    assert (art.a, art.b) == ("", "")


def test_zero_stages_incompressibility():
    art = build_pair_incompressibility(EMPTY)
    assert (art.a, art.b, art.certificates) == ("", "", [])


def test_empty_pool_gives_first_blocks():
    art = build_pair_martingale(ONE_STAGE, pool=([], []))
    assert art.blocks == [("00", "0000")]
    assert (art.a, art.b) == ("00", "000000")


def _nonincreasing_first(length, capital_of):
    """Brute force: lexicographically first block whose capital never rises."""
    for bits in product("01", repeat=length):
        x = "".join(bits)
        caps = [capital_of(x[:k]) for k in range(length + 1)]
        if all(u >= v for u, v in zip(caps, caps[1:])):
            return x
    return None


def _zero_bettor_capital(frac):
    def cap(x):
        c = Fraction(1)
        for bit in x:
            c *= (1 + frac) if bit == "0" else (1 - frac)
        return c
    return cap


@pytest.mark.parametrize("length", [2, 3, 4, 5, 6])
def test_half_stake_on_zero_forces_ones(length):
    plain = [from_bets(lambda w: ("0", Capital(1, 1)))]
    oracle = [oracle_from_bets(lambda w, tape: ("0", Capital(1, 1)))]
    art = build_pair_martingale(StageSchedule((1,), (length,), ExecBudget("2n", 1)), pool=(plain, oracle))
    alpha, beta = art.blocks[0]
    assert beta == _nonincreasing_first(length, _zero_bettor_capital(Fraction(1, 2))) == "1" * length
    assert alpha == "1"


@pytest.mark.parametrize("length", [1, 2, 3, 4, 5, 6])
def test_all_in_on_zero_matches_brute_force(length):
    # once the bettor is ruined every later bit keeps it at zero
    plain = [from_bets(lambda w: ("0", ONE))]
    block = first_block(length, lambda x: all(d(x) <= d(x[:-1]) for d in plain))
    assert block == _nonincreasing_first(length, _zero_bettor_capital(Fraction(1)))


def test_first_block_no_witness():
    with pytest.raises(NoWitness):
        first_block(3, lambda x: x.endswith("1") and len(x) < 3)


def test_martingale_pair_structure(mart):
    assert mart.audit() == []
    assert mart.copy_property()
    assert pool_gains(mart) == []
    assert mart.replay() == []


def test_copy_predictor_doubles_each_stage(mart):
    sched = mart.schedule
    a = mart.a + "0" * (len(mart.b) - len(mart.a))
    z = "".join(x + y for x, y in zip(a, mart.b))
    t = replay(copy_predictor(mart), z)
    for s in range(1, sched.stages + 1):
        assert t.prefix_values[2 * sched.alpha_slot_b(s) + 2] == 2 ** s
    rows = [r for r in mart.certificates if r.role == "copy_predictor"]
    assert [r.value for r in rows] == [r.bound for r in rows] == ["2", "4", "8"]


def test_oracle_reads_stay_in_window(mart):
    sched = mart.schedule
    for r in mart.certificates:
        if r.role.endswith("oracle0"):
            assert int(r.detail.removeprefix("max_read=")) < sched.alpha_slot_b(r.stage)


def test_asymmetric_pair(asym, mart):
    assert (asym.a, asym.b) == (mart.b, mart.a)
    assert asym.audit() == []
    assert pool_gains(asym) == []
    fwd = {r.stage: r for r in asym.certificates if r.role == "forward_copy"}
    rev = {r.stage: r for r in asym.certificates if r.role == "reverse_copy"}
    for s in (1, 2, 3):
        assert Capital.parse(fwd[s].value) == Capital.parse(fwd[s].bound) == 4 ** s
        assert Capital.parse(rev[s].value) <= 1


def test_fixture_round_trip(mart, incompressible):
    for art in (mart, incompressible):
        back = PairArtifact.from_fixture(art.to_fixture())
        assert (back.kind, back.a, back.b, back.blocks) == (art.kind, art.a, art.b, art.blocks)
        assert back.schedule == art.schedule
        assert back.certificates == art.certificates
        assert back.slacks == art.slacks
        assert back.to_fixture() == art.to_fixture()


def test_fixture_digest_mismatch(mart):
    with pytest.raises(DigestMismatch):
        PairArtifact.from_fixture(mart.to_fixture(), machine=BASE_MACHINE)


def test_incompressible_pair_certificates(incompressible):
    art = incompressible
    assert art.audit() == []
    assert art.replay() == []
    slack_b, slack_a = art.slacks["B"], art.slacks["A"]
    for row in art.certificates:
        if row.role == "b":
            k = brute_k(art.b[: row.prefix_len])
            assert row.value == (str(k) if k is not None else ">14")
            assert (k if k is not None else 15) >= row.prefix_len - slack_b
        else:
            cond = art.b[: art.schedule.alpha_slot_b(row.stage)]
            k = brute_k(art.a[: row.prefix_len], cond)
            assert row.value == (str(k) if k is not None else ">14")
            assert (k if k is not None else 15) >= row.prefix_len - slack_a


def test_incompressible_zero_slack_has_no_witness():
    with pytest.raises(NoWitness):
        build_pair_incompressibility(slack_policy=(0, 0))


def test_stage_transfer_on_one_stage():
    art = build_pair_incompressibility(ONE_STAGE)
    (rec,) = stage_transfer(art)
    assert rec.n == 2 and rec.output_ok and rec.within_budget and rec.holds
    assert len(rec.program) <= rec.bound


def test_stage_transfer_all_stages(incompressible):
    recs = stage_transfer(incompressible)
    assert [r.n for r in recs] == [2, 4, 6]
    assert all(r.holds for r in recs)


def test_martingale_build_is_deterministic(mart):
    again = build_pair_martingale()
    assert again.to_fixture() == mart.to_fixture()
