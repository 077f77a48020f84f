import pytest

from vanlambalgen.kolmo import (
    ComplexityQuery,
    NoWitness,
    certifies_at_least,
    complexity,
    discover_slack,
    find_incompressible,
    incompressibility_profile,
    report_csv,
)
from vanlambalgen.refmachine import CapExceeded, ExecBudget, encode_copy, encode_literal
from vanlambalgen.seqcore import all_strings

from oracles import brute_k, shortest_programs

T = ExecBudget("n^2", 4)


def test_k_of_one_is_shortest_literal():
    rep = complexity(ComplexityQuery("1"))
    assert rep.exhaustive
    assert rep.value == brute_k("1") == len(encode_literal("1")) == 5
    assert rep.witness.code == encode_literal("1")


@pytest.mark.parametrize("cond", ["", "0110", "111000"])
def test_complexity_matches_oracle(cond):
    table = shortest_programs(cond, None)
    for n in range(0, 7):
        for x in all_strings(n):
            rep = complexity(ComplexityQuery(x, cond))
            expected = table.get(x)
            assert rep.value == (None if expected is None else len(expected))
            if expected is not None:
                assert rep.witness.code == expected


def test_copy_program_bounds_conditional_complexity():
    cond = "1011001"
    for ell in range(1, len(cond) + 1):
        rep = complexity(ComplexityQuery(cond[:ell], cond))
        assert rep.value is not None and rep.value <= len(encode_copy(ell, 0))


def test_time_bound_only_removes_witnesses():
    for n in range(1, 9):
        for x in all_strings(n):
            plain = complexity(ComplexityQuery(x))
            timed = complexity(ComplexityQuery(x, budget=T))
            assert timed.lower_bound >= plain.lower_bound


def test_absent_value_certifies_past_cap():
    rep = complexity(ComplexityQuery("0" * 5 + "1101" * 4, search_cap=10))
    assert rep.value is None and rep.lower_bound == 11
    assert certifies_at_least(rep, 11) and not certifies_at_least(rep, 12)


def test_query_cap_is_enforced():
    with pytest.raises(CapExceeded):
        ComplexityQuery("1", search_cap=17)


def test_find_incompressible_empty():
    assert find_incompressible(0) == ""


def test_find_incompressible_matches_brute_force():
    def passes(rho, slack):
        return all((brute_k(rho[:i]) or 15) >= i - slack for i in range(len(rho) + 1))

    expected = next(r for r in all_strings(4) if passes(r, 2))
    assert find_incompressible(4, slack=2) == expected


def test_find_incompressible_self_conditional():
    # a conditional equal to the candidate does not help at this length:
    # the copy program costs more bits than it saves
    for rho in all_strings(4):
        for i in range(1, 5):
            assert len(encode_copy(i, 0)) > i
    rho = find_incompressible(4, conditional="0000", slack=0)
    assert all((brute_k(rho[:i], "0000") or 15) >= i for i in range(5))


def test_find_incompressible_reports_no_witness():
    with pytest.raises(NoWitness):
        find_incompressible(4, slack=0, search_cap=14, base="0" * 30)


def test_discover_slack_returns_smallest():
    rho, slack = discover_slack(lambda s: find_incompressible(8, budget=T, slack=s))
    assert slack == 0 and len(rho) == 8


def test_profile_and_csv():
    assert [n for n, _ in incompressibility_profile("")] == [0]
    prof = incompressibility_profile("0110")
    assert [rep.value for _, rep in prof] == [brute_k("0110"[:n]) for n in range(5)]
    text = report_csv([("1", "", None, complexity(ComplexityQuery("1")))])
    assert text.splitlines()[1] == "1,-,unbounded,5,00101,true"


def test_loosening_budget_never_increases():
    looser = ExecBudget("n^2", 16)
    for n in range(1, 7):
        for x in all_strings(n):
            tight = complexity(ComplexityQuery(x, budget=T)).lower_bound
            loose = complexity(ComplexityQuery(x, budget=looser)).lower_bound
            assert loose <= tight
