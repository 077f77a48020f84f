from itertools import product

import pytest
from hypothesis import given, strategies as st

from vanlambalgen.coding import DESK_MACHINE
from vanlambalgen.refmachine import (
    BASE_MACHINE,
    CapExceeded,
    ExecBudget,
    ParseError,
    encode_concat,
    encode_copy,
    encode_interleave,
    encode_literal,
    encode_repeat,
    gamma,
)
from vanlambalgen.seqcore import is_prefix_free

from strategies import bits


def test_gamma_is_prefix_free_and_self_delimiting():
    codes = [gamma(n) for n in range(200)]
    assert is_prefix_free(codes)
    assert gamma(0) == "1" and gamma(1) == "010"


def test_literal_one_parses_and_runs():
    code = "0" + gamma(1) + "1"
    assert code == encode_literal("1")
    out = BASE_MACHINE.run(code, "", ExecBudget("n^2", 16))
    assert out.halted and out.output == "1"


@pytest.mark.parametrize("cond", ["", "0", "1101"])
def test_literal_ignores_conditional(cond):
    assert BASE_MACHINE.run(encode_literal("1"), cond).output == "1"


def test_parse_errors():
    with pytest.raises(ParseError):
        BASE_MACHINE.parse_program("")
    with pytest.raises(ParseError):
        BASE_MACHINE.parse_program(encode_literal("10") + "0")
    assert BASE_MACHINE.run("", "").status == "parse_error"


def test_copy_cond():
    assert BASE_MACHINE.run(encode_copy(2, 0), "10").output == "10"
    assert BASE_MACHINE.run(encode_copy(3, 0), "10").status == "oracle_out_of_range"
    assert BASE_MACHINE.run(encode_copy(2, 1), "0110").output == "11"


def test_composite_opcodes():
    lit = encode_literal
    assert BASE_MACHINE.run(encode_repeat("01", 3), "").output == "010101"
    assert BASE_MACHINE.run(encode_concat(lit("1"), lit("00")), "").output == "100"
    assert BASE_MACHINE.run(encode_interleave(lit("01"), lit("10")), "").output == "0110"
    assert BASE_MACHINE.run(encode_interleave(lit("0"), lit("10")), "").status == "invalid_operands"


def test_budget_is_checked_against_output_length():
    code = encode_repeat("0", 1)
    out = BASE_MACHINE.run(code, "")
    tight = ExecBudget("2n", 1)
    assert out.steps_used > tight.allowance(1)
    assert BASE_MACHINE.run(code, "", tight).status == "budget_exceeded"
    assert BASE_MACHINE.run(code, "", ExecBudget("n^2", 64)).halted


def test_budget_parse_and_name():
    b = ExecBudget("nlogn", 3)
    assert ExecBudget.parse(b.name) == b
    assert ExecBudget.parse("unbounded") is None
    assert ExecBudget.parse("2n") == ExecBudget("2n", 1)
    with pytest.raises(ValueError):
        ExecBudget("n^3")
    assert ExecBudget().check_superlinear() and ExecBudget("n^2", 4).dominates(ExecBudget("2n", 1))


@given(bits)
def test_run_never_raises(code):
    for m in (BASE_MACHINE, DESK_MACHINE):
        m.run(code, "0101", ExecBudget())


def test_enumeration_empty_at_zero():
    assert list(BASE_MACHINE.enumerate_programs(0)) == []


def test_enumeration_cap():
    with pytest.raises(CapExceeded):
        BASE_MACHINE.program_table(17)


@pytest.mark.parametrize("machine", [BASE_MACHINE, DESK_MACHINE], ids=["base", "desk"])
def test_enumeration_matches_exhaustive_parse(machine):
    L = 14
    brute = []
    for n in range(1, L + 1):
        for bits_ in product("01", repeat=n):
            code = "".join(bits_)
            try:
                machine.parse_program(code)
            except ParseError:
                continue
            brute.append(code)
    enumerated = [p.code for p in machine.program_table(L)]
    assert sorted(enumerated) == sorted(brute)
    assert is_prefix_free(enumerated)
    assert len(enumerated) == {BASE_MACHINE: 696, DESK_MACHINE: 718}[machine]


def test_register_requires_next_opcode_number():
    from vanlambalgen.coding import QN_OPCODE
    with pytest.raises(ValueError):
        BASE_MACHINE.register(QN_OPCODE)


def test_digest_distinguishes_machines():
    assert BASE_MACHINE.digest != DESK_MACHINE.digest
    assert BASE_MACHINE.header_length(5) == 5
