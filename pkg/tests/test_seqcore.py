import pytest
from hypothesis import given, strategies as st

from vanlambalgen.seqcore import (
    BitString,
    LengthMismatch,
    OutOfRange,
    all_strings,
    deinterleave,
    interleave,
    is_prefix_free,
    prefixes,
    substring,
)

from strategies import bits, equal_pairs


def test_bitstring_rejects_other_symbols():
    with pytest.raises(ValueError, match="position 2"):
        BitString("01x")


def test_bitstring_accepts_iterables_and_keeps_type_on_slices():
    x = BitString([0, 1, 1])
    assert x == "011"
    assert isinstance(x[1:], BitString) and isinstance(x + "0", BitString)
    assert x.bit(1) == 1 and x.length == 3


def test_prefix_out_of_range():
    with pytest.raises(OutOfRange):
        BitString("01").prefix(3)


@pytest.mark.parametrize("a,b,out", [("01", "10", "0110"), ("", "", ""), ("1", "", "1")])
def test_interleave_examples(a, b, out):
    assert interleave(a, b) == out


@pytest.mark.parametrize("x,parts", [("0110", ("01", "10")), ("1", ("1", "")), ("", ("", ""))])
def test_deinterleave_examples(x, parts):
    assert deinterleave(x) == parts


def test_interleave_rejects_bad_shapes():
    with pytest.raises(LengthMismatch):
        interleave("0", "01")
    with pytest.raises(LengthMismatch):
        interleave("011", "0")


@given(equal_pairs())
def test_interleave_roundtrip_even(pair):
    a, b = pair
    assert deinterleave(interleave(a, b)) == (a, b)


@given(bits)
def test_deinterleave_roundtrip(x):
    assert interleave(*deinterleave(x)) == x


@given(equal_pairs(), st.integers(0, 24))
def test_prefix_of_interleaving_is_interleaving_of_prefixes(pair, k):
    a, b = pair
    z = interleave(a, b)
    k = min(k, len(z))
    assert z[:k] == interleave(a[: (k + 1) // 2], b[: k // 2])


def test_substring_examples():
    assert substring("0110", 1, 2) == "11"
    assert substring("0110", 0, 4) == "0110"
    with pytest.raises(OutOfRange):
        substring("0110", 2, 3)


def test_prefix_free_examples():
    assert is_prefix_free(["0", "10", "110"])
    assert not is_prefix_free(["0", "01"])
    assert is_prefix_free([])


@given(st.lists(bits, max_size=12))
def test_prefix_free_matches_pairwise_definition(strings):
    distinct = set(strings)
    expected = not any(u != v and v.startswith(u) for u in distinct for v in distinct)
    assert is_prefix_free(strings) == expected


def test_all_strings_and_prefixes():
    assert list(all_strings(0)) == [""]
    assert list(all_strings(2)) == ["00", "01", "10", "11"]
    assert list(prefixes("10")) == ["", "1", "10"]
