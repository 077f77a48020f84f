from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from vanlambalgen.exactcap import ONE, ZERO, Capital, NonDyadicResult, average2, mul_ratio

dyadic = st.builds(lambda n, e: Capital(n, e), st.integers(0, 10**6), st.integers(0, 40))


def test_canonical_form():
    assert Capital(4, 2) == Capital(1, 0)
    assert (Capital(6, 2).numerator, Capital(6, 2).exponent) == (3, 1)
    assert (Capital(0, 9).numerator, Capital(0, 9).exponent) == (0, 0)


def test_immutable_and_nonnegative():
    with pytest.raises(AttributeError):
        ONE.numerator = 2
    with pytest.raises(ValueError):
        Capital(-1)
    with pytest.raises(ValueError):
        Capital(1, 1) - ONE


@pytest.mark.parametrize("x,y,out", [(2, 0, 1), (1, 1, 1), ("3/2", "1/2", 1)])
def test_average2_examples(x, y, out):
    x = Capital.parse(str(x))
    y = Capital.parse(str(y))
    assert average2(x, y) == out


def test_mul_ratio_examples():
    assert mul_ratio(ONE, Capital(2), ONE) == 2
    assert mul_ratio(Capital(4), ONE, Capital(4)) == 1
    with pytest.raises(NonDyadicResult):
        mul_ratio(ONE, ONE, Capital(3))
    with pytest.raises(ZeroDivisionError):
        mul_ratio(ONE, ONE, ZERO)


def test_from_fraction_rejects_non_dyadic():
    with pytest.raises(NonDyadicResult):
        Capital.from_fraction(Fraction(1, 3))


@given(dyadic, dyadic)
def test_arithmetic_agrees_with_fractions(x, y):
    fx, fy = x.as_fraction(), y.as_fraction()
    assert (x + y).as_fraction() == fx + fy
    assert (x * y).as_fraction() == fx * fy
    assert (x < y) == (fx < fy)
    assert average2(x, y).as_fraction() == (fx + fy) / 2
    assert (x == y) == (fx == fy) and (hash(x) == hash(y) or x != y)


@given(dyadic, dyadic, st.integers(1, 10**6), st.integers(0, 20))
def test_mul_ratio_agrees_with_fractions(x, num, den_n, den_e):
    den = Capital(den_n, den_e)
    exact = x.as_fraction() * num.as_fraction() / den.as_fraction()
    if exact.denominator & (exact.denominator - 1):
        with pytest.raises(NonDyadicResult):
            mul_ratio(x, num, den)
    else:
        assert mul_ratio(x, num, den).as_fraction() == exact


def test_str_and_record():
    assert str(Capital(3, 1)) == "3/2"
    assert Capital(3, 1).to_record() == (3, 1, "1.5")
    assert Capital.parse("3/2") == Capital(3, 1)
