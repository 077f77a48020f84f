"""Exact nonnegative dyadic rationals for martingale capital."""
from __future__ import annotations

from fractions import Fraction
from functools import total_ordering

__all__ = ["Capital", "NonDyadicResult", "average2", "mul_ratio", "ZERO", "ONE"]


class NonDyadicResult(ArithmeticError):
    """A result left the dyadic rationals (usually a malformed martingale)."""


def _canonical(num: int, exp: int) -> tuple[int, int]:
    if num == 0:
        return 0, 0
    if exp > 0:
        tz = (num & -num).bit_length() - 1
        shift = min(tz, exp)
        num >>= shift
        exp -= shift
    return num, exp


@total_ordering
class Capital:
    """The value ``numerator / 2**exponent`` kept in canonical form.

    Canonical form means the numerator is odd whenever the exponent is
    positive, and zero is stored as ``(0, 0)``.
    """

    __slots__ = ("numerator", "exponent")

    def __init__(self, numerator: int = 0, exponent: int = 0):
        if isinstance(numerator, Capital):
            numerator, exponent = numerator.numerator, numerator.exponent
        if numerator < 0:
            raise ValueError("capital is nonnegative")
        if exponent < 0:
            numerator <<= -exponent
            exponent = 0
        num, exp = _canonical(int(numerator), int(exponent))
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "exponent", exp)

    def __setattr__(self, name, value):
        raise AttributeError("Capital is immutable")

    @classmethod
    def coerce(cls, value) -> "Capital":
        if isinstance(value, Capital):
            return value
        if isinstance(value, int):
            return cls(value)
        if isinstance(value, Fraction):
            return cls.from_fraction(value)
        raise TypeError(f"cannot convert {type(value).__name__} to Capital")

    @classmethod
    def from_fraction(cls, q: Fraction) -> "Capital":
        den = q.denominator
        if den & (den - 1):
            raise NonDyadicResult(f"{q} is not dyadic")
        return cls(q.numerator, den.bit_length() - 1)

    @classmethod
    def parse(cls, text: str) -> "Capital":
        return cls.from_fraction(Fraction(text))

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __float__(self) -> float:
        return self.numerator / (1 << self.exponent) if self.exponent < 1000 else float(self.as_fraction())

    def __bool__(self) -> bool:
        return self.numerator != 0

    def _aligned(self, other: "Capital") -> tuple[int, int, int]:
        exp = max(self.exponent, other.exponent)
        return self.numerator << (exp - self.exponent), other.numerator << (exp - other.exponent), exp

    def __add__(self, other) -> "Capital":
        other = Capital.coerce(other)
        a, b, exp = self._aligned(other)
        return Capital(a + b, exp)

    __radd__ = __add__

    def __sub__(self, other) -> "Capital":
        other = Capital.coerce(other)
        a, b, exp = self._aligned(other)
        if a < b:
            raise ValueError("capital difference would be negative")
        return Capital(a - b, exp)

    def __rsub__(self, other) -> "Capital":
        return Capital.coerce(other) - self

    def __mul__(self, other) -> "Capital":
        other = Capital.coerce(other)
        return Capital(self.numerator * other.numerator, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Capital":
        other = Capital.coerce(other)
        return mul_ratio(self, Capital(1), other)

    def half(self) -> "Capital":
        return Capital(self.numerator, self.exponent + 1)

    def double(self) -> "Capital":
        return Capital(self.numerator, self.exponent - 1) if self.exponent else Capital(self.numerator * 2)

    def __eq__(self, other) -> bool:
        if isinstance(other, Capital):
            return self.numerator == other.numerator and self.exponent == other.exponent
        if isinstance(other, (int, Fraction)):
            return self.as_fraction() == other
        return NotImplemented

    def __lt__(self, other) -> bool:
        if not isinstance(other, Capital):
            if isinstance(other, (int, Fraction)):
                return self.as_fraction() < other
            return NotImplemented
        a, b, _ = self._aligned(other)
        return a < b

    def __hash__(self) -> int:
        return hash(self.as_fraction())

    def __repr__(self) -> str:
        return f"Capital({self})"

    def __str__(self) -> str:
        if self.exponent == 0:
            return str(self.numerator)
        return f"{self.numerator}/{1 << self.exponent}"

    def to_record(self) -> tuple[int, int, str]:
        """``(numerator, exponent, decimal approximation)`` for reports."""
        return self.numerator, self.exponent, f"{float(self):.6g}"


ZERO = Capital(0)
ONE = Capital(1)


def average2(x: Capital, y: Capital) -> Capital:
    return (Capital.coerce(x) + Capital.coerce(y)).half()


def mul_ratio(x: Capital, num: Capital, den: Capital) -> Capital:
    """``x * num / den`` exactly; raises when the result is not dyadic."""
    x, num, den = Capital.coerce(x), Capital.coerce(num), Capital.coerce(den)
    if not den:
        raise ZeroDivisionError("ratio with zero denominator")
    top = x.numerator * num.numerator
    # den = odd * 2**k after canonicalization, so only the odd part can fail
    odd, k = den.numerator, den.exponent
    tz = (odd & -odd).bit_length() - 1
    odd >>= tz
    if top % odd:
        raise NonDyadicResult(f"{x} * {num} / {den} is not dyadic")
    return Capital(top // odd, x.exponent + num.exponent + tz - k)
