"""Finite binary strings, prefixes and the interleaving operator.

A :class:`BitString` is a ``str`` restricted to the characters ``'0'`` and
``'1'``.  Subclassing ``str`` keeps equality, hashing, ordering and slicing
on the logical bits, and lets every module pass plain ``'0'/'1'`` text
wherever a bit string is expected.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

__all__ = [
    "BitString",
    "SequencePrefix",
    "LengthMismatch",
    "OutOfRange",
    "interleave",
    "deinterleave",
    "substring",
    "is_prefix_free",
    "all_strings",
    "prefixes",
]


class LengthMismatch(ValueError):
    pass


class OutOfRange(IndexError):
    pass


_BITS = frozenset("01")


class BitString(str):
    """Immutable finite binary string."""

    __slots__ = ()

    def __new__(cls, bits: Iterable | str = "") -> "BitString":
        if isinstance(bits, BitString):
            return bits
        if not isinstance(bits, str):
            bits = "".join("1" if int(b) else "0" for b in bits)
        if not _BITS.issuperset(bits):
            bad = next(i for i, ch in enumerate(bits) if ch not in _BITS)
            raise ValueError(f"invalid bit {bits[bad]!r} at position {bad}")
        return super().__new__(cls, bits)

    @property
    def length(self) -> int:
        return len(self)

    def bit(self, i: int) -> int:
        return 1 if str.__getitem__(self, i) == "1" else 0

    def prefix(self, n: int) -> "BitString":
        if not 0 <= n <= len(self):
            raise OutOfRange(f"prefix length {n} outside 0..{len(self)}")
        return BitString(str.__getitem__(self, slice(0, n)))

    def is_prefix_of(self, other: str) -> bool:
        return other.startswith(self)

    def __getitem__(self, key):
        out = str.__getitem__(self, key)
        # a slice of valid bits is valid; skip re-validation
        return str.__new__(BitString, out) if isinstance(key, slice) else out

    def __add__(self, other: str) -> "BitString":
        return BitString(str.__add__(self, BitString(other)))

    def __radd__(self, other: str) -> "BitString":
        return BitString(str.__add__(BitString(other), self))

    def __repr__(self) -> str:
        return f"BitString({str.__repr__(self)})"


@dataclass(frozen=True)
class SequencePrefix:
    value: BitString
    declared_role: str = "A"  # one of "A", "B", "interleaved"

    def __post_init__(self):
        if self.declared_role not in ("A", "B", "interleaved"):
            raise ValueError(f"unknown role {self.declared_role!r}")
        object.__setattr__(self, "value", BitString(self.value))

    def parts(self) -> tuple[BitString, BitString]:
        if self.declared_role != "interleaved":
            raise ValueError("only interleaved prefixes split into parts")
        return deinterleave(self.value)


def interleave(a: str, b: str) -> BitString:
    """Return ``a0 b0 a1 b1 ...``; requires ``|a| - |b|`` in ``{0, 1}``."""
    if len(a) - len(b) not in (0, 1):
        raise LengthMismatch(f"cannot interleave lengths {len(a)} and {len(b)}")
    out = [""] * (len(a) + len(b))
    out[0::2] = a
    out[1::2] = b
    return BitString("".join(out))


def deinterleave(x: str) -> tuple[BitString, BitString]:
    return BitString(x[0::2]), BitString(x[1::2])


def substring(x: str, m: int, n: int) -> BitString:
    """The ``n`` bits of ``x`` starting at position ``m``."""
    if m < 0 or n < 0 or m + n > len(x):
        raise OutOfRange(f"substring [{m}, {m + n}) outside string of length {len(x)}")
    return BitString(x[m : m + n])


def is_prefix_free(strings: Iterable[str]) -> bool:
    # after sorting, a proper prefix sorts immediately before some extension of it
    ordered = sorted(set(strings))
    return not any(nxt.startswith(cur) for cur, nxt in zip(ordered, ordered[1:]))


def all_strings(n: int) -> Iterator[BitString]:
    """All strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield BitString("")
        return
    for i in range(1 << n):
        yield str.__new__(BitString, format(i, f"0{n}b"))


def prefixes(x: str) -> Iterator[BitString]:
    """``x[:0], x[:1], ..., x`` in increasing length."""
    for n in range(len(x) + 1):
        yield BitString(x[:n])
