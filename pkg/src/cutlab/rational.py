"""Exact rational helpers built on :class:`fractions.Fraction`."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Union

Rational = Fraction
RationalLike = Union[Fraction, int, str]


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ``value`` to a Fraction without going through floats.

    Strings use the ``"p/q"`` form (a bare integer string is also accepted).
    Floats are rejected because they are not exact.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, _, den = text.partition("/")
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def rational_floor(q: Fraction) -> Fraction:
    return Fraction(math.floor(q))


def rational_frac(q: Fraction) -> Fraction:
    """Fractional part ``q - floor(q)``, always in ``[0, 1)``."""
    return q - math.floor(q)


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def lcm_of_denominators(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, v.denominator)
    return out
