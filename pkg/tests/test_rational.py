from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cutlab.rational import as_rational, format_rational, lcm_of_denominators, rational_floor, rational_frac

rationals = st.fractions(max_denominator=10**6).filter(lambda q: abs(q) < 10**9)


@pytest.mark.parametrize(
    "q, expected",
    [(Fraction(141, 4), 35), (Fraction(3), 3), (Fraction(-1, 4), -1), (Fraction(-8, 4), -2)],
)
def test_floor(q, expected):
    out = rational_floor(q)
    assert out == expected and isinstance(out, Fraction) and out.denominator == 1


@pytest.mark.parametrize(
    "q, expected",
    [(Fraction(9, 4), Fraction(1, 4)), (Fraction(-1, 4), Fraction(3, 4)), (Fraction(5), 0)],
)
def test_frac(q, expected):
    assert rational_frac(q) == expected


@given(rationals, rationals)
def test_field_and_floor_identities(p, q):
    assert (p + q) - q == p
    f = rational_floor(p)
    assert f <= p < f + 1
    assert rational_frac(p) + f == p
    assert 0 <= rational_frac(p) < 1


@given(rationals)
def test_format_parse_roundtrip(q):
    assert as_rational(format_rational(q)) == q


def test_parse_forms():
    assert as_rational("141/4") == Fraction(141, 4)
    assert as_rational(" -7 ") == -7
    assert as_rational(3) == 3
    with pytest.raises(TypeError):
        as_rational(0.5)
    with pytest.raises(TypeError):
        as_rational(True)
    with pytest.raises(ZeroDivisionError):
        as_rational("1/0")


def test_lcm():
    assert lcm_of_denominators([Fraction(1, 4), Fraction(5, 6), Fraction(2)]) == 12
    assert lcm_of_denominators([]) == 1
