import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superproj.errors import ParseError
from superproj.expressions import (
    GRAMMAR_HELP,
    format_super,
    parse_expression,
)
from superproj.graded_algebra import Dimension, SuperFunction

from helpers import rand_super

D = Dimension.of(2, 2)


def test_literals_and_rationals():
    assert parse_expression(D, "3/4") == SuperFunction.constant(D, 3).scale(
        __import__("fractions").Fraction(1, 4))
    assert parse_expression(D, "0").is_zero()


def test_power_and_precedence():
    assert parse_expression(D, "2*x1^2 + 1") == parse_expression(D, "1 + x1*x1*2")
    assert parse_expression(D, "-x1^2") == -parse_expression(D, "x1^2")
    assert parse_expression(D, "(x1 + 1)^3") == parse_expression(
        D, "x1^3 + 3*x1^2 + 3*x1 + 1")


def test_negative_power_of_even():
    assert parse_expression(D, "x1^-1") == parse_expression(D, "1/x1")


def test_division_by_odd_rejected():
    with pytest.raises(ParseError):
        parse_expression(D, "1/th1")
    with pytest.raises(ParseError):
        parse_expression(D, "x1/(x1 + th1*th2)")


def test_unknown_name_has_position():
    with pytest.raises(ParseError) as err:
        parse_expression(D, "x1 + bogus")
    assert err.value.line == 1
    assert err.value.column == 5


def test_unbalanced_parens():
    with pytest.raises(ParseError):
        parse_expression(D, "(x1 + 1")


def test_division_by_zero_rejected():
    with pytest.raises(ParseError):
        parse_expression(D, "x1/(x2 - x2)")


def test_printing_examples():
    f = parse_expression(D, "x1^2 + x1*th1*th2")
    assert format_super(f) == "x1^2 + x1*th1*th2"
    assert format_super(SuperFunction.zero(D)) == "0"
    g = parse_expression(D, "(x1+x2)/(x1*x2)*th1")
    assert parse_expression(D, format_super(g)) == g


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_roundtrip_random(seed):
    f = rand_super(random.Random(seed), D, deg=2)
    assert parse_expression(D, format_super(f)) == f


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_roundtrip_with_denominators(seed):
    rng = random.Random(seed)
    f = rand_super(rng, D, deg=2)
    den = rand_super(rng, D, 0, deg=1)
    if den.is_even_scalar() and not den.is_zero():
        g = f * den.invert()
        assert parse_expression(D, format_super(g)) == g


def test_grammar_help_mentions_names():
    assert "x1..xn" in GRAMMAR_HELP and "th1..thm" in GRAMMAR_HELP
