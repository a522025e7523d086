import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superproj.errors import (
    DimensionMismatch,
    NonHomogeneous,
    NotInvertible,
    UnknownCoordinate,
)
from superproj.graded_algebra import (
    Dimension,
    Parity,
    SuperFunction,
    gmul,
    is_zero,
    normal_form,
    partial,
    scalar_field,
)

from helpers import rand_super

D22 = Dimension.of(2, 2)
D11 = Dimension.of(1, 1)


def coord(dim, i):
    return SuperFunction.coordinate(dim, i)


def expr(dim, text):
    from superproj.expressions import parse_expression

    return parse_expression(dim, text)


# ---------------------------------------------------------------------------
# small strategies
# ---------------------------------------------------------------------------

def superfunctions(dim, parity=None):
    def build(seed):
        return rand_super(random.Random(seed), dim, parity)

    return st.integers(min_value=0, max_value=10**6).map(build)


# ---------------------------------------------------------------------------
# examples
# ---------------------------------------------------------------------------

class TestProduct:
    def test_odd_square_is_zero(self):
        th1 = coord(D22, 2)
        assert gmul(th1, th1).is_zero()

    def test_anticommutation(self):
        th1, th2 = coord(D22, 2), coord(D22, 3)
        assert gmul(th1, th2) == -gmul(th2, th1)

    def test_distributive_expansion(self):
        x = coord(D22, 0)
        f = x + gmul(coord(D22, 2), coord(D22, 3))
        # oracle: expand term by term
        want = gmul(x, x) + gmul(gmul(coord(D22, 2), coord(D22, 3)), x)
        assert gmul(f, x) == want
        assert gmul(f, x) == expr(D22, "x1^2 + x1*th1*th2")

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            gmul(coord(D22, 0), coord(D11, 0))


class TestPartial:
    def test_left_derivative_of_leading_factor(self):
        th1th2 = gmul(coord(D22, 2), coord(D22, 3))
        assert partial(2, th1th2) == coord(D22, 3)

    def test_sign_past_first_factor(self):
        th1th2 = gmul(coord(D22, 2), coord(D22, 3))
        assert partial(3, th1th2) == -coord(D22, 2)

    def test_even_derivative(self):
        f = expr(D22, "x1^2*th1")
        assert partial(0, f) == expr(D22, "2*x1*th1")

    def test_unknown_coordinate(self):
        with pytest.raises(UnknownCoordinate):
            partial(9, coord(D22, 0))


class TestNormalForm:
    def test_cancellation_to_zero(self):
        th1, th2 = coord(D22, 2), coord(D22, 3)
        assert is_zero(gmul(th2, th1) + gmul(th1, th2))

    def test_gcd_reduction(self):
        assert expr(D22, "(x1^2 - 1)/(x1 - 1)") == expr(D22, "x1 + 1")

    @settings(max_examples=30, deadline=None)
    @given(superfunctions(D22))
    def test_idempotent(self, f):
        assert normal_form(normal_form(f)) == normal_form(f)


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(superfunctions(D22, 0), superfunctions(D22, 1))
def test_graded_commutativity(a, b):
    # even/odd pair commutes, odd/odd anticommutes
    assert gmul(a, b) == gmul(b, a)
    assert gmul(b, b).parity() == Parity(0)


@settings(max_examples=20, deadline=None)
@given(superfunctions(D22, 1), superfunctions(D22, 1))
def test_odd_odd_anticommute(a, b):
    assert gmul(a, b) == -gmul(b, a)


def test_nilpotency_of_generators():
    for slot in range(D22.m):
        th = coord(D22, D22.n + slot)
        assert gmul(th, th).is_zero()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), superfunctions(D22, 0), superfunctions(D22))
def test_leibniz(i, a, b):
    sign = 1  # a even
    lhs = partial(i, gmul(a, b))
    rhs = gmul(partial(i, a), b) + gmul(a, partial(i, b)).scale(sign)
    assert lhs == rhs


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), superfunctions(D22, 1), superfunctions(D22))
def test_leibniz_odd_first_factor(i, a, b):
    sign = (-1) ** (D22.parity(i) * 1)
    lhs = partial(i, gmul(a, b))
    rhs = gmul(partial(i, a), b) + gmul(a, partial(i, b)).scale(sign)
    assert lhs == rhs


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), superfunctions(D22))
def test_mixed_partials(i, j, f):
    sign = (-1) ** (D22.parity(i) * D22.parity(j))
    assert partial(i, partial(j, f)) == partial(j, partial(i, f)).scale(sign)


def test_iterated_odd_derivatives_vanish():
    rng = random.Random(5)
    f = rand_super(rng, D22)
    g = f
    for slot in range(D22.m):
        g = partial(D22.n + slot, g)
    assert partial(D22.n, g).is_zero()
    assert partial(D22.n + 1, g).is_zero()


# ---------------------------------------------------------------------------
# structure
# ---------------------------------------------------------------------------

class TestParity:
    def test_addition_mod_two(self):
        assert Parity(1) + Parity(1) == Parity(0)
        assert Parity(1) + Parity(0) == Parity(1)

    def test_homogeneity_detection(self):
        f = coord(D22, 0) + gmul(coord(D22, 2), coord(D22, 3))
        assert f.is_homogeneous() and f.parity() == Parity(0)
        g = coord(D22, 0) + coord(D22, 2)
        assert not g.is_homogeneous()
        with pytest.raises(NonHomogeneous):
            g.parity()

    def test_zero_matches_any_parity(self):
        z = SuperFunction.zero(D22)
        assert z.has_parity(0) and z.has_parity(1)


class TestInversion:
    def test_nilpotent_correction(self):
        f = expr(D22, "1 + x1*th1*th2")
        assert gmul(f, f.invert()) == SuperFunction.one(D22)

    def test_rational_body(self):
        f = expr(D22, "x1 + th1*th2")
        assert gmul(f.invert(), f) == SuperFunction.one(D22)

    def test_zero_body_rejected(self):
        with pytest.raises(NotInvertible):
            gmul(coord(D22, 2), coord(D22, 3)).invert()

    def test_odd_rejected(self):
        with pytest.raises(NonHomogeneous):
            coord(D22, 2).invert()


class TestSubstitution:
    def test_chain_identity(self):
        rng = random.Random(3)
        f = rand_super(rng, D22)
        coords = [coord(D22, i) for i in range(D22.size)]
        assert f.substitute(coords) == f

    def test_parity_enforced(self):
        f = coord(D22, 0)
        values = [coord(D22, 2)] + [coord(D22, i) for i in range(1, D22.size)]
        with pytest.raises(NonHomogeneous):
            f.substitute(values)

    def test_migrate_rejects_genuine_dependence(self):
        f = coord(D22, 0)
        with pytest.raises(UnknownCoordinate):
            f.migrate(Dimension(("y1",), ("th1", "th2")))


def test_scalar_field_is_canonical():
    fld, (x1, x2) = scalar_field(D22)
    assert (x1 ** 2 - x2 ** 2) / (x1 - x2) == x1 + x2
