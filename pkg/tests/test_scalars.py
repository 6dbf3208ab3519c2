from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from taucalc.scalars import ExactArray, exact_eq, exact_le, format_scalar, parse_scalar

fracs = st.fractions(min_value=-20, max_value=20, max_denominator=12)
gauss = st.tuples(fracs, fracs)


def _arr(pairs):
    return ExactArray.from_values([[f"{a}", f"{b}"] for a, b in pairs])


def _pairs(arr):
    return list(zip(arr.real_fractions().flat, arr.imag_fractions().flat))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(gauss, gauss), min_size=1, max_size=6))
def test_property_elementwise_arithmetic_matches_fractions(items):
    xs, ys = [a for a, _ in items], [b for _, b in items]
    X, Y = _arr(xs), _arr(ys)
    for (a, b), (c, d), (s_re, s_im) in zip(xs, ys, _pairs(X + Y)):
        assert (s_re, s_im) == (a + c, b + d)
    for (a, b), (c, d), (p_re, p_im) in zip(xs, ys, _pairs(X * Y)):
        assert (p_re, p_im) == (a * c - b * d, a * d + b * c)


@settings(max_examples=40, deadline=None)
@given(st.lists(gauss, min_size=1, max_size=5), st.lists(gauss, min_size=1, max_size=5))
def test_property_matmul_matches_loop(xs, ys):
    A = _arr(xs).reshape(len(xs), 1)
    B = _arr(ys).reshape(1, len(ys))
    P = A @ B
    for i, (a, b) in enumerate(xs):
        for j, (c, d) in enumerate(ys):
            assert P.item((i, j)) == (a * c - b * d, a * d + b * c)


def test_normalized_equality_is_structural():
    a = ExactArray.from_values(["2/4", "1/3"])
    b = ExactArray.from_values(["1/2", "2/6"])
    assert a == b
    assert a.den == b.den


def test_zero_dim_sum_stays_exact():
    s = ExactArray.from_values([["1/2", "0"], ["1/2", "0"]]).sum()
    assert s.item(()) == (1, 0)


@pytest.mark.parametrize("text,val", [(["1/2", "-3/4"], (Fraction(1, 2), Fraction(-3, 4))), ("5", (5, 0)), (3, (3, 0))])
def test_parse_exact(text, val):
    assert parse_scalar(text, "exact") == val


def test_float_rejected_in_exact():
    with pytest.raises(ValueError):
        parse_scalar(0.5, "exact")


@given(gauss)
def test_property_format_parse_round_trip(z):
    assert parse_scalar(format_scalar(*z), "exact") == z


def test_float_backend_parse():
    assert parse_scalar(["1/4", 2], "float") == complex(0.25, 2)


def test_exact_comparisons():
    from decimal import Decimal, localcontext

    assert exact_le(Fraction(1, 3), Fraction(1, 2))
    with localcontext() as ctx:
        ctx.prec = 60
        r = Decimal(2).sqrt()
    assert exact_eq(r * r, Fraction(2))
    assert not exact_le(Fraction(3, 2), Fraction(1))


def test_to_complex():
    a = ExactArray.from_values([["1/2", "-1"]])
    assert np.allclose(a.to_complex(), [0.5 - 1j])
