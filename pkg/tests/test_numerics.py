"""The scalar kernels against long-double references and their exact limits."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from execsignal.numerics import (cosh_over_sinh, e2, sexp, sexp1, sinh_ratio,
                                 sxyc, tanh_over, vyc)

# value at 0 for each entire function
AT_ZERO = [(sexp, 1.0), (sexp1, -0.5), (e2, 0.5), (sxyc, 0.5),
           (vyc, 1.0 / 3.0), (tanh_over, 1.0)]


@pytest.mark.parametrize("fn,want", AT_ZERO)
def test_value_at_zero(fn, want):
    assert fn(0.0) == pytest.approx(want, rel=0, abs=1e-15)


def test_known_values_at_one():
    e = math.exp(-1.0)
    assert sexp(1.0) == pytest.approx(1.0 - e, rel=1e-15)
    assert sexp1(1.0) == pytest.approx(-e, rel=1e-15)          # (1-e^-1) - 1
    assert e2(1.0) == pytest.approx(1.0 - 2.0 * e, rel=1e-14)
    assert tanh_over(1.0) == pytest.approx(math.tanh(1.0), rel=1e-15)


def _longdouble_ref(fn_name: str, x: float) -> float:
    """Direct formula in extended precision; valid through the switch region."""
    xl = np.longdouble(x)
    one = np.longdouble(1.0)
    ex = np.exp(-xl)
    if fn_name == "sexp":
        return float((one - ex) / xl)
    if fn_name == "sexp1":
        return float(((one - ex) / xl - one) / xl)
    if fn_name == "e2":
        return float((one - (one + xl) * ex) / (xl * xl))
    if fn_name == "sxyc":
        s1 = (one - ex) / xl
        s2 = (one - np.exp(-2 * xl)) / (2 * xl)
        return float((s1 - s2) / xl)
    if fn_name == "vyc":
        s1 = (one - ex) / xl
        s2 = (one - np.exp(-2 * xl)) / (2 * xl)
        return float((one - 2 * s1 + s2) / (xl * xl))
    if fn_name == "tanh_over":
        return float(np.tanh(xl) / xl)
    raise AssertionError(fn_name)


@pytest.mark.parametrize("fn", [sexp, sexp1, e2, sxyc, vyc, tanh_over])
@pytest.mark.parametrize("x", [3e-7, 3e-6, 5e-5, 9e-5, 1.1e-4, 8e-4, 1.1e-3,
                               6e-3, 0.04, 0.3, 1.7, 9.0])
def test_against_extended_precision(fn, x):
    # covers both sides of every series/direct switch
    assert fn(x) == pytest.approx(_longdouble_ref(fn.__name__, x), rel=2e-13)


@pytest.mark.parametrize("fn", [sexp, sexp1, e2, sxyc, vyc, tanh_over])
def test_vectorized_matches_scalar(fn):
    xs = np.array([0.0, 1e-6, 1e-3, 0.5, 4.0])
    out = fn(xs)
    assert out.shape == xs.shape
    for x, o in zip(xs, out):
        assert o == fn(float(x))


@given(st.floats(min_value=1e-9, max_value=50.0))
def test_sexp_identity(x):
    # x * sexp(x) must reproduce 1 - e^{-x}
    assert x * sexp(x) == pytest.approx(-math.expm1(-x), rel=1e-12)


@given(st.floats(min_value=0.0, max_value=50.0),
       st.floats(min_value=1e-6, max_value=20.0))
def test_sexp_bounds_and_monotonicity(x, dx):
    assert 0.0 < sexp(x + dx) < sexp(x) <= 1.0


@given(st.floats(min_value=0.0, max_value=30.0))
def test_e2_vyc_positive(x):
    assert e2(x) > 0.0
    assert vyc(x) > 0.0
    assert sxyc(x) > 0.0


def test_sinh_ratio_moderate():
    for a, b in [(0.3, 1.2), (2.0, 2.0), (1e-8, 0.5), (3.0, 0.7)]:
        assert sinh_ratio(a, b) == pytest.approx(math.sinh(a) / math.sinh(b),
                                                 rel=1e-13)
    assert sinh_ratio(0.0, 1.0) == 0.0
    assert sinh_ratio(-0.4, 1.1) == pytest.approx(math.sinh(-0.4) / math.sinh(1.1),
                                                  rel=1e-13)


def test_sinh_ratio_no_overflow():
    # direct sinh overflows beyond ~710; the log-space form must not
    with np.errstate(over="raise"):
        out = sinh_ratio(800.0, 1000.0)
    assert out == pytest.approx(math.exp(-200.0), rel=1e-12)
    assert sinh_ratio(1000.0, 1000.0) == 1.0


def test_cosh_over_sinh():
    for a, b in [(0.0, 0.9), (2.5, 1.5), (1.0, 4.0)]:
        assert cosh_over_sinh(a, b) == pytest.approx(math.cosh(a) / math.sinh(b),
                                                     rel=1e-13)
    with np.errstate(over="raise"):
        out = cosh_over_sinh(900.0, 1100.0)
    assert out == pytest.approx(math.exp(-200.0), rel=1e-12)


@given(st.floats(min_value=1e-3, max_value=400.0),
       st.floats(min_value=1e-3, max_value=400.0))
@settings(max_examples=200)
def test_sinh_ratio_reciprocal(a, b):
    r = sinh_ratio(a, b)
    assert r > 0
    assert r * sinh_ratio(b, a) == pytest.approx(1.0, rel=1e-12)
