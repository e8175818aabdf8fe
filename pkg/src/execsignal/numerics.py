"""Stable scalar kernels used by the closed-form strategy formulas.

Every function here is an entire analytic function evaluated through
``expm1``/series branches so that the small-argument limits (gamma -> 0,
beta -> 0, dt -> 0) are reached continuously instead of through 0/0
cancellation.  All accept scalars or ndarrays.
"""
from __future__ import annotations

import numpy as np

# Below these thresholds the direct expressions lose digits to cancellation;
# the truncated series keep relative error under 1e-13.
_SEXP_SWITCH = 1e-4
_RATIO_SWITCH = 1e-3


def sexp(x):
    """(1 - exp(-x)) / x, continuous through x = 0 where it equals 1."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SEXP_SWITCH
    xs = np.where(small, 1.0, x)
    direct = -np.expm1(-xs) / xs
    series = 1.0 + x * (-0.5 + x * (1.0 / 6.0 + x * (-1.0 / 24.0 + x / 120.0)))
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def sexp1(x):
    """(sexp(x) - 1) / x; equals -1/2 at x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SEXP_SWITCH
    xs = np.where(small, 1.0, x)
    direct = (-np.expm1(-xs) / xs - 1.0) / xs
    series = -0.5 + x * (1.0 / 6.0 + x * (-1.0 / 24.0 + x / 120.0))
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def e2(x):
    """(1 - (1 + x) exp(-x)) / x**2; equals 1/2 at x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _RATIO_SWITCH
    xs = np.where(small, 1.0, x)
    direct = (-np.expm1(-xs) - xs * np.exp(-xs)) / (xs * xs)
    series = 0.5 + x * (-1.0 / 3.0 + x * (0.125 + x * (-1.0 / 30.0 + x / 144.0)))
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def sxyc(x):
    """(sexp(x) - sexp(2x)) / x; equals 1/2 at x = 0.

    Scaled covariance between the level and the running integral of a
    mean-reverting process over one step (see signal.joint_moments).
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _RATIO_SWITCH
    xs = np.where(small, 1.0, x)
    direct = (-np.expm1(-xs) / xs + np.expm1(-2.0 * xs) / (2.0 * xs)) / xs
    series = 0.5 + x * (-0.5 + x * (7.0 / 24.0 + x * (-0.125 + x * 31.0 / 720.0)))
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def vyc(x):
    """(1 - 2 sexp(x) + sexp(2x)) / x**2; equals 1/3 at x = 0.

    Scaled one-step variance of the running integral.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _RATIO_SWITCH
    xs = np.where(small, 1.0, x)
    direct = (1.0 + 2.0 * np.expm1(-xs) / xs - np.expm1(-2.0 * xs) / (2.0 * xs)) / (xs * xs)
    series = 1.0 / 3.0 + x * (-0.25 + x * (7.0 / 60.0 + x * (-1.0 / 24.0 + x * 31.0 / 2520.0)))
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def tanh_over(x):
    """tanh(x) / x, continuous through 0 where it equals 1."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SEXP_SWITCH
    xs = np.where(small, 1.0, x)
    direct = np.tanh(xs) / xs
    series = 1.0 + x * x * (-1.0 / 3.0 + x * x * (2.0 / 15.0))
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def sinh_ratio(a, b):
    """sinh(a) / sinh(b) evaluated in log space so large arguments never overflow.

    Requires b != 0; a and b may be arrays of matching shape.  For a = 0 the
    result is 0 exactly.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # sinh(x) = sign(x) * exp(|x|) * (1 - exp(-2|x|)) / 2
    sgn = np.sign(a) * np.sign(b)
    aa, ab = np.abs(a), np.abs(b)
    num = -np.expm1(-2.0 * aa)
    den = -np.expm1(-2.0 * ab)
    out = sgn * np.exp(aa - ab) * num / den
    return out if out.ndim else float(out)


def cosh_over_sinh(a, b):
    """cosh(a) / sinh(b) without overflow; requires b != 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sgn = np.sign(b)
    aa, ab = np.abs(a), np.abs(b)
    num = 1.0 + np.exp(-2.0 * aa)
    den = -np.expm1(-2.0 * ab)
    out = sgn * np.exp(aa - ab) * num / den
    return out if out.ndim else float(out)
