"""Independent numerical ground truth: quadrature, a two-point BVP solver,
and finite-difference ODE residuals.

These routines deliberately use different numerics than the closed forms in
the impact modules (central differences and Simpson sums instead of analytic
antiderivatives), so agreement between the two routes is evidence rather
than tautology.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .errors import NumericError

# Refinement cap for adaptive Simpson, in intervals.
_MAX_INTERVALS = 2 ** 20


def quadrature(f: Callable[[float], float], a: float, b: float,
               abs_tol: float = 1e-10, rel_tol: float = 1e-9) -> float:
    """Integrate f over [a, b] by adaptive Simpson refinement.

    Parameters
    ----------
    f : callable
        Smooth scalar integrand.
    a, b : float
        Integration bounds, a <= b.
    abs_tol, rel_tol : float
        Per-call tolerances; an interval is accepted when the Richardson
        error estimate |S2 - S1| / 15 clears the local share of either.

    Returns
    -------
    float
        The integral estimate, with the standard (S2 - S1) / 15 correction.

    Raises
    ------
    NumericError
        If the refinement cap of 2**20 intervals is exceeded.
    """
    if not (a <= b):
        raise ValueError(f"quadrature needs a <= b, got a={a}, b={b}")
    if abs_tol <= 0 or rel_tol < 0:
        raise ValueError("tolerances must be positive")
    if a == b:
        return 0.0

    def simpson(x0, f0, x2, f2):
        x1 = 0.5 * (x0 + x2)
        f1 = f(x1)
        return x1, f1, (x2 - x0) * (f0 + 4.0 * f1 + f2) / 6.0

    xm, fm, whole = simpson(a, f(a), b, f(b))
    # Stack entries: (x0, f0, xm, fm, x2, f2, S, local abs tol)
    stack = [(a, f(a), xm, fm, b, f(b), whole, abs_tol)]
    total = 0.0
    rough = abs(whole) if whole != 0.0 else 1.0
    intervals = 1
    while stack:
        x0, f0, x1, f1, x2, f2, s, tol = stack.pop()
        lm, lf, s_left = simpson(x0, f0, x1, f1)
        rm, rf, s_right = simpson(x1, f1, x2, f2)
        err = (s_left + s_right - s) / 15.0
        if abs(err) <= max(tol, rel_tol * rough * (x2 - x0) / (b - a)):
            total += s_left + s_right + err
            continue
        intervals += 1
        if intervals > _MAX_INTERVALS:
            raise NumericError(
                f"quadrature refinement cap {_MAX_INTERVALS} intervals exceeded on [{a}, {b}]")
        half = tol / 2.0
        stack.append((x0, f0, lm, lf, x1, f1, s_left, half))
        stack.append((x1, f1, rm, rf, x2, f2, s_right, half))
    return total


@dataclass(frozen=True)
class BvpProblem:
    """Two-point boundary problem -2*kappa*X'' + 2*phi*X - iota*exp(-gamma*t) = 0.

    Boundary values X(0) = x_left, X(T) = 0; uniform grid with M intervals.
    """
    kappa: float
    phi: float
    iota: float
    gamma: float
    x_left: float
    T: float
    M: int

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("BvpProblem requires kappa > 0")
        if self.phi < 0:
            raise ValueError("BvpProblem requires phi >= 0")
        if self.T <= 0:
            raise ValueError("BvpProblem requires T > 0")
        if self.M < 3:
            raise ValueError("BvpProblem requires M >= 3")


def _solve_grid(p: BvpProblem, m: int) -> np.ndarray:
    t = np.linspace(0.0, p.T, m + 1)
    h = p.T / m
    c = 2.0 * p.kappa / (h * h)
    # interior rows: -c*X_{i-1} + (2c + 2 phi) X_i - c*X_{i+1} = iota e^{-gamma t_i}
    ab = np.zeros((3, m - 1))
    ab[0, 1:] = -c
    ab[1, :] = 2.0 * c + 2.0 * p.phi
    ab[2, :-1] = -c
    rhs = p.iota * np.exp(-p.gamma * t[1:-1])
    rhs[0] += c * p.x_left
    interior = solve_banded((1, 1), ab, rhs)
    return np.concatenate(([p.x_left], interior, [0.0]))


def solve_bvp(problem: BvpProblem, richardson: bool = True) -> np.ndarray:
    """Solve the boundary problem on its grid by second-order central differences.

    The discretization matrix is strictly diagonally dominant for phi >= 0,
    so the tridiagonal solve cannot break down.  With ``richardson`` the grid
    is doubled once and the O(h^2) error term cancelled, which is what lets
    the certification tests reach the 1e-8 regime at moderate M.

    Returns the inventory profile at the M+1 grid nodes, boundaries included.
    """
    coarse = _solve_grid(problem, problem.M)
    if not richardson:
        return coarse
    fine = _solve_grid(problem, 2 * problem.M)
    return (4.0 * fine[::2] - coarse) / 3.0


def ode_residual(t: np.ndarray, f: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Central-difference residual f'(t_i) - rhs_i on a uniform grid.

    Returns the residual at the interior nodes t[1:-1]; the caller encodes
    the ODE as f' = rhs evaluated on the same grid.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if t.ndim != 1 or t.shape != f.shape or t.shape != rhs.shape:
        raise ValueError("t, f, rhs must be 1-d arrays of equal length")
    if len(t) < 3:
        raise ValueError("need at least 3 grid points")
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-12, atol=0.0):
        raise ValueError("ode_residual requires a uniform grid")
    deriv = (f[2:] - f[:-2]) / (t[2:] - t[:-2])
    return deriv - rhs[1:-1]
