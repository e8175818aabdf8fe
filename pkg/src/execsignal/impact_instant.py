"""Instantaneous-impact regime: coefficient functions, optimal rates, static
closed form with its Euler-Lagrange certificate, and the pathwise simulator.

Execution price is S = P - kappa*r while trading at rate r (selling r > 0),
so cash accrues at (P - kappa*r)*r.  The objective is

    penalized regime:  C_T - phi*int X^2 dt + X_T*(P_T - varrho*X_T)
    fuel regime:       C_T - phi*int X^2 dt   with X_T = 0 enforced

with phi = sigma_P^2 * phi_hat.  All value coefficients are evaluated in a
tanh form that stays bounded for any horizon, and every closed form here is
certified against an independent route (quadrature, finite differences, or
the BVP oracle) in the test suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import NumericError
from .numerics import cosh_over_sinh, e2, sexp, sinh_ratio, tanh_over
from .oracles import quadrature
from .schedule import TradeSchedule
from .signal import SignalParams, sample_paths

# Stream salt for this regime; montecarlo shares it so a single simulate()
# path coincides bit-for-bit with Monte Carlo path 0.
SALT_INSTANT = 1

# Below this, beta*(T-t) switches h and psi to their beta -> 0 limits.
_BETA_TINY = 1e-7


@dataclass(frozen=True)
class InstantModel:
    """Impact and risk parameters; varrho=None selects the fuel-constrained regime."""
    kappa: float
    phi_hat: float
    sigma_P: float
    varrho: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError("InstantModel.kappa must be finite and > 0")
        if not (math.isfinite(self.phi_hat) and self.phi_hat >= 0):
            raise ValueError("InstantModel.phi_hat must be finite and >= 0")
        if not (math.isfinite(self.sigma_P) and self.sigma_P > 0):
            raise ValueError("InstantModel.sigma_P must be finite and > 0")
        if self.varrho is not None:
            if not (math.isfinite(self.varrho) and self.varrho >= 0):
                raise ValueError("InstantModel.varrho must be finite and >= 0")
            root = math.sqrt(self.kappa * self.phi)
            if abs(self.varrho - root) < 1e-12 * root:
                raise ValueError(
                    "InstantModel: varrho equal to sqrt(kappa*phi) makes the value "
                    "coefficients singular; perturb one of them")

    @property
    def phi(self) -> float:
        return self.sigma_P * self.sigma_P * self.phi_hat

    @property
    def beta(self) -> float:
        return math.sqrt(self.phi / self.kappa)

    @property
    def zeta(self) -> float:
        if self.varrho is None:
            raise ValueError("zeta is defined only in the penalized regime")
        root = math.sqrt(self.kappa * self.phi)
        if self.varrho == 0.0 and root == 0.0:
            raise ValueError("zeta undefined for varrho = phi = 0")
        return (self.varrho + root) / (self.varrho - root)

    @property
    def is_fuel(self) -> bool:
        return self.varrho is None


@dataclass(frozen=True)
class ExecutionSpec:
    """Initial inventory, horizon, unaffected price, and starting cash."""
    x0: float
    T: float
    P0: float
    c0: float = 0.0

    def __post_init__(self):
        for name in ("x0", "T", "P0", "c0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"ExecutionSpec.{name} must be finite")
        if self.T <= 0:
            raise ValueError("ExecutionSpec.T must be > 0")
        if self.x0 < 0:
            raise ValueError("ExecutionSpec.x0 must be >= 0")


@dataclass(frozen=True, eq=False)
class SimPath:
    """One realized trajectory and its objective value."""
    grid: np.ndarray
    I: np.ndarray
    P: np.ndarray
    X: np.ndarray
    C: np.ndarray
    rate: np.ndarray
    objective: float


# ---------------------------------------------------------------------------
# value coefficients
# ---------------------------------------------------------------------------

def _check_window(t, T):
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-15) or np.any(t > T * (1 + 1e-15)):
        raise ValueError(f"time must lie in [0, T]={T}")
    return t


def v2(model: InstantModel, t, T: float):
    """Quadratic value coefficient of the penalized regime.

    Evaluated as -kappa*(phi*th + varrho)/(varrho*th + kappa) with
    th = tanh(beta*(T-t))/beta, which is algebraically the textbook
    zeta-exponential form but bounded for any horizon and continuous
    through phi = 0.  Terminal value is exactly -varrho.
    """
    if model.is_fuel:
        raise ValueError("v2 needs the penalized regime; use v2_bar for fuel")
    t = _check_window(t, T)
    tau = T - t
    th = tau * tanh_over(model.beta * tau)
    out = -model.kappa * (model.phi * th + model.varrho) / (model.varrho * th + model.kappa)
    return out if out.ndim else float(out)


def v2_bar(model: InstantModel, t, T: float):
    """Fuel-constrained quadratic coefficient -sqrt(kappa*phi)*coth(beta*(T-t)).

    Diverges like -kappa/(T-t) as t -> T (which is also its exact phi=0
    limit), so t = T is outside the domain.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t >= T):
        raise ValueError("v2_bar is singular at t = T; need t < T")
    t = _check_window(t, T)
    tau = T - t
    th = tau * tanh_over(model.beta * tau)
    out = -model.kappa / th
    return out if out.ndim else float(out)


def decay_factor(model: InstantModel, t: float, s: float, T: float,
                 fuel: bool = False) -> float:
    """exp((1/kappa) * int_t^s v2(u) du), the response decay between t and s.

    Penalized regime integrates v2 by adaptive quadrature.  The fuel regime
    uses the closed form sinh(beta*(T-s))/sinh(beta*(T-t)), an identity the
    test suite re-verifies against quadrature of v2_bar.
    """
    if not (0 <= t <= s <= T):
        raise ValueError(f"decay_factor needs 0 <= t <= s <= T, got t={t}, s={s}, T={T}")
    if fuel:
        if s == t:
            return 1.0
        if s >= T:
            return 0.0
        b = model.beta
        if b * (T - t) < _BETA_TINY:
            return (T - s) / (T - t)
        return sinh_ratio(b * (T - s), b * (T - t))
    if model.is_fuel:
        raise ValueError("penalized decay_factor needs varrho; pass fuel=True")
    if s == t:
        return 1.0
    integral = quadrature(lambda u: v2(model, u, T), t, s)
    return math.exp(integral / model.kappa)


def _fuel_signal_weight(beta: float, gamma: float, tau):
    """h(tau) = int_0^tau exp(-gamma*u) sinh(beta*(tau-u)) du / sinh(beta*tau).

    Closed form via the sexp kernel; the beta*tau -> 0 limit switches to
    tau*(sexp - e2) which also covers phi = 0 exactly.  h(0) = 0.
    """
    tau = np.asarray(tau, dtype=float)
    pos = tau > 0.0
    taup = np.where(pos, tau, 1.0)
    small = beta * taup < _BETA_TINY
    # main branch
    bp = (beta + gamma) * taup
    bm = (beta - gamma) * taup
    den = -np.expm1(-2.0 * beta * taup)
    den = np.where(small, 1.0, den)
    main = taup * (sexp(bp) - np.exp(-bp) * sexp(bm)) / den
    # beta -> 0 branch
    g = gamma * taup
    limit = taup * (sexp(g) - e2(g))
    out = np.where(pos, np.where(small, limit, main), 0.0)
    return out if out.ndim else float(out)


def v1(model: InstantModel, params: SignalParams, t: float, iota: float,
       T: float) -> float:
    """Linear value coefficient: int_t^T iota e^{-gamma(s-t)} decay(t,s) ds."""
    if model.is_fuel:
        raise ValueError("v1 needs the penalized regime")
    if not (0 <= t <= T):
        raise ValueError("v1 needs 0 <= t <= T")
    if iota == 0.0:
        return 0.0
    return iota * quadrature(
        lambda s: math.exp(-params.gamma * (s - t)) * decay_factor(model, t, s, T),
        t, T)


def v0(model: InstantModel, params: SignalParams, t: float, iota: float,
       T: float) -> float:
    """Constant value coefficient (1/4kappa) int_t^T E[v1(s, I_s)^2 | I_t] ds.

    v1 is linear in the signal, so the inner expectation is A(s)^2 E[I_s^2]
    with A(s) the unit-signal integral factor and the OU second moment
    E[I_s^2 | I_t] = (iota e^{-gamma*(s-t)})^2 + sigma^2 (s-t) sexp(2 gamma (s-t)).
    """
    if model.is_fuel:
        raise ValueError("v0 needs the penalized regime")
    if not (0 <= t <= T):
        raise ValueError("v0 needs 0 <= t <= T")

    def integrand(s: float) -> float:
        a = v1(model, params, s, 1.0, T)
        tau = s - t
        mean = iota * math.exp(-params.gamma * tau)
        var = params.sigma ** 2 * tau * sexp(2.0 * params.gamma * tau)
        return a * a * (mean * mean + var)

    return quadrature(integrand, t, T) / (4.0 * model.kappa)


# ---------------------------------------------------------------------------
# optimal rates
# ---------------------------------------------------------------------------

def adaptive_rate(model: InstantModel, params: SignalParams, t: float,
                  X: float, iota: float, T: float) -> float:
    """Optimal penalized-regime speed -(1/2kappa)(2 v2 X + signal integral)."""
    return -(2.0 * v2(model, t, T) * X + v1(model, params, t, iota, T)) / (2.0 * model.kappa)


def fuel_rate(model: InstantModel, params: SignalParams, t: float,
              X: float, iota: float, T: float) -> float:
    """Fuel-constrained optimal speed; singular at t = T."""
    if t >= T:
        raise ValueError("fuel_rate needs t < T")
    h = _fuel_signal_weight(model.beta, params.gamma, T - t)
    return -(2.0 * v2_bar(model, t, T) * X + iota * h) / (2.0 * model.kappa)


# ---------------------------------------------------------------------------
# static closed form and its certificates
# ---------------------------------------------------------------------------

# Relative |beta - gamma| threshold below which the resonance limit is used.
_RESONANCE_TOL = 1e-6


def _psi(beta: float, t, T: float):
    tau = np.asarray(T - np.asarray(t, dtype=float), dtype=float)
    if beta * T < _BETA_TINY:
        return tau / T
    return sinh_ratio(beta * tau, beta * T)


def _psi_rate(beta: float, t, T: float):
    """-d/dt psi(t)."""
    t = np.asarray(t, dtype=float)
    if beta * T < _BETA_TINY:
        return np.full(t.shape, 1.0 / T) if t.ndim else 1.0 / T
    return beta * cosh_over_sinh(beta * (T - t), beta * T)


def _varphi(model: InstantModel, iota: float, gamma: float, t, T: float):
    """Signal tilt of the static inventory: the zero-boundary solution of the
    Euler-Lagrange ODE driven by iota e^{-gamma t}."""
    t = np.asarray(t, dtype=float)
    k, b = model.kappa, model.beta
    if iota == 0.0:
        return np.zeros(t.shape) if t.ndim else 0.0
    if b == 0.0 and gamma == 0.0:
        out = iota * t * (T - t) / (4.0 * k)
        return out if out.ndim else float(out)
    if b > 0.0 and abs(b - gamma) < _RESONANCE_TOL * b:
        # resonance beta ~= gamma: L'Hopital limit of the generic form
        coth = cosh_over_sinh(gamma * T, gamma * T)
        term = (T * np.exp(-gamma * t) * coth
                - t * math.exp(-gamma * T) * cosh_over_sinh(gamma * t, gamma * T)
                - (T - t) * cosh_over_sinh(gamma * (T - t), gamma * T))
        out = iota / (4.0 * k * gamma) * term
        return out if out.ndim else float(out)
    c = iota / (2.0 * k * (b * b - gamma * gamma))
    if b * T < _BETA_TINY:
        r1, r2 = t / T, (T - t) / T
    else:
        r1 = sinh_ratio(b * t, b * T)
        r2 = sinh_ratio(b * (T - t), b * T)
    out = c * (np.exp(-gamma * t) - math.exp(-gamma * T) * r1 - r2)
    return out if out.ndim else float(out)


def _varphi_rate(model: InstantModel, iota: float, gamma: float, t, T: float):
    """-d/dt of the signal tilt."""
    t = np.asarray(t, dtype=float)
    k, b = model.kappa, model.beta
    if iota == 0.0:
        return np.zeros(t.shape) if t.ndim else 0.0
    if b == 0.0 and gamma == 0.0:
        out = -iota * (T - 2.0 * t) / (4.0 * k)
        return out if out.ndim else float(out)
    if b > 0.0 and abs(b - gamma) < _RESONANCE_TOL * b:
        coth = cosh_over_sinh(gamma * T, gamma * T)
        dterm = (-gamma * T * np.exp(-gamma * t) * coth
                 - math.exp(-gamma * T) * (cosh_over_sinh(gamma * t, gamma * T)
                                           + gamma * t * sinh_ratio(gamma * t, gamma * T))
                 + cosh_over_sinh(gamma * (T - t), gamma * T)
                 + gamma * (T - t) * sinh_ratio(gamma * (T - t), gamma * T))
        out = -iota / (4.0 * k * gamma) * dterm
        return out if out.ndim else float(out)
    c = iota / (2.0 * k * (b * b - gamma * gamma))
    if b * T < _BETA_TINY:
        d = -gamma * np.exp(-gamma * t) - math.exp(-gamma * T) / T + 1.0 / T
    else:
        d = (-gamma * np.exp(-gamma * t)
             - b * math.exp(-gamma * T) * cosh_over_sinh(b * t, b * T)
             + b * cosh_over_sinh(b * (T - t), b * T))
    out = -c * d
    return out if out.ndim else float(out)


def static_inventory(model: InstantModel, params: SignalParams,
                     spec: ExecutionSpec, iota0: float, t):
    """Optimal fuel-constrained static inventory X*(t) = x*psi(t) + tilt(t).

    psi is the signal-free sinh envelope; the tilt is the zero-boundary
    solution of the stationarity ODE -2k X'' + 2phi X = iota e^{-gamma t},
    with dedicated branches for phi = 0, phi = gamma = 0 and the
    beta ~= gamma resonance.  Certified against the BVP oracle in tests.
    """
    if not model.is_fuel:
        raise ValueError("static_inventory is defined for the fuel regime")
    t = _check_window(t, spec.T)
    out = (spec.x0 * _psi(model.beta, t, spec.T)
           + _varphi(model, iota0, params.gamma, t, spec.T))
    return out if np.ndim(out) else float(out)


def static_rate(model: InstantModel, params: SignalParams,
                spec: ExecutionSpec, iota0: float, t):
    """Selling rate -dX*/dt of the static schedule, in closed form."""
    if not model.is_fuel:
        raise ValueError("static_rate is defined for the fuel regime")
    t = _check_window(t, spec.T)
    out = (spec.x0 * _psi_rate(model.beta, t, spec.T)
           + _varphi_rate(model, iota0, params.gamma, t, spec.T))
    return out if np.ndim(out) else float(out)


def static_schedule(model: InstantModel, params: SignalParams,
                    spec: ExecutionSpec, iota0: float,
                    intervals: int = 1000) -> TradeSchedule:
    """Discretize the static solution to a TradeSchedule.

    Flow on each cell is the exact inventory difference over the cell, so the
    schedule liquidates exactly; rate_fn carries the continuous closed form.
    """
    if intervals < 1:
        raise ValueError("intervals must be >= 1")
    grid = np.linspace(0.0, spec.T, intervals + 1)
    inv = static_inventory(model, params, spec, iota0, grid)
    inv = np.asarray(inv, dtype=float)
    flow = np.diff(inv) / np.diff(grid)
    return TradeSchedule(
        x0=spec.x0, atoms=(), grid=grid, flow=flow,
        rate_fn=lambda s: static_rate(model, params, spec, iota0, s))


def euler_lagrange_residual(model: InstantModel, params: SignalParams,
                            spec: ExecutionSpec, schedule: TradeSchedule,
                            iota0: float, n_points: int = 1001):
    """First-order stationarity profile of a fuel-constrained schedule.

    lambda(t) = 2 kappa r(t) + 2 phi int_0^t X ds - int_0^t iota0 e^{-gamma s} ds
    is constant in t exactly when the schedule is optimal.  Returns
    (t, lambda(t)) on a uniform grid.  Atomic schedules have no classical
    rate, and a schedule that fails to liquidate has no multiplier at all;
    both are rejected.
    """
    if any(abs(sz) > 0.0 for _, sz in schedule.atoms):
        raise ValueError("Euler-Lagrange residual needs an atomless schedule")
    if abs(schedule.end_time() - spec.T) > 1e-12 * max(1.0, spec.T):
        raise ValueError("schedule horizon differs from spec.T")
    if n_points < 11:
        raise ValueError("n_points too small for a stable profile")
    t = np.linspace(0.0, spec.T, n_points)
    if schedule.rate_fn is not None:
        rate = np.asarray(schedule.rate_fn(t), dtype=float)
        X = spec.x0 - cumulative_simpson(rate, x=t, initial=0.0)
    else:
        # piecewise-constant flow: sample at cell value, inventory exactly
        idx = np.clip(np.searchsorted(schedule.grid, t, side="right") - 1,
                      0, len(schedule.flow) - 1)
        rate = -schedule.flow[idx]
        X = np.array([schedule.inventory(s) for s in t])
    int_x = cumulative_simpson(X, x=t, initial=0.0)
    sig = iota0 * t * sexp(params.gamma * t)
    lam = 2.0 * model.kappa * rate + 2.0 * model.phi * int_x - sig
    return t, lam


# ---------------------------------------------------------------------------
# deterministic certificate of the penalized value function
# ---------------------------------------------------------------------------

def deterministic_value(model: InstantModel, spec: ExecutionSpec,
                        ibar: Callable[[float], float],
                        grid_points: int = 10000):
    """Value and optimal rate for a deterministic signal path Ibar(t).

    Returns (V, rate_fn) where V = P0*x + w0(0) + x*w1(0) + x^2*v2(0) with
    w1(t) = int_t^T Ibar(s) decay(t,s) ds and w0(t) = (1/4k) int_t^T w1^2 ds,
    both by adaptive quadrature; rate_fn interpolates the feedback solution
    of the induced inventory ODE on a fine grid (an independent cumulative-
    Simpson route, cross-checked against the quadrature one in tests).
    """
    if model.is_fuel:
        raise ValueError("deterministic_value needs the penalized regime")
    T, k, x = spec.T, model.kappa, spec.x0

    def w1(t: float) -> float:
        if t >= T:
            return 0.0
        return quadrature(lambda s: ibar(s) * decay_factor(model, t, s, T), t, T)

    w1_0 = w1(0.0)
    w0_0 = quadrature(lambda s: w1(s) ** 2, 0.0, T,
                      abs_tol=1e-9, rel_tol=1e-8) / (4.0 * k)
    value = spec.P0 * x + w0_0 + x * w1_0 + x * x * v2(model, 0.0, T)

    # grid route for the rate: J = int_0^t v2, w1 = e^{-J/k} * (U(T) - U(t))
    # with U = int_0^t Ibar(s) e^{J(s)/k} ds; then integrate the closed-loop
    # inventory by implicit trapezoid and interpolate the resulting rate.
    n = max(int(grid_points), 100)
    tg = np.linspace(0.0, T, n + 1)
    v2g = np.asarray(v2(model, tg, T), dtype=float)
    J = cumulative_simpson(v2g, x=tg, initial=0.0)
    ib = np.array([ibar(s) for s in tg], dtype=float)
    U = cumulative_simpson(ib * np.exp(J / k), x=tg, initial=0.0)
    w1g = np.exp(-J / k) * (U[-1] - U)
    dt = T / n
    Xg = np.empty(n + 1)
    Xg[0] = x
    a = v2g / k        # dX/dt = a*X + b with these coefficients
    b = w1g / (2.0 * k)
    for i in range(n):
        Xg[i + 1] = ((Xg[i] + 0.5 * dt * (a[i] * Xg[i] + b[i] + b[i + 1]))
                     / (1.0 - 0.5 * dt * a[i + 1]))
    rg = -(2.0 * v2g * Xg + w1g) / (2.0 * k)

    def rate_fn(s):
        return np.interp(s, tg, rg)

    return value, rate_fn


# ---------------------------------------------------------------------------
# simulation engine
# ---------------------------------------------------------------------------

Strategy = Union[str, Callable]


def _adaptive_signal_grid(model: InstantModel, params: SignalParams,
                          grid: np.ndarray, T: float) -> np.ndarray:
    """A(t) = int_t^T e^{-gamma(s-t)} decay(t,s) ds on the nodes.

    Computed on a midpoint-refined grid through the integrating factor
    e^{-gamma s + J(s)/kappa}, J = int v2; independent of the adaptive
    quadrature used by v1, which the tests exploit as a cross-check.
    """
    n = len(grid) - 1
    fine = np.empty(2 * n + 1)
    fine[0::2] = grid
    fine[1::2] = 0.5 * (grid[:-1] + grid[1:])
    v2f = np.asarray(v2(model, fine, T), dtype=float)
    J = cumulative_simpson(v2f, x=fine, initial=0.0)
    ex = -params.gamma * fine + J / model.kappa
    W = cumulative_simpson(np.exp(ex), x=fine, initial=0.0)
    A = np.exp(-ex) * (W[-1] - W)
    return A[0::2]


def _coefficient_grids(model: InstantModel, params: SignalParams,
                       spec: ExecutionSpec, grid: np.ndarray, name: str):
    """Node arrays (a, b, c) of the linear feedback rate r = a*X + b*I + c."""
    n = len(grid) - 1
    T = spec.T
    a = np.zeros(n + 1)
    b = np.zeros(n + 1)
    c = np.zeros(n + 1)
    if name == "twap":
        c[:] = spec.x0 / T
    elif name == "static":
        c[:] = static_rate(model, params, spec, params.iota0, grid)
    elif name == "fuel":
        # node n is never evaluated: the last step is the terminal block
        a[:n] = -np.asarray(v2_bar(model, grid[:n], T)) / model.kappa
        b[:n] = -_fuel_signal_weight(model.beta, params.gamma, T - grid[:n]) / (2.0 * model.kappa)
    elif name == "adaptive":
        a[:] = -np.asarray(v2(model, grid, T)) / model.kappa
        b[:] = -_adaptive_signal_grid(model, params, grid, T) / (2.0 * model.kappa)
    else:
        raise AssertionError(name)
    return a, b, c


def _resolve_strategy(model: InstantModel, strategy: Strategy):
    """Map a strategy spec to ("name", None) or ("custom", callable)."""
    if callable(strategy):
        return "custom", strategy
    name = str(strategy).lower()
    if model.is_fuel:
        if name == "adaptive":     # regime-appropriate alias
            name = "fuel"
        allowed = ("fuel", "static", "twap")
    else:
        allowed = ("adaptive", "twap")
    if name not in allowed:
        regime = "fuel" if model.is_fuel else "penalized"
        raise ValueError(
            f"unknown strategy {strategy!r} for the {regime} regime; "
            f"expected one of {allowed} or a callable rate(t, X, I)")
    return name, None


def price_paths(model: InstantModel, spec: ExecutionSpec, Y: np.ndarray,
                z_price: np.ndarray, dt: float, noise_on: bool) -> np.ndarray:
    """Price node array P0 + Y + sigma_P*W from the increments z_price."""
    if not noise_on:
        return spec.P0 + Y
    B, n = z_price.shape
    W = np.empty((B, n + 1))
    W[:, 0] = 0.0
    np.cumsum(z_price, axis=1, out=W[:, 1:])
    return spec.P0 + Y + model.sigma_P * math.sqrt(dt) * W


def simulate_batch(model: InstantModel, params: SignalParams,
                   spec: ExecutionSpec, strategy: Strategy, grid: np.ndarray,
                   I: np.ndarray, Y: np.ndarray, z_price: np.ndarray,
                   noise_on: bool = True):
    """Run one strategy over a batch of pre-sampled signal paths.

    I and Y are (B, n+1) node arrays of the signal and its running integral;
    z_price is (B, n) of standard normals driving the unpredictable price
    component.  Inventory follows the implicit trapezoid rule for feedback
    strategies (Heun for callables), cash the trapezoid of (P - kappa*r)*r.
    In the fuel regime the final step is replaced by a block execution of
    the residual inventory; a residual of dt*x0 or more raises NumericError
    since it means the feedback integration broke down.

    Returns (X, C, rate, objective) with pathwise arrays of shape (B, n+1).
    """
    grid = np.asarray(grid, dtype=float)
    n = len(grid) - 1
    if n < 2:
        raise ValueError("need at least 2 steps")
    dt = grid[1] - grid[0]
    if not np.allclose(np.diff(grid), dt, rtol=1e-9, atol=0.0):
        raise ValueError("simulation grid must be uniform")
    B = I.shape[0]
    if I.shape != (B, n + 1) or Y.shape != (B, n + 1) or z_price.shape != (B, n):
        raise ValueError("path array shapes do not match the grid")

    P = price_paths(model, spec, Y, z_price, dt, noise_on)

    name, custom = _resolve_strategy(model, strategy)
    fuel_block = model.is_fuel
    stop = n - 1 if fuel_block else n
    kap = model.kappa

    X = np.empty((B, n + 1))
    C = np.empty((B, n + 1))
    R = np.zeros((B, n + 1))
    X[:, 0] = spec.x0
    C[:, 0] = spec.c0

    if custom is None:
        a, b, c = _coefficient_grids(model, params, spec, grid, name)
        r_prev = a[0] * X[:, 0] + b[0] * I[:, 0] + c[0]
        R[:, 0] = r_prev
        for k in range(stop):
            x_new = ((X[:, k] - 0.5 * dt * (r_prev + b[k + 1] * I[:, k + 1] + c[k + 1]))
                     / (1.0 + 0.5 * dt * a[k + 1]))
            r_new = a[k + 1] * x_new + b[k + 1] * I[:, k + 1] + c[k + 1]
            X[:, k + 1] = x_new
            R[:, k + 1] = r_new
            C[:, k + 1] = C[:, k] + 0.5 * dt * (
                (P[:, k] - kap * r_prev) * r_prev + (P[:, k + 1] - kap * r_new) * r_new)
            r_prev = r_new
    else:
        r_prev = np.asarray(custom(grid[0], X[:, 0], I[:, 0]), dtype=float) + np.zeros(B)
        R[:, 0] = r_prev
        for k in range(stop):
            x_pred = X[:, k] - dt * r_prev
            r_pred = custom(grid[k + 1], x_pred, I[:, k + 1])
            x_new = X[:, k] - 0.5 * dt * (r_prev + r_pred)
            r_new = np.asarray(custom(grid[k + 1], x_new, I[:, k + 1]), dtype=float) + np.zeros(B)
            X[:, k + 1] = x_new
            R[:, k + 1] = r_new
            C[:, k + 1] = C[:, k] + 0.5 * dt * (
                (P[:, k] - kap * r_prev) * r_prev + (P[:, k + 1] - kap * r_new) * r_new)
            r_prev = r_new

    if fuel_block:
        residual = X[:, n - 1].copy()
        limit = dt * spec.x0 if spec.x0 > 0 else dt
        bad = np.abs(residual) >= limit
        if np.any(bad):
            worst = float(np.max(np.abs(residual)))
            raise NumericError(
                f"terminal inventory residual {worst:.3e} exceeds {limit:.3e}; "
                "the feedback integration is under-resolved (reduce dt)")
        block_rate = residual / dt
        R[:, n - 1] = block_rate
        R[:, n] = 0.0
        X[:, n] = 0.0
        C[:, n] = (C[:, n - 1]
                   + residual * 0.5 * (P[:, n - 1] + P[:, n])
                   - kap * residual * block_rate)

    objective = C[:, n] - model.phi * np.trapezoid(X * X, dx=dt, axis=1)
    if not model.is_fuel:
        objective = objective + X[:, n] * (P[:, n] - model.varrho * X[:, n])
    return X, C, R, objective


def simulate(model: InstantModel, params: SignalParams, spec: ExecutionSpec,
             strategy: Strategy, dt: Optional[float] = None, seed: int = 0,
             noise_on: bool = True) -> SimPath:
    """Simulate one execution path under the given strategy.

    dt is rounded so the horizon is an integer number of steps (default
    T/10000).  The path drawn for (seed) is identical to path 0 of any
    Monte Carlo batch run with the same seed and grid.
    """
    T = spec.T
    if dt is None:
        dt = T / 10000.0
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError("dt must be positive and finite")
    n = max(2, int(round(T / dt)))
    grid = np.linspace(0.0, T, n + 1)
    I, Y, Z = sample_paths(params, grid, 1, seed, salt=SALT_INSTANT,
                           extra_normals=1)
    X, C, R, obj = simulate_batch(model, params, spec, strategy, grid,
                                  I, Y, Z[:, :, 0], noise_on=noise_on)
    P = price_paths(model, spec, Y, Z[:, :, 0], grid[1] - grid[0], noise_on)
    return SimPath(grid=grid, I=I[0], P=P[0], X=X[0], C=C[0], rate=R[0],
                   objective=float(obj[0]))
