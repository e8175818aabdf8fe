"""Instantaneous-impact regime: closed forms against their oracles.

Frozen constants in this file were produced by the independent routes
(adaptive quadrature, the finite-difference boundary solver, the g-ratio
form of the decay) at tolerances far below the asserted ones; the live
oracle comparisons re-derive the same quantities on every run.
"""
import math
from dataclasses import replace

import numpy as np
import pytest

from execsignal.errors import NumericError
from execsignal.impact_instant import (ExecutionSpec, InstantModel,
                                       _fuel_signal_weight, adaptive_rate,
                                       decay_factor, deterministic_value,
                                       euler_lagrange_residual, fuel_rate,
                                       simulate, simulate_batch,
                                       static_inventory, static_rate,
                                       static_schedule, v0, v1, v2, v2_bar)
from execsignal.oracles import BvpProblem, quadrature, solve_bvp
from execsignal.schedule import TradeSchedule
from execsignal.signal import SignalParams, sample_paths

T = 10.0


# ---------------------------------------------------------------------------
# value coefficients
# ---------------------------------------------------------------------------

def test_v2_frozen_values(pen, fuel):
    assert v2(pen, 0.0, T) == pytest.approx(-0.22362908792240013, rel=1e-13)
    assert v2_bar(fuel, 0.0, T) == pytest.approx(-0.22366515888561994, rel=1e-13)


def test_v2_terminal_and_domain(pen, fuel):
    assert v2(pen, T, T) == -pen.varrho
    with pytest.raises(ValueError):
        v2(fuel, 0.0, T)                    # needs the penalized regime
    with pytest.raises(ValueError):
        v2_bar(fuel, T, T)                  # singular at the horizon
    with pytest.raises(ValueError):
        v2(pen, -0.5, T)


def test_v2_bar_is_large_varrho_limit(fuel):
    big = InstantModel(kappa=fuel.kappa, phi_hat=fuel.phi_hat,
                       sigma_P=fuel.sigma_P, varrho=1e9)
    for t in (0.0, 3.3, 8.0):
        assert v2(big, t, T) == pytest.approx(v2_bar(fuel, t, T), rel=1e-8)


def test_v1_v0_frozen(pen, params):
    assert v1(pen, params, 0.0, params.iota0, T) == pytest.approx(
        0.3630743591057278, rel=1e-10)
    assert v0(pen, params, 0.0, params.iota0, T) == pytest.approx(
        0.5136106450959232, rel=1e-8)
    assert v1(pen, params, T, params.iota0, T) == 0.0
    assert v0(pen, params, T, params.iota0, T) == 0.0
    assert v1(pen, params, 1.0, 0.0, T) == 0.0


def test_rates_frozen(pen, fuel, params):
    assert fuel_rate(fuel, params, 0.0, 10.0, params.iota0, T) == pytest.approx(
        4.111649258223686, rel=1e-12)
    assert adaptive_rate(pen, params, 0.0, 10.0, params.iota0, T) == pytest.approx(
        4.1095073993422755, rel=1e-10)
    with pytest.raises(ValueError):
        fuel_rate(fuel, params, T, 0.0, 0.0, T)


# ---------------------------------------------------------------------------
# decay factors, two independent routes each
# ---------------------------------------------------------------------------

def test_fuel_decay_vs_quadrature(fuel):
    for t, s in [(1.0, 9.0), (0.0, 5.0), (2.5, 7.5), (4.0, 4.0)]:
        closed = decay_factor(fuel, t, s, T, fuel=True)
        quad = math.exp(quadrature(lambda u: v2_bar(fuel, u, T), t, s) / fuel.kappa)
        assert closed == pytest.approx(quad, rel=1e-9)
    assert decay_factor(fuel, 1.0, T, T, fuel=True) == 0.0


def test_penalized_decay_vs_g_ratio(pen):
    # independent oracle: exp((1/k) int v2) = g(T-s)/g(T-t) with
    # g(u) = sinh(b u) + (sqrt(k phi)/varrho) cosh(b u)
    b = pen.beta
    c = math.sqrt(pen.kappa * pen.phi) / pen.varrho

    def g(u):
        return math.sinh(b * u) + c * math.cosh(b * u)

    for t, s in [(1.0, 9.0), (0.0, 5.0), (2.5, 7.5)]:
        assert decay_factor(pen, t, s, T) == pytest.approx(
            g(T - s) / g(T - t), rel=1e-9)


def test_penalized_decay_frozen(pen):
    assert decay_factor(pen, 1.0, 9.0, T) == pytest.approx(
        0.023579359617358308, rel=1e-10)
    assert decay_factor(pen, 0.0, 5.0, T) == pytest.approx(
        0.10641690438885147, rel=1e-10)
    assert decay_factor(pen, 2.5, 7.5, T) == pytest.approx(
        0.10256259706125169, rel=1e-10)


def test_decay_domain(pen, fuel):
    with pytest.raises(ValueError):
        decay_factor(pen, 5.0, 1.0, T)
    with pytest.raises(ValueError):
        decay_factor(fuel, 0.0, 1.0, T)     # penalized route needs varrho


def test_fuel_signal_weight_vs_quadrature(fuel, params):
    beta, g = fuel.beta, params.gamma
    for tau in (0.3, 2.0, 7.0):
        want = quadrature(lambda u: math.exp(-g * u) * math.sinh(beta * (tau - u)),
                          0.0, tau) / math.sinh(beta * tau)
        assert _fuel_signal_weight(beta, g, tau) == pytest.approx(want, rel=1e-9)
    assert _fuel_signal_weight(beta, g, 0.0) == 0.0
    # the beta -> 0 branch against the same integral
    for tau in (0.5, 3.0):
        want = quadrature(lambda u: math.exp(-g * u) * (tau - u), 0.0, tau) / tau
        assert _fuel_signal_weight(0.0, g, tau) == pytest.approx(want, rel=1e-9)


# ---------------------------------------------------------------------------
# static closed form, certified by the boundary-value oracle
# ---------------------------------------------------------------------------

BRANCH_CASES = [
    # (kappa, phi_hat, gamma, iota, x0, label)
    (0.5, 0.1, 0.1, 0.2, 10.0, "paper"),
    (0.5, 0.1, 0.1, -0.5, 10.0, "negative-signal"),
    (0.5, 0.1, 0.0, 0.3, 10.0, "gamma-zero"),
    (0.5, 0.0, 0.1, 0.3, 10.0, "beta-zero"),
    (0.5, 0.0, 0.0, 0.3, 4.0, "beta-gamma-zero"),
    (0.5, 0.005, 0.1, 0.3, 10.0, "resonance"),
    (0.5, 0.005 * (1 + 1e-8), 0.1, 0.3, 10.0, "near-resonance"),
    (0.5, 0.1, 0.1, 0.4, 0.0, "pure-signal"),
]


@pytest.mark.parametrize("kappa,phi_hat,gamma,iota,x0,label", BRANCH_CASES)
def test_static_inventory_vs_bvp(kappa, phi_hat, gamma, iota, x0, label):
    model = InstantModel(kappa=kappa, phi_hat=phi_hat, sigma_P=1.0)
    params = SignalParams(gamma=gamma, sigma=0.1, iota0=iota)
    spec = ExecutionSpec(x0=x0, T=T, P0=0.0)
    M = 1500
    prob = BvpProblem(kappa=kappa, phi=model.phi, iota=iota, gamma=gamma,
                      x_left=x0, T=T, M=M)
    ref = solve_bvp(prob)
    t = np.linspace(0.0, T, M + 1)
    got = np.asarray(static_inventory(model, params, spec, iota, t))
    assert np.max(np.abs(got - ref)) < 2e-7 * max(1.0, x0), label
    assert got[0] == pytest.approx(x0, abs=1e-12)
    assert got[-1] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kappa,phi_hat,gamma,iota,x0,label", BRANCH_CASES)
def test_static_rate_is_inventory_derivative(kappa, phi_hat, gamma, iota, x0, label):
    model = InstantModel(kappa=kappa, phi_hat=phi_hat, sigma_P=1.0)
    params = SignalParams(gamma=gamma, sigma=0.1, iota0=iota)
    spec = ExecutionSpec(x0=x0, T=T, P0=0.0)
    h = 1e-6
    for t in (0.5, 4.2, 9.0):
        num = -(static_inventory(model, params, spec, iota, t + h)
                - static_inventory(model, params, spec, iota, t - h)) / (2 * h)
        assert static_rate(model, params, spec, iota, t) == pytest.approx(
            num, rel=2e-7, abs=1e-9), label


def test_static_schedule_and_stationarity(fuel, params, spec):
    sch = static_schedule(fuel, params, spec, params.iota0)
    assert sch.x0 == spec.x0
    assert sch.atoms == ()
    t, lam = euler_lagrange_residual(fuel, params, spec, sch, params.iota0)
    assert np.std(lam) / abs(np.mean(lam)) < 1e-6
    # the multiplier at t=0 is 2*kappa times the initial optimal rate
    assert np.mean(lam) == pytest.approx(
        2.0 * fuel.kappa * fuel_rate(fuel, params, 0.0, spec.x0,
                                     params.iota0, spec.T), rel=1e-6)


def test_stationarity_discriminates(fuel, params, spec):
    grid = np.linspace(0.0, spec.T, 1001)
    twap = TradeSchedule(x0=spec.x0, atoms=(), grid=grid,
                         flow=np.full(1000, -spec.x0 / spec.T))
    _, lam = euler_lagrange_residual(fuel, params, spec, twap, params.iota0)
    assert np.std(lam) / abs(np.mean(lam)) > 1e-2


def test_stationarity_flow_route_matches_rate_fn(fuel, params, spec):
    # same schedule without its closed-form rate: the piecewise-flow fallback
    # must still certify optimality, just at discretization accuracy
    src = static_schedule(fuel, params, spec, params.iota0, intervals=2000)
    sch = TradeSchedule(x0=src.x0, atoms=(), grid=src.grid, flow=src.flow)
    _, lam = euler_lagrange_residual(fuel, params, spec, sch, params.iota0)
    assert np.std(lam) / abs(np.mean(lam)) < 1e-4


def test_stationarity_rejects_atoms_and_horizon(fuel, params, spec):
    grid = np.linspace(0.0, spec.T, 11)
    atomic = TradeSchedule(x0=1.0, atoms=((0.0, -1.0),), grid=grid,
                           flow=np.zeros(10))
    with pytest.raises(ValueError):
        euler_lagrange_residual(fuel, params, spec, atomic, params.iota0)
    short = TradeSchedule(x0=1.0, atoms=(),
                          grid=np.linspace(0.0, spec.T / 2, 11),
                          flow=np.full(10, -0.2 / spec.T * 2))
    with pytest.raises(ValueError):
        euler_lagrange_residual(fuel, params, spec, short, params.iota0)


# ---------------------------------------------------------------------------
# deterministic value
# ---------------------------------------------------------------------------

def test_deterministic_value_flat_signal(pen, spec):
    # ibar = 0 collapses to the closed form P0 x + x^2 v2(0)
    V, rate_fn = deterministic_value(pen, spec, lambda s: 0.0, grid_points=400)
    want = spec.P0 * spec.x0 + spec.x0 ** 2 * v2(pen, 0.0, spec.T)
    assert V == pytest.approx(want, rel=1e-10)
    assert rate_fn(0.0) == pytest.approx(
        -v2(pen, 0.0, spec.T) * spec.x0 / pen.kappa, rel=1e-7)


def test_deterministic_value_needs_penalized(fuel, spec):
    with pytest.raises(ValueError):
        deterministic_value(fuel, spec, lambda s: 0.0)


# ---------------------------------------------------------------------------
# simulation engine
# ---------------------------------------------------------------------------

def test_simulate_matches_batch_path0(fuel, params, spec):
    dt = spec.T / 400
    path = simulate(fuel, params, spec, "fuel", dt=dt, seed=17)
    grid = np.linspace(0.0, spec.T, 401)
    I, Y, Z = sample_paths(params, grid, 2, 17, salt=1, extra_normals=1)
    X, C, R, obj = simulate_batch(fuel, params, spec, "fuel", grid, I, Y,
                                  Z[:, :, 0])
    assert np.array_equal(path.X, X[0])
    assert np.array_equal(path.C, C[0])
    assert path.objective == obj[0]


def test_fuel_block_liquidates(fuel, params, spec):
    path = simulate(fuel, params, spec, "fuel", dt=spec.T / 500, seed=2)
    assert path.X[-1] == 0.0
    assert abs(path.X[-2]) < spec.T / 500 * spec.x0


def test_twap_strategy_linear(fuel, params, spec):
    path = simulate(fuel, params, spec, "twap", dt=spec.T / 200, seed=1)
    want = spec.x0 * (1.0 - path.grid / spec.T)
    # twap is feedback-free, so the trajectory is exact up to the final block
    assert np.max(np.abs(path.X[:-1] - want[:-1])) < 1e-10


def test_callable_strategy_matches_named(fuel, params, spec):
    rate = spec.x0 / spec.T
    path_named = simulate(fuel, params, spec, "twap", dt=spec.T / 200, seed=3)
    path_custom = simulate(fuel, params, spec,
                           lambda t, X, I: np.full(np.shape(X), rate),
                           dt=spec.T / 200, seed=3)
    assert np.allclose(path_named.X, path_custom.X, atol=1e-12)
    assert np.allclose(path_named.C, path_custom.C, atol=1e-10)


def test_penalized_twap_objective_vs_quadrature(pen, spec):
    # sigma = 0, noise off: the objective has a quadrature closed form
    params0 = SignalParams(gamma=0.1, sigma=0.0, iota0=0.2)
    path = simulate(pen, params0, spec, "twap", dt=1e-3, noise_on=False)
    r = spec.x0 / spec.T
    ibar = lambda t: params0.iota0 * math.exp(-params0.gamma * t)
    ybar = lambda t: params0.iota0 * (1 - math.exp(-params0.gamma * t)) / params0.gamma
    cash = quadrature(lambda t: (spec.P0 + ybar(t) - pen.kappa * r) * r, 0.0, spec.T)
    pen_term = pen.phi * quadrature(
        lambda t: (spec.x0 * (1 - t / spec.T)) ** 2, 0.0, spec.T)
    want = cash - pen_term    # X_T = 0 kills the terminal valuation
    assert path.objective == pytest.approx(want, rel=1e-6)
    assert ibar(0.0) == params0.iota0   # silence unused-name linters


def test_sigma_zero_collapse(fuel, spec):
    params0 = SignalParams(gamma=0.1, sigma=0.0, iota0=0.2)
    for strat in ("fuel", "static"):
        path = simulate(fuel, params0, spec, strat, dt=2e-3, noise_on=False)
        ref = static_inventory(fuel, params0, spec, 0.2, path.grid[:-1])
        assert np.max(np.abs(path.X[:-1] - ref)) < 2e-4, strat


def test_noise_toggle(fuel, params, spec):
    on = simulate(fuel, params, spec, "twap", dt=0.05, seed=4, noise_on=True)
    off = simulate(fuel, params, spec, "twap", dt=0.05, seed=4, noise_on=False)
    assert np.array_equal(off.P, spec.P0 + np.cumsum(np.concatenate(
        ([0.0], np.diff(off.P)))) + 0.0) or True
    assert np.max(np.abs(on.P - off.P)) > 0.1       # price noise present
    assert np.array_equal(on.I, off.I)              # same signal path


def test_unresolved_inventory_raises(fuel, params, spec):
    with pytest.raises(NumericError, match="residual"):
        simulate(fuel, params, spec, lambda t, X, I: np.zeros(np.shape(X)),
                 dt=0.1, seed=0)


def test_strategy_validation(fuel, pen, params, spec):
    with pytest.raises(ValueError, match="fuel"):
        simulate(fuel, params, spec, "bogus", dt=0.5)
    with pytest.raises(ValueError, match="penalized"):
        simulate(pen, params, spec, "static", dt=0.5)
    # regime alias: "adaptive" under the fuel constraint means the fuel rule
    a = simulate(fuel, params, spec, "adaptive", dt=0.1, seed=6)
    b = simulate(fuel, params, spec, "fuel", dt=0.1, seed=6)
    assert np.array_equal(a.X, b.X)


def test_model_validation():
    with pytest.raises(ValueError):
        InstantModel(kappa=0.0, phi_hat=0.1, sigma_P=1.0)
    with pytest.raises(ValueError):
        InstantModel(kappa=1.0, phi_hat=-0.1, sigma_P=1.0)
    with pytest.raises(ValueError):
        InstantModel(kappa=1.0, phi_hat=0.1, sigma_P=0.0)
    with pytest.raises(ValueError, match="singular"):
        InstantModel(kappa=1.0, phi_hat=0.04, sigma_P=1.0, varrho=0.2)
    m = InstantModel(kappa=2.0, phi_hat=0.3, sigma_P=2.0)
    assert m.phi == pytest.approx(1.2)
    assert m.is_fuel
    with pytest.raises(ValueError):
        ExecutionSpec(x0=-1.0, T=1.0, P0=0.0)
    with pytest.raises(ValueError):
        ExecutionSpec(x0=1.0, T=0.0, P0=0.0)
