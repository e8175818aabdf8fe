"""Exact simulation of the mean-reverting signal I and its running integral.

The pair (I_t, Y_t) with Y = integral of I is jointly Gaussian, so a path can
be advanced over any step size without discretization bias.  One-step
moments, with x = gamma*dt and the stable kernels from ``numerics``:

    E[I']        = I exp(-x)
    E[dY]        = I dt sexp(x)
    Var(I')      = sigma^2 dt sexp(2x)
    Cov(I', dY)  = sigma^2 dt^2 sxyc(x)
    Var(dY)      = sigma^2 dt^3 vyc(x)

The kernels reduce to the Brownian limits (dt^2/2, dt^3/3) continuously as
gamma -> 0, which is what the gamma-continuity tests pin down.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numerics import sexp, sxyc, vyc


@dataclass(frozen=True)
class SignalParams:
    """Mean-reversion rate, volatility, and initial level of the signal."""
    gamma: float
    sigma: float
    iota0: float

    def __post_init__(self):
        for name in ("gamma", "sigma", "iota0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"SignalParams.{name} must be finite")
        if self.gamma < 0:
            raise ValueError("SignalParams.gamma must be >= 0")
        if self.sigma < 0:
            raise ValueError("SignalParams.sigma must be >= 0")


@dataclass(frozen=True)
class OUState:
    """Signal level I and integrated signal Y at time t."""
    t: float
    I: float
    Y: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("OUState.t must be >= 0")


def conditional_mean(params: SignalParams, iota: float, tau: float) -> float:
    """E[I_{t+tau} | I_t = iota] = iota * exp(-gamma * tau)."""
    if not (math.isfinite(iota) and math.isfinite(tau)):
        raise ValueError("conditional_mean needs finite iota and tau")
    if tau < 0:
        raise ValueError("conditional_mean needs tau >= 0")
    return iota * math.exp(-params.gamma * tau)


def joint_moments(params: SignalParams, iota, dt):
    """One-step mean and covariance of (I_{t+dt}, Y_{t+dt} - Y_t) given I_t.

    Vectorized in ``iota``; dt is a positive scalar.  Returns
    (mean_I, mean_dY, var_I, cov, var_dY).
    """
    x = params.gamma * dt
    s2 = params.sigma * params.sigma
    mean_i = iota * math.exp(-x)
    mean_dy = iota * (dt * sexp(x))
    var_i = s2 * dt * sexp(2.0 * x)
    cov = s2 * dt * dt * sxyc(x)
    var_dy = s2 * dt ** 3 * vyc(x)
    return mean_i, mean_dy, var_i, cov, var_dy


def step(params: SignalParams, state: OUState, dt: float, noise) -> OUState:
    """Advance (I, Y) by dt with an exact joint Gaussian draw.

    Parameters
    ----------
    params : SignalParams
    state : OUState
    dt : float
        Step size, > 0.
    noise : pair of floats
        Independent standard-normal draws; (0, 0) yields the conditional mean.

    Returns
    -------
    OUState at time t + dt.
    """
    if dt <= 0:
        raise ValueError("step needs dt > 0")
    z1, z2 = float(noise[0]), float(noise[1])
    mean_i, mean_dy, var_i, cov, var_dy = joint_moments(params, state.I, dt)
    if params.sigma == 0.0:
        return OUState(t=state.t + dt, I=mean_i, Y=state.Y + mean_dy)
    sd_i = math.sqrt(var_i)
    c1 = cov / sd_i
    # Schur complement can round to a tiny negative; clamp before sqrt.
    c2 = math.sqrt(max(var_dy - cov * cov / var_i, 0.0))
    new_i = mean_i + sd_i * z1
    new_y = state.Y + mean_dy + c1 * z1 + c2 * z2
    return OUState(t=state.t + dt, I=new_i, Y=new_y)


def stream(seed: int, path_index: int, salt: int = 0) -> np.random.Generator:
    """Counter-based RNG stream for one Monte Carlo path.

    Keyed by (master seed, path index, salt) so path i's noise never depends
    on how many other paths are drawn or in which order. The salt separates
    consumers (e.g. strategy regimes) that must not share noise.
    """
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=(seed, path_index, salt))))


def _check_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 1:
        raise ValueError("grid must be a non-empty 1-d time sequence")
    if grid[0] != 0.0:
        raise ValueError("grid must start at 0")
    if len(grid) > 1 and not np.all(np.diff(grid) > 0.0):
        raise ValueError("grid must be strictly increasing")
    if not np.all(np.isfinite(grid)):
        raise ValueError("grid must be finite")
    return grid


def simulate_path(params: SignalParams, grid, seed: int, path_index: int = 0):
    """Sample one exact path of (I, Y) on the grid.

    Deterministic in (params, grid, seed, path_index): the path draws from
    ``stream(seed, path_index)``, consuming one standard-normal pair per step.

    Returns a list of OUState, one per grid point.
    """
    grid = _check_grid(grid)
    rng = stream(seed, path_index)
    noise = rng.standard_normal(size=(len(grid) - 1, 2))
    out = [OUState(t=float(grid[0]), I=params.iota0, Y=0.0)]
    for k in range(len(grid) - 1):
        out.append(step(params, out[-1], float(grid[k + 1] - grid[k]), noise[k]))
    return out


def sample_paths(params: SignalParams, grid, n_paths: int, seed: int,
                 salt: int = 0, extra_normals: int = 0, first_index: int = 0):
    """Vectorized exact sampling of n_paths signal paths on a shared grid.

    Path i uses stream (seed, first_index + i, salt); each stream yields one
    row of (n_steps, 2 + extra_normals) standard normals in a fixed layout,
    so results do not depend on batching or evaluation order.  The trailing
    ``extra_normals`` columns are returned untouched for other consumers
    (the price Brownian in the simulators).

    Returns (I, Y, Z_extra) with I, Y of shape (n_paths, len(grid)) and
    Z_extra of shape (n_paths, n_steps, extra_normals).
    """
    grid = _check_grid(grid)
    n_steps = len(grid) - 1
    width = 2 + extra_normals
    z = np.empty((n_paths, n_steps, width))
    for i in range(n_paths):
        z[i] = stream(seed, first_index + i, salt).standard_normal(size=(n_steps, width))

    # the transition is linear in the current signal, so the per-step moment
    # scalars (unit-signal means plus the noise loadings) depend only on dt
    # and can be shared across steps of equal size
    cache = {}

    def _coeffs(dt: float):
        got = cache.get(dt)
        if got is None:
            m1, m2, var_i, cov, var_dy = joint_moments(params, 1.0, dt)
            if params.sigma == 0.0:
                got = (m1, m2, 0.0, 0.0, 0.0)
            else:
                sd_i = math.sqrt(var_i)
                c1 = cov / sd_i
                c2 = math.sqrt(max(var_dy - cov * cov / var_i, 0.0))
                got = (m1, m2, sd_i, c1, c2)
            cache[dt] = got
        return got

    i_arr = np.empty((n_paths, n_steps + 1))
    y_arr = np.empty((n_paths, n_steps + 1))
    i_arr[:, 0] = params.iota0
    y_arr[:, 0] = 0.0
    for k in range(n_steps):
        m1, m2, sd_i, c1, c2 = _coeffs(float(grid[k + 1] - grid[k]))
        i_arr[:, k + 1] = m1 * i_arr[:, k] + sd_i * z[:, k, 0]
        y_arr[:, k + 1] = (y_arr[:, k] + m2 * i_arr[:, k]
                           + c1 * z[:, k, 0] + c2 * z[:, k, 1])
    return i_arr, y_arr, z[:, :, 2:]


@dataclass(frozen=True, eq=False)
class SignalPath:
    """One realized signal path on a fixed grid, as consumed by the
    transient-impact pricing routines.

    price_noise, when present, is the unpredictable price component
    sigma_P * W(t) already scaled; None means noise-off pricing.
    """
    times: np.ndarray
    I: np.ndarray
    Y: np.ndarray
    price_noise: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "I", np.asarray(self.I, dtype=float))
        object.__setattr__(self, "Y", np.asarray(self.Y, dtype=float))
        _check_grid(times)
        if self.I.shape != times.shape or self.Y.shape != times.shape:
            raise ValueError("SignalPath arrays must share the grid shape")
        if self.price_noise is not None:
            pn = np.asarray(self.price_noise, dtype=float)
            object.__setattr__(self, "price_noise", pn)
            if pn.shape != times.shape:
                raise ValueError("SignalPath.price_noise must share the grid shape")
