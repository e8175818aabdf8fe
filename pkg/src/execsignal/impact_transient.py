"""Transient-impact regime: exponentially decaying price impact with block
trades, the optimal static schedule in closed form, pathwise revenue
accounting, and the re-optimizing multi-update strategy.

A trade of (signed) size dx moves the impact state D by kappa*rho*dx and D
relaxes as dD = -rho*D dt between trades.  A block executes at the average
of its pre- and post-trade impacted price, i.e. at P + D + kappa*rho*dx/2.
Selling trades are negative throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import sexp, sexp1
from .oracles import quadrature
from .schedule import TradeSchedule
from .signal import SignalParams, SignalPath

# Stream salt for this regime (montecarlo shares it with the reports).
SALT_TRANSIENT = 2

# Test hook: when True the fast quadratic-form kernel deliberately uses a
# mis-normalized resilience kernel (rho * e^{-tau} instead of e^{-rho tau}).
# The validation suite flips it to prove the kernel/execution equivalence
# check has teeth.  Never enable outside that check.
_MISPRINTED_KERNEL = False


@dataclass(frozen=True)
class TransientModel:
    """Impact scale kappa and resilience rate rho, both strictly positive."""
    kappa: float
    rho: float

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError("TransientModel.kappa must be finite and > 0")
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise ValueError("TransientModel.rho must be finite and > 0")


# ---------------------------------------------------------------------------
# optimal static schedule
# ---------------------------------------------------------------------------
#
# The deterministic schedule maximizing expected revenue satisfies the
# first-order condition  pbar(t) + kappa*rho * int e^{-rho|t-s|} dX_s = const
# on [0, L], pbar being the conditional mean price.  Applying
# (rho^2 - d^2/dt^2) shows the interior rate is alpha + iota * w(s) with
#   w(s) = -[s*sexp(gamma*s) + (gamma/rho^2) e^{-gamma*s}] / (2*kappa),
# leaving three unknowns (the two boundary blocks and the multiplier-linked
# alpha) fixed by a 3x3 linear system: the liquidation constraint and the
# first-order condition evaluated at both endpoints.  Everything is linear
# in (x, iota), so unit bases are solved once per horizon and cached.

def _omega(kappa: float, rho: float, gamma: float, u):
    """int_0^u w(s) ds, the unit-signal inventory tilt; gamma -> 0 exact."""
    u = np.asarray(u, dtype=float)
    out = (u * u * sexp1(gamma * u)
           - (gamma / (rho * rho)) * u * sexp(gamma * u)) / (2.0 * kappa)
    return out if out.ndim else float(out)


@lru_cache(maxsize=512)
def _piece_basis(kappa: float, rho: float, gamma: float, L: float):
    """Unit-inventory and unit-signal solutions (block0, blockT, alpha).

    The x-basis is the classical block/constant/block pattern; the
    iota-basis carries the signal response.  Endpoint integrals of the
    signal rate are assembled by adaptive quadrature, which keeps every
    parameter corner (gamma = 0, rho = gamma, short horizons) exact
    without case analysis.
    """
    q = math.exp(-rho * L)
    s_rho = L * sexp(rho * L)
    s_gam = L * sexp(gamma * L)

    def w(s: float) -> float:
        return -(s * sexp(gamma * s)
                 + (gamma / (rho * rho)) * math.exp(-gamma * s)) / (2.0 * kappa)

    w0 = _omega(kappa, rho, gamma, L)
    w_fwd = quadrature(lambda s: math.exp(-rho * s) * w(s), 0.0, L,
                       abs_tol=1e-13, rel_tol=1e-12)
    w_bwd = quadrature(lambda s: math.exp(-rho * (L - s)) * w(s), 0.0, L,
                       abs_tol=1e-13, rel_tol=1e-12)
    m = np.array([
        [1.0, 1.0, L],
        [kappa * rho, kappa * rho * q, kappa * rho * s_rho - 2.0 * kappa],
        [kappa * rho * q, kappa * rho, kappa * rho * s_rho - 2.0 * kappa]])
    basis_x = np.linalg.solve(m, np.array([-1.0, 0.0, 0.0]))
    basis_i = np.linalg.solve(m, np.array(
        [-w0, -kappa * rho * w_fwd, -s_gam - kappa * rho * w_bwd]))
    return (float(basis_x[0]), float(basis_x[1]), float(basis_x[2])), \
           (float(basis_i[0]), float(basis_i[1]), float(basis_i[2]))


def _xstar_u(model: TransientModel, gamma: float, x: float, iota: float,
             horizon: float, u):
    """Interior inventory of the optimal static schedule, in elapsed time u.

    Valid on [0, horizon]; u = 0 gives the post-initial-block value and
    u = horizon the pre-terminal-block value (the open-interval limits).
    """
    u = np.asarray(u, dtype=float)
    bx, bi = _piece_basis(model.kappa, model.rho, gamma, horizon)
    block0 = x * bx[0] + iota * bi[0]
    alpha = x * bx[2] + iota * bi[2]
    out = x + block0 + alpha * u + iota * _omega(model.kappa, model.rho, gamma, u)
    return out if out.ndim else float(out)


def static_schedule(model: TransientModel, params: SignalParams, iota: float,
                    x: float, s: float, T: float,
                    intervals: int = 1000) -> TradeSchedule:
    """Expected-revenue-maximizing deterministic liquidation of x over [s, T],
    conditioned on the signal value iota observed at time s.

    The solution trades an initial block at s, a terminal block at T, and an
    absolutely continuous part in between whose cell flows are taken as exact
    inventory differences of the closed form, so the schedule liquidates to
    machine precision.  With iota = 0 it reduces to the classical
    block/constant/block pattern with blocks x / (2 + rho*(T-s)).
    """
    if not (math.isfinite(x) and math.isfinite(iota)):
        raise ValueError("x and iota must be finite")
    if not (0.0 <= s < T):
        raise ValueError("need 0 <= s < T")
    if intervals < 1:
        raise ValueError("intervals must be >= 1")
    L = T - s
    grid = s + np.linspace(0.0, L, intervals + 1)
    vals = np.asarray(_xstar_u(model, params.gamma, x, iota, L, grid - s))
    atoms = ((float(s), float(vals[0] - x)), (float(T), float(-vals[-1])))
    flow = np.diff(vals) / np.diff(grid)
    return TradeSchedule(x0=x, atoms=atoms, grid=grid, flow=flow)


def multi_update_schedule(model: TransientModel, params: SignalParams,
                          n_updates: int, x0: float, T: float,
                          path: SignalPath,
                          intervals: int = 1000) -> TradeSchedule:
    """Re-optimizing schedule: at each update time j*T/n the remaining
    inventory is re-liquidated optimally given the signal observed there.

    Update times must be nodes of the path grid.  intervals is rounded up
    to a multiple of n_updates so pieces tile the cell grid exactly;
    n_updates = 1 reproduces static_schedule(s=0) bit for bit.
    """
    if n_updates < 1:
        raise ValueError("n_updates must be >= 1")
    if x0 < 0 or not math.isfinite(x0):
        raise ValueError("x0 must be finite and >= 0")
    q, r = divmod(int(intervals), n_updates)
    per = q + (1 if r else 0)
    m = per * n_updates
    grid = np.linspace(0.0, T, m + 1)
    flow = np.empty(m)
    atoms = []
    x = x0
    for j in range(n_updates):
        s = grid[j * per]
        iota_j = float(path.I[_grid_index(path.times, s)])
        sub = grid[j * per:(j + 1) * per + 1]
        vals = np.asarray(_xstar_u(model, params.gamma, x, iota_j, T - s,
                                   sub - s))
        atoms.append((float(s), float(vals[0] - x)))
        flow[j * per:(j + 1) * per] = np.diff(vals) / np.diff(sub)
        x = float(vals[-1])
    atoms.append((float(T), -x))
    return TradeSchedule(x0=x0, atoms=tuple(atoms), grid=grid, flow=flow)


def _grid_index(times: np.ndarray, t: float) -> int:
    """Index of t in times, or ValueError if t is not a grid node."""
    k = int(np.searchsorted(times, t))
    tol = 1e-9 * max(1.0, abs(float(times[-1])))
    for cand in (k, k - 1, k + 1):
        if 0 <= cand < len(times) and abs(float(times[cand]) - t) <= tol:
            return cand
    raise ValueError(f"time {t!r} is not a node of the path grid")


# ---------------------------------------------------------------------------
# revenue accounting
# ---------------------------------------------------------------------------

def _unaffected_prices(path: SignalPath, idx: np.ndarray, P0: float) -> np.ndarray:
    p = P0 + path.Y[idx]
    if path.price_noise is not None:
        p = p + path.price_noise[idx]
    return p


def _match_trades(schedule: TradeSchedule, path: SignalPath):
    times, sizes = schedule.trade_points()
    idx = np.empty(len(times), dtype=int)
    for j, t in enumerate(times):
        idx[j] = _grid_index(path.times, float(t))
    return times, sizes, idx


def kernel_quadratic_form(times: np.ndarray, sizes: np.ndarray,
                          rho: float) -> float:
    """(1/2) dx' K dx for the resilience kernel K_ij = e^{-rho|t_i - t_j|}.

    Evaluated by the O(m) decayed-state recursion E_i = sum_{j<i} dx_j
    e^{-rho(t_i - t_j)}, accumulating dx_i (E_i + dx_i / 2).  The impact
    cost of a schedule is kappa * rho times this.
    """
    times = np.asarray(times, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    scale, decay_rate = (rho, 1.0) if _MISPRINTED_KERNEL else (1.0, rho)
    state = 0.0
    prev = 0.0
    total = 0.0
    for t, dx in zip(times, sizes):
        state *= math.exp(-decay_rate * (t - prev))
        total += dx * (state + 0.5 * dx)
        state += dx
        prev = t
    return scale * total


def kernel_quadratic_form_batch(times: np.ndarray, sizes: np.ndarray,
                                rho: float) -> np.ndarray:
    """kernel_quadratic_form for a (B, m) batch of size rows on shared times."""
    times = np.asarray(times, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    scale, decay_rate = (rho, 1.0) if _MISPRINTED_KERNEL else (1.0, rho)
    B, m = sizes.shape
    decay = np.exp(-decay_rate * np.diff(times, prepend=times[0]))
    state = np.zeros(B)
    total = np.zeros(B)
    for i in range(m):
        state *= decay[i]
        dx = sizes[:, i]
        total += dx * (state + 0.5 * dx)
        state += dx
    return scale * total


def revenue(model: TransientModel, schedule: TradeSchedule, path: SignalPath,
            P0: float = 0.0) -> float:
    """Realized sale revenue of the schedule along one signal path.

    Equals -sum dx_i * Pbar(t_i) minus the impact cost kappa*rho times the
    kernel quadratic form; every trade time must be a node of the path grid
    (no interpolation is attempted).  The block-by-block execution route in
    execution_revenue must agree with this to rounding; the validation suite
    checks that identity.
    """
    times, sizes, idx = _match_trades(schedule, path)
    pbar = _unaffected_prices(path, idx, P0)
    qf = kernel_quadratic_form(times, sizes, model.rho)
    return float(-(sizes @ pbar) - model.kappa * model.rho * qf)


def execution_revenue(model: TransientModel, schedule: TradeSchedule,
                      path: SignalPath, P0: float = 0.0) -> float:
    """Independent revenue oracle: walk the path grid cell by cell, relax the
    impact state through each cell, and execute every trade at its average
    impacted price P + D + kappa*rho*dx/2.
    """
    times, sizes, idx = _match_trades(schedule, path)
    trade_at = dict(zip(idx.tolist(), sizes.tolist()))
    pbar_all = _unaffected_prices(path, np.arange(len(path.times)), P0)
    D = 0.0
    rev = 0.0
    for k in range(len(path.times)):
        if k > 0:
            D *= math.exp(-model.rho * float(path.times[k] - path.times[k - 1]))
        dx = trade_at.get(k)
        if dx is not None:
            price = pbar_all[k] + D + 0.5 * model.kappa * model.rho * dx
            rev -= dx * price
            D += model.kappa * model.rho * dx
    return float(rev)


def impacted_price(model: TransientModel, schedule: TradeSchedule,
                   path: SignalPath, t, P0: float = 0.0):
    """Displayed price P0 + Y(t) [+ noise] + D(t) with D driven by the trades
    strictly before t (a block at t itself has not yet printed)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    times, sizes = schedule.trade_points()
    base_idx = np.array([_grid_index(path.times, float(s)) for s in t])
    out = _unaffected_prices(path, base_idx, P0).astype(float)
    for j, tj in enumerate(t):
        mask = times < tj - 1e-15 * max(1.0, abs(tj))
        if np.any(mask):
            out[j] += model.kappa * model.rho * float(
                np.sum(sizes[mask] * np.exp(-model.rho * (tj - times[mask]))))
    return out if out.shape != (1,) else float(out[0])