"""Monte Carlo estimation of strategy performance in both impact regimes.

Paths are keyed by (seed, path index, regime salt) through counter-based
streams, so estimates are independent of batch size, thread count, and
evaluation order.  Comparisons default to common random numbers: every
strategy sees the same sampled signal and price noise, which removes the
shared path variance from the gap.  An independent-streams mode keeps the
estimates unpaired instead (side B draws from a shifted salt).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError
from .impact_instant import (ExecutionSpec, InstantModel, SALT_INSTANT,
                             simulate_batch)
from .impact_transient import (SALT_TRANSIENT, TransientModel, _omega,
                               _piece_basis, kernel_quadratic_form_batch)
from .signal import SignalParams, sample_paths

# salt shift that separates the two sides of an independent (non-CRN) run
INDEPENDENT_SALT_SHIFT = 1000

_THREADS_ENV = "EXEC_SIGNAL_THREADS"


@dataclass(frozen=True)
class RevenueEstimate:
    """Sample mean/stderr of a strategy's objective over n_paths paths."""
    mean: float
    stderr: float
    n_paths: int
    seed: int
    regime: str
    strategy: str

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValueError("need at least 2 paths for a standard error")


@dataclass(frozen=True)
class ComparisonEstimate:
    """Gap statistics for strategy_b minus strategy_a.

    Under CRN the gap is estimated pathwise; otherwise the two means are
    independent and the stderrs add in quadrature.
    """
    gap_mean: float
    gap_stderr: float
    mean_a: float
    mean_b: float
    n_paths: int
    seed: int
    strategy_a: str
    strategy_b: str
    crn: bool = True


def thread_count(requested: Optional[int] = None) -> int:
    """Worker count: requested, capped by the EXEC_SIGNAL_THREADS env var."""
    cap = os.environ.get(_THREADS_ENV)
    if cap is not None:
        try:
            cap_val = int(cap)
        except ValueError:
            raise ConfigError(f"{_THREADS_ENV} must be an integer, got {cap!r}")
        if cap_val < 1:
            raise ConfigError(f"{_THREADS_ENV} must be >= 1, got {cap_val}")
    else:
        cap_val = None
    n = requested if requested is not None else min(4, os.cpu_count() or 1)
    if cap_val is not None:
        n = min(n, cap_val)
    return max(1, n)


def _batches(n_paths: int, batch_size: int):
    out = []
    start = 0
    while start < n_paths:
        count = min(batch_size, n_paths - start)
        out.append((start, count))
        start += count
    return out


def _map_batches(worker: Callable, batches, threads: int):
    """Apply worker to each (start, count), results in batch order."""
    if threads <= 1 or len(batches) <= 1:
        return [worker(b) for b in batches]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, batches))


# ---------------------------------------------------------------------------
# instantaneous regime
# ---------------------------------------------------------------------------

def instant_objectives(model: InstantModel, params: SignalParams,
                       spec: ExecutionSpec, strategies: Sequence,
                       n_paths: int, seed: int, steps: int = 2000,
                       noise_on: bool = True, salt_offset: int = 0,
                       batch_size: int = 250,
                       threads: Optional[int] = None) -> np.ndarray:
    """Pathwise objectives, shape (len(strategies), n_paths).

    All strategies are evaluated on the same sampled paths (CRN), and path i
    is the path simulate() would produce for the same seed and grid.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    grid = np.linspace(0.0, spec.T, steps + 1)
    salt = SALT_INSTANT + salt_offset

    def worker(batch):
        start, count = batch
        I, Y, Z = sample_paths(params, grid, count, seed, salt=salt,
                               extra_normals=1, first_index=start)
        out = np.empty((len(strategies), count))
        for j, strat in enumerate(strategies):
            _, _, _, obj = simulate_batch(model, params, spec, strat, grid,
                                          I, Y, Z[:, :, 0], noise_on=noise_on)
            out[j] = obj
        return out

    parts = _map_batches(worker, _batches(n_paths, batch_size),
                         thread_count(threads))
    return np.concatenate(parts, axis=1)


# ---------------------------------------------------------------------------
# transient regime
# ---------------------------------------------------------------------------

def _transient_trade_layout(m: int, n_updates: int):
    """Column indices of trades on the refined (2m+1)-point grid.

    Trades are the n_updates re-optimization blocks at piece starts, one
    flow trade per cell at its midpoint, and the terminal block: n + m + 1
    columns in time order.  Returns (refined_indices, atom_columns).
    """
    per = m // n_updates
    idx = []
    atom_cols = []
    for j in range(n_updates):
        atom_cols.append(len(idx))
        idx.append(2 * j * per)                       # block at piece start
        idx.extend(2 * c + 1 for c in range(j * per, (j + 1) * per))
    atom_cols.append(len(idx))
    idx.append(2 * m)                                 # terminal block
    return np.asarray(idx, dtype=int), np.asarray(atom_cols, dtype=int)


def _transient_trades(model: TransientModel, params: SignalParams,
                      spec: ExecutionSpec, n_updates: int, m: int,
                      I_fine: np.ndarray):
    """Vectorized multi-update schedules for a batch of signal paths.

    I_fine is (B, 2m+1) on the refined grid; m must be a multiple of
    n_updates.  Returns (times, sizes) with shared trade times (n+m+1,) and
    per-path signed sizes (B, n+m+1); equivalent to building
    multi_update_schedule per path (a test pins that equivalence).
    """
    if m % n_updates:
        raise ValueError("m must be a multiple of n_updates")
    B = I_fine.shape[0]
    per = m // n_updates
    T = spec.T
    nodes = np.linspace(0.0, T, m + 1)
    idx, atom_cols = _transient_trade_layout(m, n_updates)
    fine = np.linspace(0.0, T, 2 * m + 1)
    times = fine[idx]
    sizes = np.empty((B, len(idx)))
    x = np.full(B, float(spec.x0))
    for j in range(n_updates):
        s = nodes[j * per]
        L = T - s
        u = nodes[j * per:(j + 1) * per + 1] - s
        bx, bi = _piece_basis(model.kappa, model.rho, params.gamma, L)
        iota = I_fine[:, 2 * j * per]
        om = _omega(model.kappa, model.rho, params.gamma, u)
        vals = (x[:, None] * (1.0 + bx[0] + bx[2] * u[None, :])
                + iota[:, None] * (bi[0] + bi[2] * u[None, :] + om[None, :]))
        col = atom_cols[j]
        sizes[:, col] = vals[:, 0] - x
        sizes[:, col + 1:col + 1 + per] = np.diff(vals, axis=1)
        x = vals[:, -1]
    sizes[:, atom_cols[-1]] = -x
    return times, sizes


def transient_revenues(model: TransientModel, params: SignalParams,
                       spec: ExecutionSpec, update_counts: Sequence[int],
                       n_paths: int, seed: int, intervals: int = 2000,
                       sigma_price: float = 0.0, noise_on: bool = True,
                       salt_offset: int = 0, batch_size: int = 250,
                       threads: Optional[int] = None) -> np.ndarray:
    """Pathwise revenues, shape (len(update_counts), n_paths), CRN across
    update counts.

    intervals is rounded up so every requested update count tiles the cell
    grid exactly (all counts share one refined grid, keeping the comparison
    pathwise-aligned).  sigma_price scales the unpredictable price noise;
    it contributes zero mean and is skipped when noise_on is False.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    counts = [int(n) for n in update_counts]
    if any(n < 1 for n in counts):
        raise ValueError("update counts must be >= 1")
    m = int(intervals)
    step = math.lcm(*counts)
    m = ((m + step - 1) // step) * step
    fine = np.linspace(0.0, spec.T, 2 * m + 1)
    h = fine[1] - fine[0]
    salt = SALT_TRANSIENT + salt_offset
    use_noise = noise_on and sigma_price > 0.0

    def worker(batch):
        start, count = batch
        I, Y, Z = sample_paths(params, fine, count, seed, salt=salt,
                               extra_normals=1 if use_noise else 0,
                               first_index=start)
        if use_noise:
            W = np.empty((count, len(fine)))
            W[:, 0] = 0.0
            np.cumsum(Z[:, :, 0], axis=1, out=W[:, 1:])
            pbar_all = spec.P0 + Y + sigma_price * math.sqrt(h) * W
        else:
            pbar_all = spec.P0 + Y
        out = np.empty((len(counts), count))
        for j, n_up in enumerate(counts):
            times, sizes = _transient_trades(model, params, spec, n_up, m, I)
            tcols = _transient_trade_layout(m, n_up)[0]
            qf = kernel_quadratic_form_batch(times, sizes, model.rho)
            out[j] = (-np.einsum("bi,bi->b", sizes, pbar_all[:, tcols])
                      - model.kappa * model.rho * qf)
        return out

    parts = _map_batches(worker, _batches(n_paths, batch_size),
                         thread_count(threads))
    return np.concatenate(parts, axis=1)


# ---------------------------------------------------------------------------
# estimates and comparisons
# ---------------------------------------------------------------------------

Model = Union[InstantModel, TransientModel]


def _strategy_label(model: Model, strategy) -> str:
    if isinstance(model, TransientModel):
        if strategy == "static":
            return "static"
        return f"updates={int(strategy)}"
    return strategy if isinstance(strategy, str) else getattr(
        strategy, "__name__", "custom")


def _update_count(strategy) -> int:
    if strategy == "static":
        return 1
    n = int(strategy)
    if n < 1:
        raise ValueError("transient strategy must be 'static' or an update count >= 1")
    return n


def _pathwise(model: Model, params, spec, strategies, n_paths, seed,
              salt_offset=0, **kw) -> np.ndarray:
    if isinstance(model, TransientModel):
        counts = [_update_count(s) for s in strategies]
        return transient_revenues(model, params, spec, counts, n_paths, seed,
                                  salt_offset=salt_offset, **kw)
    return instant_objectives(model, params, spec, strategies, n_paths, seed,
                              salt_offset=salt_offset, **kw)


def _regime_name(model: Model) -> str:
    if isinstance(model, TransientModel):
        return "transient"
    return "instantaneous-fuel" if model.is_fuel else "instantaneous-penalized"


def estimate(model: Model, params: SignalParams, spec: ExecutionSpec,
             strategy, n_paths: int, seed: int, **kw) -> RevenueEstimate:
    """Mean objective of one strategy over n_paths Monte Carlo paths."""
    if n_paths < 2:
        raise ValueError("need n_paths >= 2")
    vals = _pathwise(model, params, spec, [strategy], n_paths, seed, **kw)[0]
    return RevenueEstimate(
        mean=float(np.mean(vals)),
        stderr=float(np.std(vals, ddof=1) / math.sqrt(n_paths)),
        n_paths=n_paths, seed=seed, regime=_regime_name(model),
        strategy=_strategy_label(model, strategy))


def compare(model: Model, params: SignalParams, spec: ExecutionSpec,
            strategy_a, strategy_b, n_paths: int, seed: int,
            crn: bool = True, **kw) -> ComparisonEstimate:
    """Estimate the objective gap of strategy_b over strategy_a.

    With crn=True (default) both strategies run on identical paths and the
    gap is a paired estimate; with crn=False side B uses streams salted by
    INDEPENDENT_SALT_SHIFT and the stderrs combine in quadrature.
    """
    if n_paths < 2:
        raise ValueError("need n_paths >= 2")
    if crn:
        vals = _pathwise(model, params, spec, [strategy_a, strategy_b],
                         n_paths, seed, **kw)
        a, b = vals[0], vals[1]
        gap = b - a
        gap_mean = float(np.mean(gap))
        gap_stderr = float(np.std(gap, ddof=1) / math.sqrt(n_paths))
    else:
        a = _pathwise(model, params, spec, [strategy_a], n_paths, seed, **kw)[0]
        b = _pathwise(model, params, spec, [strategy_b], n_paths, seed,
                      salt_offset=INDEPENDENT_SALT_SHIFT, **kw)[0]
        gap_mean = float(np.mean(b) - np.mean(a))
        gap_stderr = float(math.hypot(np.std(a, ddof=1), np.std(b, ddof=1))
                           / math.sqrt(n_paths))
    return ComparisonEstimate(
        gap_mean=gap_mean, gap_stderr=gap_stderr,
        mean_a=float(np.mean(a)), mean_b=float(np.mean(b)),
        n_paths=n_paths, seed=seed,
        strategy_a=_strategy_label(model, strategy_a),
        strategy_b=_strategy_label(model, strategy_b), crn=crn)


def sweep(factory: Callable, values: Sequence, strategy_a, strategy_b,
          n_paths: int, seed: int, crn: bool = True, **kw):
    """compare() across a parameter sweep.

    factory(value) must return (model, params, spec) for that sweep point;
    every point uses the same seed so the sweep axis is the only thing that
    changes.  Returns a list of (value, ComparisonEstimate).
    """
    out = []
    for v in values:
        model, params, spec = factory(v)
        out.append((v, compare(model, params, spec, strategy_a, strategy_b,
                               n_paths, seed, crn=crn, **kw)))
    return out