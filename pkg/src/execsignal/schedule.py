"""Trade schedules: block trades plus a piecewise-constant flow on a grid.

A TradeSchedule is the common currency between the two impact regimes: the
instantaneous module certifies optimality conditions on it, the transient
module prices it through the decay kernel.  Inventory is left-continuous:
the block at time t executes at t, so X(t) is the pre-block inventory and
X(t+) the post-block one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

_NET_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class TradeSchedule:
    """Deterministic or realized trading trajectory.

    Fields
    ------
    x0 : float
        Inventory at time 0 (before any trade).
    atoms : tuple of (time, size)
        Block trades; size is the signed inventory change (selling < 0).
    grid : ndarray
        Interval boundaries for the flow, nondecreasing, grid[0] = start.
    flow : ndarray
        Inventory change per unit time on each interval (selling < 0);
        len(flow) = len(grid) - 1.
    rate_fn : callable, optional
        Exact continuous flow t -> dX/dt when the schedule came from a
        closed form; metadata for residual checks, not used in pricing.
    """
    x0: float
    atoms: Tuple[Tuple[float, float], ...]
    grid: np.ndarray
    flow: np.ndarray
    rate_fn: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        flow = np.asarray(self.flow, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "flow", flow)
        if grid.ndim != 1 or len(grid) < 2:
            raise ValueError("TradeSchedule.grid needs at least 2 boundaries")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("TradeSchedule.grid must be strictly increasing")
        if len(flow) != len(grid) - 1:
            raise ValueError("TradeSchedule.flow must have len(grid)-1 entries")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(flow))):
            raise ValueError("TradeSchedule entries must be finite")
        for t, size in self.atoms:
            if not (np.isfinite(t) and np.isfinite(size)):
                raise ValueError("TradeSchedule atoms must be finite")
        # Admissibility: finite total variation is automatic here; the
        # terminal condition X(T+) = 0 is enforced up to tolerance.
        net = self.x0 + self.total_traded()
        scale = max(1.0, abs(self.x0), self.total_variation())
        if abs(net) > _NET_TOL * scale:
            raise ValueError(
                f"TradeSchedule must liquidate exactly: residual {net:.3e} after the horizon")

    def total_traded(self) -> float:
        return float(sum(s for _, s in self.atoms) + np.sum(self.flow * np.diff(self.grid)))

    def total_variation(self) -> float:
        return float(sum(abs(s) for _, s in self.atoms)
                     + np.sum(np.abs(self.flow) * np.diff(self.grid)))

    def end_time(self) -> float:
        t_atoms = max((t for t, _ in self.atoms), default=self.grid[-1])
        return max(float(self.grid[-1]), t_atoms)

    def inventory(self, t) -> np.ndarray:
        """Left-continuous inventory X(t): blocks strictly before t plus flow up to t."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full(t.shape, self.x0)
        for ta, size in self.atoms:
            out += np.where(t > ta, size, 0.0)
        # integrated flow up to t
        cut = np.clip(np.searchsorted(self.grid, t, side="left"), 1, len(self.grid) - 1)
        cum = np.concatenate(([0.0], np.cumsum(self.flow * np.diff(self.grid))))
        partial = cum[cut - 1] + self.flow[cut - 1] * np.clip(t - self.grid[cut - 1], 0.0,
                                                              np.diff(self.grid)[cut - 1])
        return out + partial

    def trade_points(self):
        """Discretize to point trades: atoms kept exactly, flow binned at midpoints.

        Returns (times, sizes) sorted by time; coincident times are merged
        with atom mass and bin mass added together.
        """
        mids = 0.5 * (self.grid[:-1] + self.grid[1:])
        bin_sizes = self.flow * np.diff(self.grid)
        times = np.concatenate([mids, [t for t, _ in self.atoms]])
        sizes = np.concatenate([bin_sizes, [s for _, s in self.atoms]])
        order = np.argsort(times, kind="stable")
        times, sizes = times[order], sizes[order]
        keep_t, keep_s = [], []
        for t, s in zip(times, sizes):
            if keep_t and t == keep_t[-1]:
                keep_s[-1] += s
            else:
                keep_t.append(t)
                keep_s.append(s)
        return np.asarray(keep_t), np.asarray(keep_s)
