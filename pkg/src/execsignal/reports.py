"""Figure bundles: the delimited data files behind each simulation figure.

Every bundle is plain CSV with one comment line carrying the package
version, the scenario fingerprint, and the seed, so any file can be traced
back to (config, seed, version) and regenerated byte for byte.  Rendering
to images is a separate component that consumes these files; nothing here
draws anything.
"""
from __future__ import annotations

import math
from dataclasses import replace
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .impact_instant import (InstantModel, simulate_batch, static_inventory)
from .impact_transient import TransientModel, _omega, _piece_basis
from .montecarlo import (compare, sweep, transient_revenues,
                         _transient_trades, _batches, thread_count,
                         _map_batches)
from .scenario import Scenario, fingerprint
from .signal import SignalParams, sample_paths
from .impact_instant import SALT_INSTANT
from .impact_transient import SALT_TRANSIENT

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5")

# sweep axes for fig4 and overlay values for fig1/fig2
T_SWEEP = tuple(float(v) for v in range(5, 55, 5))
SIGMA_SWEEP = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3)
IOTA_CURVES = (0.5, 0.0, -0.5)
SIGMA_P_CURVES = (1.0, 5.0, 10.0)
UPDATE_COUNTS = (1, 2, 3)
RAW_PATH_CAP = 20
RAW_PATH_CAP_TRANSIENT = 10


def format_float(x: float) -> str:
    """Fixed 17-significant-digit scientific form used in all CSV output."""
    return f"{float(x):.16e}"


def write_table(path: str, comments: Sequence[str], header: Sequence[str],
                rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for cell in row:
                if isinstance(cell, str):
                    cells.append(cell)
                elif isinstance(cell, (int, np.integer)):
                    cells.append(str(int(cell)))
                else:
                    cells.append(format_float(cell))
            fh.write(",".join(cells) + "\n")


def _stamp(sc: Scenario, seed: int, figure: str) -> List[str]:
    return [f"execsignal={__version__} figure={figure} "
            f"scenario={fingerprint(sc)} seed={seed}"]


def _fuel_model(sc: Scenario) -> InstantModel:
    """Figures 1-4 are defined in the fuel-constrained instantaneous regime;
    they reuse the scenario's parameters but force that regime."""
    m = sc.model
    if isinstance(m, InstantModel):
        return m if m.is_fuel else InstantModel(kappa=m.kappa, phi_hat=m.phi_hat,
                                                sigma_P=m.sigma_P)
    return InstantModel(kappa=m.kappa, phi_hat=0.1, sigma_P=sc.sigma_P)


def _transient_model(sc: Scenario) -> TransientModel:
    m = sc.model
    if isinstance(m, TransientModel):
        return m
    return TransientModel(kappa=m.kappa, rho=1.0)


def _thin_indices(n_nodes: int, cap: int = 1001) -> np.ndarray:
    if n_nodes <= cap:
        return np.arange(n_nodes)
    return np.unique(np.linspace(0, n_nodes - 1, cap).round().astype(int))


# ---------------------------------------------------------------------------
# figure 1 and 2: deterministic optimal inventory curves
# ---------------------------------------------------------------------------

def fig1(sc: Scenario, seed: int, out_dir: str) -> List[str]:
    """Optimal deterministic inventory for three initial signal values."""
    model = _fuel_model(sc)
    t = np.linspace(0.0, sc.spec.T, 1001)
    cols = [t]
    header = ["t"]
    for iota in IOTA_CURVES:
        cols.append(np.asarray(static_inventory(model, sc.params, sc.spec,
                                                iota, t)))
        header.append(f"X_iota={iota:g}")
    path = f"{out_dir}/fig1.csv"
    write_table(path, _stamp(sc, seed, "fig1"), header, zip(*cols))
    return [path]


def fig2(sc: Scenario, seed: int, out_dir: str) -> List[str]:
    """Optimal deterministic inventory as price volatility scales the
    running inventory penalty."""
    base = _fuel_model(sc)
    t = np.linspace(0.0, sc.spec.T, 1001)
    cols = [t]
    header = ["t"]
    for sig_p in SIGMA_P_CURVES:
        model = InstantModel(kappa=base.kappa, phi_hat=base.phi_hat,
                             sigma_P=sig_p)
        cols.append(np.asarray(static_inventory(model, sc.params, sc.spec,
                                                sc.params.iota0, t)))
        header.append(f"X_sigmaP={sig_p:g}")
    path = f"{out_dir}/fig2.csv"
    write_table(path, _stamp(sc, seed, "fig2"), header, zip(*cols))
    return [path]


# ---------------------------------------------------------------------------
# figure 3: adaptive inventory fan (instantaneous, fuel)
# ---------------------------------------------------------------------------

def fig3(sc: Scenario, seed: int, out_dir: str,
         batch_size: int = 250, threads: Optional[int] = None) -> List[str]:
    model = _fuel_model(sc)
    steps = sc.steps
    grid = np.linspace(0.0, sc.spec.T, steps + 1)
    keep = _thin_indices(steps + 1)

    def worker(batch):
        start, count = batch
        I, Y, Z = sample_paths(sc.params, grid, count, seed,
                               salt=SALT_INSTANT, extra_normals=1,
                               first_index=start)
        X, _, _, _ = simulate_batch(model, sc.params, sc.spec, "fuel", grid,
                                    I, Y, Z[:, :, 0])
        return X[:, keep]

    parts = _map_batches(worker, _batches(sc.paths, batch_size),
                         thread_count(threads))
    X = np.concatenate(parts, axis=0)
    q05, q50, q95 = np.quantile(X, [0.05, 0.5, 0.95], axis=0)
    static = np.asarray(static_inventory(model, sc.params, sc.spec,
                                         sc.params.iota0, grid[keep]))
    n_raw = min(RAW_PATH_CAP, sc.paths)
    header = ["t", "q05", "q50", "q95", "static"] + [
        f"path_{i:02d}" for i in range(n_raw)]
    cols = [grid[keep], q05, q50, q95, static] + [X[i] for i in range(n_raw)]
    path = f"{out_dir}/fig3.csv"
    write_table(path, _stamp(sc, seed, "fig3"), header, zip(*cols))
    return [path]


# ---------------------------------------------------------------------------
# figure 4: static vs adaptive revenue sweeps (instantaneous, fuel)
# ---------------------------------------------------------------------------

def _sweep_rows(results) -> list:
    rows = []
    for value, cmp_ in results:
        rows.append([value, cmp_.mean_b, cmp_.mean_a, cmp_.gap_mean,
                     cmp_.gap_stderr, cmp_.n_paths])
    return rows


_SWEEP_HEADER = ["value", "mean_adaptive", "mean_static", "gap", "gap_stderr",
                 "n_paths"]


def fig4(sc: Scenario, seed: int, out_dir: str,
         threads: Optional[int] = None) -> List[str]:
    """Adaptive-over-static objective gap as the horizon and the signal
    volatility grow.  Both sweeps share the seed; paths are common random
    numbers within each point."""
    model = _fuel_model(sc)

    def by_horizon(T: float):
        return model, sc.params, replace(sc.spec, T=float(T))

    def by_sigma(sig: float):
        return model, replace(sc.params, sigma=float(sig)), sc.spec

    t_res = []
    for T in T_SWEEP:
        steps = max(1000, int(round(200 * T)))
        t_res.append((T, compare(*by_horizon(T), "static", "fuel", sc.paths,
                                 seed, steps=steps, threads=threads)))
    s_res = sweep(by_sigma, SIGMA_SWEEP, "static", "fuel", sc.paths, seed,
                  steps=max(1000, int(round(200 * sc.spec.T))),
                  threads=threads)
    p1 = f"{out_dir}/fig4_T_sweep.csv"
    p2 = f"{out_dir}/fig4_sigma_sweep.csv"
    write_table(p1, _stamp(sc, seed, "fig4"), _SWEEP_HEADER, _sweep_rows(t_res))
    write_table(p2, _stamp(sc, seed, "fig4"), _SWEEP_HEADER, _sweep_rows(s_res))
    return [p1, p2]


# ---------------------------------------------------------------------------
# figure 5: transient fan and update-count convergence
# ---------------------------------------------------------------------------

def _transient_inventory_nodes(model, params, spec, n_up: int, m: int,
                               I_fine: np.ndarray) -> np.ndarray:
    """Post-trade inventory at the m+1 cell nodes for a batch of paths."""
    times, sizes = _transient_trades(model, params, spec, n_up, m, I_fine)
    cum = spec.x0 + np.cumsum(sizes, axis=1)
    nodes = np.linspace(0.0, spec.T, m + 1)
    # right-continuous: trades at time <= node have happened
    pos = np.searchsorted(times, nodes + 1e-12 * max(1.0, spec.T)) - 1
    out = np.empty((I_fine.shape[0], m + 1))
    mask = pos >= 0
    out[:, mask] = cum[:, pos[mask]]
    out[:, ~mask] = spec.x0
    return out


def fig5(sc: Scenario, seed: int, out_dir: str, batch_size: int = 250,
         threads: Optional[int] = None) -> List[str]:
    model = _transient_model(sc)
    counts = UPDATE_COUNTS
    step = math.lcm(*counts)
    m = ((sc.transient_intervals + step - 1) // step) * step
    fine = np.linspace(0.0, sc.spec.T, 2 * m + 1)
    keep = _thin_indices(m + 1, cap=501)

    def worker(batch):
        start, count = batch
        I, _, _ = sample_paths(sc.params, fine, count, seed,
                               salt=SALT_TRANSIENT, first_index=start)
        return [np.asarray(_transient_inventory_nodes(model, sc.params,
                                                      sc.spec, n, m, I))[:, keep]
                for n in counts[1:]]

    parts = _map_batches(worker, _batches(sc.paths, batch_size),
                         thread_count(threads))
    fans = [np.concatenate([p[j] for p in parts], axis=0)
            for j in range(len(counts) - 1)]

    nodes = np.linspace(0.0, sc.spec.T, m + 1)[keep]
    bx, bi = _piece_basis(model.kappa, model.rho, sc.params.gamma, sc.spec.T)
    x0, i0 = sc.spec.x0, sc.params.iota0
    static_curve = (x0 * (1.0 + bx[0] + bx[2] * nodes)
                    + i0 * (bi[0] + bi[2] * nodes
                            + np.asarray(_omega(model.kappa, model.rho,
                                                sc.params.gamma, nodes))))
    static_curve[-1] = 0.0   # terminal block has executed at T

    header = ["t", "static"]
    cols = [nodes, static_curve]
    n_raw = min(RAW_PATH_CAP_TRANSIENT, sc.paths)
    for n, fan in zip(counts[1:], fans):
        q05, q50, q95 = np.quantile(fan, [0.05, 0.5, 0.95], axis=0)
        header += [f"n{n}_q05", f"n{n}_q50", f"n{n}_q95"]
        cols += [q05, q50, q95]
        header += [f"n{n}_path_{i:02d}" for i in range(n_raw)]
        cols += [fan[i] for i in range(n_raw)]
    p1 = f"{out_dir}/fig5_fan.csv"
    write_table(p1, _stamp(sc, seed, "fig5"), header, zip(*cols))

    revs = transient_revenues(model, sc.params, sc.spec, counts, sc.paths,
                              seed, intervals=sc.transient_intervals,
                              sigma_price=sc.sigma_P, batch_size=batch_size,
                              threads=threads)
    ck = list(range(100, sc.paths + 1, 100))
    if not ck or ck[-1] != sc.paths:
        ck.append(sc.paths)
    rows = []
    for k in ck:
        row = [k]
        for j in range(len(counts)):
            row.append(float(np.mean(revs[j, :k])))
        for j in range(len(counts)):
            row.append(float(np.std(revs[j, :k], ddof=1) / math.sqrt(k))
                       if k > 1 else float("nan"))
        rows.append(row)
    header2 = (["n_paths"] + [f"mean_n{n}" for n in counts]
               + [f"stderr_n{n}" for n in counts])
    p2 = f"{out_dir}/fig5_convergence.csv"
    write_table(p2, _stamp(sc, seed, "fig5"), header2, rows)
    return [p1, p2]


def figure_bundle(name: str, sc: Scenario, seed: int, out_dir: str,
                  threads: Optional[int] = None) -> List[str]:
    """Compute one figure's data files; returns the paths written."""
    if name == "fig1":
        return fig1(sc, seed, out_dir)
    if name == "fig2":
        return fig2(sc, seed, out_dir)
    if name == "fig3":
        return fig3(sc, seed, out_dir, threads=threads)
    if name == "fig4":
        return fig4(sc, seed, out_dir, threads=threads)
    if name == "fig5":
        return fig5(sc, seed, out_dir, threads=threads)
    raise ValueError(f"unknown figure {name!r}; expected one of {FIGURES}")