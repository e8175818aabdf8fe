"""Command line front end.

Exit codes: 0 success, 1 validation failure, 2 configuration or usage
error, 3 numerical failure during a run.
"""
from __future__ import annotations

import math
import os
import sys
from dataclasses import replace
from typing import Optional

import click
import numpy as np

from . import __version__
from .errors import ConfigError, NumericError
from .impact_instant import simulate
from .impact_transient import SALT_TRANSIENT, multi_update_schedule
from .montecarlo import compare
from .reports import (FIGURES, _SWEEP_HEADER, _sweep_rows, figure_bundle,
                      format_float, write_table)
from .scenario import Scenario, fingerprint, load_scenario, with_overrides
from .signal import SignalPath, sample_paths
from .validate import LEVELS
from .validate import validate as _run_checks


@click.group()
@click.version_option(version=__version__, prog_name="execsignal")
def cli():
    """Optimal execution with a mean-reverting predictive signal."""


_CONFIG = click.option("--config", "config_path", type=click.Path(), default=None,
                       help="INI scenario file; omitted keys use the documented defaults.")
_SEED = click.option("--seed", type=int, default=0, show_default=True,
                     help="Base seed; path i uses an independent substream.")


def _load(config_path: Optional[str]) -> Scenario:
    return load_scenario(config_path)


def _instant_rows(sc: Scenario, strategy, seed: int, dt, noise_on: bool):
    strat = strategy or ("adaptive" if not sc.model.is_fuel else "fuel")
    try:
        path = simulate(sc.model, sc.params, sc.spec, strat,
                        dt=dt if dt else sc.spec.T / sc.steps,
                        seed=seed, noise_on=noise_on)
    except ValueError as exc:       # unknown strategy names arrive here
        raise ConfigError(str(exc))
    rows = zip(path.grid, path.I, path.P, path.X, path.C, path.rate)
    return strat, float(path.objective), rows


def _transient_rows(sc: Scenario, strategy, seed: int, dt, noise_on: bool):
    if strategy is None:
        n_up = sc.updates
    elif str(strategy).lower() == "static":
        n_up = 1
    else:
        try:
            n_up = int(strategy)
        except ValueError:
            raise ConfigError(
                f"transient strategy must be 'static' or an update count, got {strategy!r}")
        if n_up < 1:
            raise ConfigError("update count must be >= 1")
    T = sc.spec.T
    m = max(1, int(round(T / dt))) if dt else sc.transient_intervals
    per = (m + n_up - 1) // n_up
    m = per * n_up
    fine = np.linspace(0.0, T, 2 * m + 1)
    h = fine[1] - fine[0]
    I, Y, Z = sample_paths(sc.params, fine, 1, seed, salt=SALT_TRANSIENT,
                           extra_normals=1)
    noise = None
    if noise_on and sc.sigma_P > 0.0:
        W = np.concatenate(([0.0], np.cumsum(Z[0, :, 0])))
        noise = sc.sigma_P * math.sqrt(h) * W
    path = SignalPath(times=fine, I=I[0], Y=Y[0], price_noise=noise)
    schedule = multi_update_schedule(sc.model, sc.params, n_up, sc.spec.x0,
                                     T, path, intervals=m)
    times, sizes = schedule.trade_points()
    pbar = sc.spec.P0 + path.Y + (noise if noise is not None else 0.0)
    t_idx = np.searchsorted(fine, times)

    # decayed-impact walk, trade by trade; same execution convention the
    # pricing routines use (block fills at its average impacted price)
    kr = sc.model.kappa * sc.model.rho
    cash = np.empty(len(times))
    D = 0.0
    prev = 0.0
    for j, (t, dx) in enumerate(zip(times, sizes)):
        D *= math.exp(-sc.model.rho * (t - prev))
        cash[j] = -dx * (pbar[t_idx[j]] + D + 0.5 * kr * dx)
        D += kr * dx
        prev = t
    nodes = fine[::2]
    last = np.searchsorted(times, nodes, side="right") - 1
    cum_x = sc.spec.x0 + np.cumsum(sizes)
    cum_c = sc.spec.c0 + np.cumsum(cash)
    X = np.where(last >= 0, cum_x[last], sc.spec.x0)
    C = np.where(last >= 0, cum_c[last], sc.spec.c0)
    rate = np.concatenate((schedule.flow, [0.0]))   # cell flow, 0 after T
    label = "static" if n_up == 1 else f"updates={n_up}"
    rows = zip(nodes, path.I[::2], pbar[::2], X, C, rate)
    return label, float(cum_c[-1]), rows


@cli.command("simulate")
@_CONFIG
@_SEED
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="CSV file to write the simulated path to.")
@click.option("--dt", type=float, default=None,
              help="Override the step size (instantaneous) or cell size (transient).")
@click.option("--strategy", default=None,
              help="Instantaneous: fuel|static|twap|adaptive. Transient: static or an update count.")
@click.option("--noise/--no-noise", "noise_on", default=True, show_default=True,
              help="Include the unpredictable price component.")
def simulate_cmd(config_path, seed, out_path, dt, strategy, noise_on):
    """Simulate one execution path and write its time series."""
    sc = _load(config_path)
    if dt is not None and not (dt > 0 and math.isfinite(dt)):
        raise ConfigError("dt must be positive and finite")
    if sc.is_transient:
        label, objective, rows = _transient_rows(sc, strategy, seed, dt, noise_on)
    else:
        label, objective, rows = _instant_rows(sc, strategy, seed, dt, noise_on)
    comments = [f"execsignal={__version__} scenario={fingerprint(sc)} "
                f"seed={seed} strategy={label}",
                f"objective={format_float(objective)}"]
    write_table(out_path, comments, ["t", "I", "P", "X", "C", "rate"], rows)
    click.echo(f"wrote {out_path} (objective {objective:.6f})")
    return 0


@cli.command()
@click.argument("name", type=click.Choice(FIGURES))
@_CONFIG
@_SEED
@click.option("--out", "out_dir", type=click.Path(), default=".",
              show_default=True, help="Directory for the data files.")
@click.option("--paths", type=int, default=None,
              help="Override the scenario's Monte Carlo path count.")
@click.option("--threads", type=int, default=None,
              help="Worker threads for Monte Carlo batches.")
def figure(name, config_path, seed, out_dir, paths, threads):
    """Compute the data files behind one simulation figure."""
    sc = with_overrides(_load(config_path), paths=paths)
    os.makedirs(out_dir, exist_ok=True)
    written = figure_bundle(name, sc, seed, out_dir, threads=threads)
    for p in written:
        click.echo(f"wrote {p}")
    return 0


@cli.command()
@click.option("--level", type=click.Choice(LEVELS), default="fast",
              show_default=True, help="fast: seconds; full: adds Monte Carlo checks.")
def validate(level):
    """Run the self-check suite and report a PASS/FAIL table."""
    ok, report = _run_checks(level)
    click.echo(report)
    return 0 if ok else 1


@cli.command()
@_CONFIG
@_SEED
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--axis", type=click.Choice(["T", "sigma"]), default="T",
              show_default=True, help="Sweep the horizon or the signal volatility.")
@click.option("--values", required=True,
              help="Comma-separated sweep values, e.g. 5,10,20.")
@click.option("--paths", type=int, default=None)
@click.option("--threads", type=int, default=None)
def sweep(config_path, seed, out_path, axis, values, paths, threads):
    """Static-vs-adaptive objective gap across a parameter sweep."""
    sc = with_overrides(_load(config_path), paths=paths)
    if sc.is_transient:
        raise ConfigError("sweep supports the instantaneous regimes; "
                          "use 'figure fig5' for transient update counts")
    try:
        vals = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"could not parse sweep values {values!r}")
    if not vals:
        raise ConfigError("need at least one sweep value")
    a, b = ("static", "fuel") if sc.model.is_fuel else ("twap", "adaptive")
    results = []
    for v in vals:
        if axis == "T":
            if v <= 0:
                raise ConfigError("horizon values must be positive")
            spec, params = replace(sc.spec, T=v), sc.params
            steps = max(1000, int(round(200 * v)))
        else:
            if v < 0:
                raise ConfigError("volatility values must be nonnegative")
            spec, params = sc.spec, replace(sc.params, sigma=v)
            steps = max(1000, int(round(200 * sc.spec.T)))
        results.append((v, compare(sc.model, params, spec, a, b, sc.paths,
                                   seed, steps=steps, threads=threads)))
    comments = [f"execsignal={__version__} scenario={fingerprint(sc)} "
                f"seed={seed} axis={axis}"]
    write_table(out_path, comments, _SWEEP_HEADER, _sweep_rows(results))
    click.echo(f"wrote {out_path}")
    return 0


def main():
    try:
        rv = cli.main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        sys.exit(2)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except NumericError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    sys.exit(int(rv) if isinstance(rv, int) else 0)


if __name__ == "__main__":
    main()
