"""Optimal trade execution with a mean-reverting predictive signal.

The library covers two market-impact regimes (instantaneous quadratic cost
and exponentially decaying block impact), static and adaptively re-optimized
strategies in each, exact path sampling for the signal, and the Monte Carlo
machinery to compare strategies on common random numbers.  Regime-specific
internals live in :mod:`execsignal.impact_instant` and
:mod:`execsignal.impact_transient`; this namespace re-exports the pieces a
typical study needs.
"""

__version__ = "0.1.0"

from .errors import ConfigError, NumericError
from .signal import SignalParams, SignalPath, sample_paths, simulate_path
from .schedule import TradeSchedule
from .impact_instant import (ExecutionSpec, InstantModel, SimPath, simulate,
                             simulate_batch, static_inventory)
from .impact_transient import TransientModel, multi_update_schedule, revenue
from .montecarlo import (ComparisonEstimate, RevenueEstimate, compare,
                         estimate, sweep)
from .scenario import (Scenario, fingerprint, load_scenario, parse_scenario,
                       with_overrides)
from .validate import run_checks, validate

__all__ = [
    "__version__",
    "ConfigError", "NumericError",
    "SignalParams", "SignalPath", "sample_paths", "simulate_path",
    "TradeSchedule",
    "ExecutionSpec", "InstantModel", "SimPath", "simulate", "simulate_batch",
    "static_inventory",
    "TransientModel", "multi_update_schedule", "revenue",
    "ComparisonEstimate", "RevenueEstimate", "compare", "estimate", "sweep",
    "Scenario", "fingerprint", "load_scenario", "parse_scenario",
    "with_overrides",
    "run_checks", "validate",
]
