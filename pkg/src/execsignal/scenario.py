"""Scenario configuration: INI parsing with strict key checking, defaults,
and the canonical fingerprint stamped into every CSV the tools emit.

A scenario fully determines the market model, the execution problem, and
the discretization; together with a seed it pins every simulation byte.
"""
from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, replace
from typing import Optional, Union

from .errors import ConfigError
from .impact_instant import ExecutionSpec, InstantModel
from .impact_transient import TransientModel
from .signal import SignalParams

REGIMES = ("instantaneous-fuel", "instantaneous-penalized", "transient")

# section -> key -> (type, default); None defaults are regime-dependent
_SCHEMA = {
    "scenario": {"regime": (str, "instantaneous-fuel"),
                 "updates": (int, 2)},
    "signal": {"gamma": (float, 0.1), "sigma": (float, 0.1),
               "iota0": (float, 0.2)},
    "impact": {"kappa": (float, 0.5), "phi_hat": (float, 0.1),
               "sigma_P": (float, 1.0), "varrho": (float, 0.5),
               "rho": (float, 1.0)},
    "execution": {"x0": (float, 10.0), "T": (float, 10.0),
                  "P0": (float, 10.0), "c0": (float, 0.0)},
    "grid": {"steps": (int, 10000), "transient_intervals": (int, 2000)},
    "montecarlo": {"paths": (int, 1000)},
}

# keys that only make sense in some regimes; anything else is accepted
# everywhere it appears in the schema
_REGIME_ONLY = {
    "varrho": ("instantaneous-penalized",),
    "rho": ("transient",),
    "phi_hat": ("instantaneous-fuel", "instantaneous-penalized"),
    "updates": ("transient",),
}


@dataclass(frozen=True)
class Scenario:
    """Resolved configuration: model objects plus discretization knobs."""
    regime: str
    params: SignalParams
    spec: ExecutionSpec
    model: Union[InstantModel, TransientModel]
    sigma_P: float
    steps: int
    transient_intervals: int
    paths: int
    updates: int

    @property
    def is_transient(self) -> bool:
        return self.regime == "transient"


def _parse_ini(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#", ";"))
    cp.optionxform = str    # keys are case-sensitive; typos must not alias
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config is not valid INI: {exc}") from exc
    out = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            out[(section, key)] = raw
    return out


def _convert(section: str, key: str, raw: str, typ):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            val = float(raw)
            if not math.isfinite(val):
                raise ValueError("not finite")
            return val
        return str(raw).strip()
    except ValueError as exc:
        raise ConfigError(
            f"invalid value for {key} in [{section}]: {raw!r}") from exc


def parse_scenario(text: str = "") -> Scenario:
    """Build a Scenario from INI text; empty text yields the defaults.

    Unknown sections or keys, non-numeric values, keys that do not apply to
    the configured regime, and parameter values rejected by the model types
    all raise ConfigError naming the offending key.
    """
    raw = _parse_ini(text)
    vals = {}
    for section, keys in _SCHEMA.items():
        for key, (typ, default) in keys.items():
            if (section, key) in raw:
                vals[key] = _convert(section, key, raw[(section, key)], typ)
            else:
                vals[key] = default

    regime = vals["regime"]
    if regime not in REGIMES:
        raise ConfigError(
            f"invalid value for regime in [scenario]: {regime!r}; "
            f"expected one of {REGIMES}")
    for key, allowed in _REGIME_ONLY.items():
        section = next(s for s, ks in _SCHEMA.items() if key in ks)
        if (section, key) in raw and regime not in allowed:
            raise ConfigError(
                f"key {key!r} in [{section}] does not apply to regime {regime!r}")

    try:
        params = SignalParams(gamma=vals["gamma"], sigma=vals["sigma"],
                              iota0=vals["iota0"])
        spec = ExecutionSpec(x0=vals["x0"], T=vals["T"], P0=vals["P0"],
                             c0=vals["c0"])
        if regime == "transient":
            model = TransientModel(kappa=vals["kappa"], rho=vals["rho"])
        elif regime == "instantaneous-penalized":
            model = InstantModel(kappa=vals["kappa"], phi_hat=vals["phi_hat"],
                                 sigma_P=vals["sigma_P"], varrho=vals["varrho"])
        else:
            model = InstantModel(kappa=vals["kappa"], phi_hat=vals["phi_hat"],
                                 sigma_P=vals["sigma_P"])
    except ValueError as exc:
        # model types validate with messages naming the field
        raise ConfigError(str(exc)) from exc

    for key in ("steps", "transient_intervals", "paths", "updates"):
        if vals[key] < 1:
            raise ConfigError(f"{key} must be >= 1, got {vals[key]}")
    if vals["steps"] < 2:
        raise ConfigError(f"steps must be >= 2, got {vals['steps']}")

    return Scenario(regime=regime, params=params, spec=spec, model=model,
                    sigma_P=vals["sigma_P"], steps=vals["steps"],
                    transient_intervals=vals["transient_intervals"],
                    paths=vals["paths"], updates=vals["updates"])


def load_scenario(path: Optional[str]) -> Scenario:
    """Read a scenario file (None means the built-in defaults)."""
    if path is None:
        return parse_scenario("")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_scenario(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def canonical_text(sc: Scenario) -> str:
    """Deterministic full serialization of a resolved scenario.

    Two configs that resolve to the same parameters share this text (and
    therefore the fingerprint), regardless of formatting or omitted
    defaults in the source file.
    """
    buf = io.StringIO()
    model = sc.model
    lines = [
        ("scenario", "regime", sc.regime),
        ("signal", "gamma", sc.params.gamma),
        ("signal", "sigma", sc.params.sigma),
        ("signal", "iota0", sc.params.iota0),
        ("impact", "kappa", model.kappa),
        ("execution", "x0", sc.spec.x0),
        ("execution", "T", sc.spec.T),
        ("execution", "P0", sc.spec.P0),
        ("execution", "c0", sc.spec.c0),
        ("grid", "steps", sc.steps),
        ("montecarlo", "paths", sc.paths),
    ]
    if sc.is_transient:
        lines += [("impact", "rho", model.rho),
                  ("impact", "sigma_P", sc.sigma_P),
                  ("grid", "transient_intervals", sc.transient_intervals),
                  ("scenario", "updates", sc.updates)]
    else:
        lines += [("impact", "phi_hat", model.phi_hat),
                  ("impact", "sigma_P", model.sigma_P)]
        if model.varrho is not None:
            lines.append(("impact", "varrho", model.varrho))
    for section, key, value in sorted(lines):
        if isinstance(value, float):
            buf.write(f"{section}.{key}={value!r}\n")
        else:
            buf.write(f"{section}.{key}={value}\n")
    return buf.getvalue()


def fingerprint(sc: Scenario) -> str:
    """Short content hash identifying the resolved scenario."""
    return hashlib.sha256(canonical_text(sc).encode("utf-8")).hexdigest()[:16]


def with_overrides(sc: Scenario, paths: Optional[int] = None,
                   dt: Optional[float] = None) -> Scenario:
    """Apply command-line overrides on top of a parsed scenario."""
    out = sc
    if paths is not None:
        if paths < 1:
            raise ConfigError(f"paths must be >= 1, got {paths}")
        out = replace(out, paths=paths)
    if dt is not None:
        if not (dt > 0 and math.isfinite(dt)):
            raise ConfigError(f"dt must be positive and finite, got {dt}")
        n = int(round(out.spec.T / dt))
        out = replace(out, steps=max(2, n), transient_intervals=max(1, n))
    return out