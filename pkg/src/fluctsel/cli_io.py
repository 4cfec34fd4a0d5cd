"""Configuration files, experiment drivers, and result bundles.

The `fluctsel` command runs one named experiment from a config file plus
command-line overrides and writes a result bundle: `manifest.json` (version,
the fully resolved config, timing), one CSV per result table, and
`summary.json` with scalar outcomes. Emission is deterministic: re-running
an experiment rewrites byte-identical CSV and summary files; only the timing
block of the manifest changes.

Config files use INI-like sections

    [model]
    kind = oscillating_optimum
    r = 1.0
    ...

or, when the file starts with "{", a JSON object with the same section names.
Unknown keys, type mismatches, and constraint violations are reported with
the offending line number.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import simpson

from . import asymptotics, env_models, floquet, no_mutation, pde_solver, rho_ode
from .errors import (ConfigError, ConvergenceError, ExtinctionError,
                     FluctselError, NumericalError)

__version__ = "0.1.0"

EXPERIMENT_TAGS = (
    "sigma0-convergence", "periodic-orbit", "floquet-sweep", "epsilon-limit",
    "moments", "example1", "example2", "fitness-compare", "refinement",
)


@dataclass
class RunConfig:
    """Fully resolved description of one experiment run."""

    model: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    experiment: str = ""
    out_dir: str = ""
    extra: dict = field(default_factory=dict)


@dataclass
class ResultBundle:
    """Everything one experiment run emits."""

    manifest: dict
    tables: dict
    summary: dict


# ---------------------------------------------------------------------------
# config schema

_FLOAT, _INT, _STR, _FLOATLIST = "float", "int", "str", "floatlist"

_SCHEMA = {
    "model": {
        "kind": _STR, "r": _FLOAT, "g": _FLOAT, "c": _FLOAT, "b": _FLOAT,
        "g_mean": _FLOAT, "g_amp": _FLOAT, "path": _STR,
    },
    "grid": {"x_lo": _FLOAT, "x_hi": _FLOAT, "nx": _INT, "dt": _FLOAT},
    "solver": {
        "eps": _FLOAT, "sigma": _FLOAT, "orbit_tol": _FLOAT,
        "max_periods": _INT, "eigen_tol": _FLOAT, "max_iters": _INT,
        "steps_per_period": _INT,
    },
    "experiment": {
        "tag": _STR, "out": _STR, "radii": _FLOATLIST, "eps_list": _FLOATLIST,
        "t_end": _FLOAT, "t_end_density": _FLOAT, "rho0": _FLOAT, "w0": _FLOAT,
        "t_star": _FLOAT, "levels": _INT, "window_lo": _FLOAT,
        "window_hi": _FLOAT, "window": _FLOAT, "points_per_unit": _INT,
        "nt": _INT,
    },
}

def _coerce(raw, want, where):
    """Coerce a raw string or JSON value to the schema type."""
    try:
        if want == _FLOAT:
            if isinstance(raw, bool):
                raise ValueError("boolean where a number is expected")
            return float(raw)
        if want == _INT:
            if isinstance(raw, bool):
                raise ValueError("boolean where an integer is expected")
            if isinstance(raw, float) and raw != int(raw):
                raise ValueError(f"{raw} is not an integer")
            return int(raw)
        if want == _STR:
            if not isinstance(raw, str):
                raise ValueError(f"expected a string, got {type(raw).__name__}")
            return raw
        if want == _FLOATLIST:
            if isinstance(raw, str):
                parts = [p for p in raw.replace(",", " ").split() if p]
                return [float(p) for p in parts]
            return [float(v) for v in raw]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown schema type {want}")


def _parse_ini_sections(text: str, origin: str):
    """INI-like parse keeping the line number of every key."""
    sections: dict[str, dict] = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].split(";", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"{origin}:{lineno}: unterminated section header")
            name = body[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError(
                    f"{origin}:{lineno}: unknown section [{name}] "
                    f"(known: {', '.join(sorted(_SCHEMA))})")
            current = sections.setdefault(name, {})
            continue
        if "=" not in body:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        if current is None:
            raise ConfigError(f"{origin}:{lineno}: key outside of any section")
        key, _, value = body.partition("=")
        key = key.strip()
        if key in current:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r}")
        current[key] = (value.strip(), lineno)
    return sections


def _validated(sections: dict, origin: str) -> RunConfig:
    """Apply the schema to parsed (value, lineno) sections."""
    cfg = RunConfig()
    for sec, entries in sections.items():
        schema = _SCHEMA[sec]
        out = {}
        for key, (raw, lineno) in entries.items():
            where = f"{origin}:{lineno}"
            if key not in schema:
                raise ConfigError(
                    f"{where}: unknown key {key!r} in [{sec}] "
                    f"(known: {', '.join(sorted(schema))})")
            out[key] = _coerce(raw, schema[key], where)
        if sec == "experiment":
            tag = out.pop("tag", None)
            if tag is not None:
                if tag not in EXPERIMENT_TAGS:
                    lineno = entries["tag"][1]
                    raise ConfigError(
                        f"{origin}:{lineno}: unknown experiment tag {tag!r}")
                cfg.experiment = tag
            cfg.out_dir = out.pop("out", cfg.out_dir)
            cfg.extra.update(out)
        else:
            getattr(cfg, sec).update(out)
    _check_constraints(cfg, sections, origin)
    return cfg


def _line_of(sections, sec, key, origin):
    entry = sections.get(sec, {}).get(key)
    return f"{origin}:{entry[1]}" if entry else origin


def _check_constraints(cfg: RunConfig, sections, origin):
    grid = cfg.grid
    if "nx" in grid and grid["nx"] < 16:
        raise ConfigError(
            f"{_line_of(sections, 'grid', 'nx', origin)}: nx must be >= 16, "
            f"got {grid['nx']}")
    if "dt" in grid and grid["dt"] <= 0:
        raise ConfigError(
            f"{_line_of(sections, 'grid', 'dt', origin)}: dt must be positive")
    if "x_lo" in grid and "x_hi" in grid and not grid["x_hi"] > grid["x_lo"]:
        raise ConfigError(
            f"{_line_of(sections, 'grid', 'x_hi', origin)}: "
            "x_hi must exceed x_lo")
    solver = cfg.solver
    if "eps" in solver and "sigma" in solver:
        raise ConfigError(
            f"{_line_of(sections, 'solver', 'sigma', origin)}: "
            "give either eps or sigma, not both")
    for key in ("eps", "sigma", "orbit_tol", "eigen_tol"):
        if key in solver and solver[key] <= 0:
            raise ConfigError(
                f"{_line_of(sections, 'solver', key, origin)}: "
                f"{key} must be positive")
    if "kind" in cfg.model and cfg.model["kind"] not in (
            "oscillating_optimum", "oscillating_pressure", "tabulated"):
        raise ConfigError(
            f"{_line_of(sections, 'model', 'kind', origin)}: unknown model kind "
            f"{cfg.model['kind']!r}")


def parse_config(path: str) -> RunConfig:
    """Read and validate a config file (INI-like sections or JSON)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
        sections = {}
        for sec, entries in data.items():
            if sec not in _SCHEMA:
                raise ConfigError(f"{path}: unknown section {sec!r}")
            if not isinstance(entries, dict):
                raise ConfigError(f"{path}: section {sec!r} must be an object")
            sections[sec] = {k: (v, 0) for k, v in entries.items()}
        return _validated(sections, path)
    return _validated(_parse_ini_sections(text, path), path)


def apply_override(cfg: RunConfig, text: str) -> None:
    """Apply one 'section.key=value' command-line override in place."""
    head, sep, value = text.partition("=")
    if not sep:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    sec, dot, key = head.strip().partition(".")
    if not dot:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    if sec not in _SCHEMA:
        raise ConfigError(f"override {text!r}: unknown section {sec!r}")
    schema = _SCHEMA[sec]
    if key not in schema:
        raise ConfigError(
            f"override {text!r}: unknown key {key!r} in [{sec}] "
            f"(known: {', '.join(sorted(schema))})")
    coerced = _coerce(value.strip(), schema[key], f"override {text!r}")
    if sec == "experiment":
        if key == "tag":
            cfg.experiment = coerced
        elif key == "out":
            cfg.out_dir = coerced
        else:
            cfg.extra[key] = coerced
    else:
        getattr(cfg, sec)[key] = coerced
    # re-check cross-key constraints on the merged config
    _check_constraints(cfg, {}, f"override {text!r}")


# ---------------------------------------------------------------------------
# building blocks

def build_model(model_cfg: dict, grid_cfg: dict) -> env_models.EnvironmentModel:
    """Construct the environment model described by a config block."""
    kind = model_cfg.get("kind")
    if kind is None:
        raise ConfigError("model block needs a 'kind'")
    if kind == "oscillating_optimum":
        return env_models.make_oscillating_optimum(
            r=model_cfg.get("r", 1.0), g=model_cfg.get("g", 1.0),
            c=model_cfg.get("c", 1.0), b=model_cfg.get("b", 2.0 * np.pi))
    if kind == "oscillating_pressure":
        g_mean = model_cfg.get("g_mean", 2.0)
        g_amp = model_cfg.get("g_amp", 0.0)
        r = model_cfg.get("r", 1.0)

        def g_fn(t, _m=g_mean, _a=g_amp):
            return _m + _a * np.cos(2.0 * np.pi * t)

        return env_models.make_oscillating_pressure(r, g_fn)
    if kind == "tabulated":
        if "path" not in model_cfg:
            raise ConfigError("tabulated model needs a 'path'")
        if "x_lo" not in grid_cfg or "x_hi" not in grid_cfg:
            raise ConfigError("tabulated model needs grid x_lo/x_hi for its nodes")
        return env_models.load_tabulated(model_cfg["path"],
                                         grid_cfg["x_lo"], grid_cfg["x_hi"])
    raise ConfigError(f"unknown model kind {kind!r}")


def _sigma_of(solver: dict) -> float:
    if "sigma" in solver:
        return float(solver["sigma"])
    eps = float(solver.get("eps", 0.05))
    return eps * eps


def build_grid(cfg: RunConfig, period: float) -> pde_solver.SimulationGrid:
    """SimulationGrid from the (defaults-resolved) grid and solver blocks."""
    g = cfg.grid
    dt = g.get("dt")
    if dt is None:
        dt = period / float(cfg.solver.get("steps_per_period", 1024))
        g["dt"] = dt
    return pde_solver.SimulationGrid(
        x_lo=g["x_lo"], x_hi=g["x_hi"], nx=g["nx"], dt=dt,
        sigma=_sigma_of(cfg.solver))


_EX1_MODEL = {"kind": "oscillating_optimum", "r": 1.0, "g": 1.0, "c": 1.0,
              "b": 2.0 * np.pi}
_EX2_MODEL = {"kind": "oscillating_pressure", "r": 1.0, "g_mean": 2.0,
              "g_amp": 1.8}
_WIDE_GRID = {"x_lo": -4.0, "x_hi": 4.0, "nx": 800}

_DEFAULTS = {
    "sigma0-convergence": {
        "model": _EX1_MODEL, "grid": dict(_WIDE_GRID, dt=0.005),
        "solver": {"eps": 0.05},
        "extra": {"t_end": 50.0, "t_end_density": 200.0, "w0": 0.05,
                  "window": 0.1}},
    "periodic-orbit": {
        "model": _EX1_MODEL, "grid": dict(_WIDE_GRID),
        "solver": {"eps": 0.05, "orbit_tol": 1e-8, "max_periods": 2000,
                   "eigen_tol": 1e-10, "steps_per_period": 2048},
        "extra": {"t_end": 30.0}},
    "floquet-sweep": {
        "model": _EX1_MODEL, "grid": {},
        "solver": {"eps": 0.05, "eigen_tol": 1e-10, "steps_per_period": 1024},
        "extra": {"radii": [2.0, 3.0, 4.0, 5.0], "points_per_unit": 100}},
    "epsilon-limit": {
        "model": _EX1_MODEL, "grid": dict(_WIDE_GRID),
        "solver": {"orbit_tol": 1e-8, "max_periods": 2000,
                   "steps_per_period": 1024},
        "extra": {"eps_list": [0.1, 0.05, 0.025], "window_lo": -1.0,
                  "window_hi": 1.0}},
    "moments": {
        "model": _EX1_MODEL, "grid": dict(_WIDE_GRID),
        "solver": {"eps": 0.05, "orbit_tol": 1e-8, "max_periods": 2000,
                   "steps_per_period": 2048},
        "extra": {"nt": 2048}},
    "example1": {
        "model": _EX1_MODEL, "grid": dict(_WIDE_GRID),
        "solver": {"eps": 0.05, "orbit_tol": 1e-8, "max_periods": 2000,
                   "steps_per_period": 2048},
        "extra": {"nt": 2048}},
    "example2": {
        "model": _EX2_MODEL, "grid": dict(_WIDE_GRID),
        "solver": {"eps": 0.05, "orbit_tol": 1e-8, "max_periods": 2000,
                   "eigen_tol": 1e-10, "steps_per_period": 2048},
        "extra": {}},
    "fitness-compare": {
        "model": _EX2_MODEL, "grid": dict(_WIDE_GRID),
        "solver": {"eps": 0.05, "orbit_tol": 1e-8, "max_periods": 2000,
                   "eigen_tol": 1e-10, "steps_per_period": 2048},
        "extra": {}},
    "refinement": {
        "model": _EX1_MODEL, "grid": {"x_lo": -3.0, "x_hi": 3.0, "nx": 149},
        "solver": {"eps": 0.05, "orbit_tol": 1e-8, "eigen_tol": 1e-10,
                   "max_periods": 2000, "steps_per_period": 500},
        "extra": {"levels": 3}},
}


def resolve_config(cfg: RunConfig) -> RunConfig:
    """Fill tag defaults under the user's settings; returns a new config."""
    if cfg.experiment not in EXPERIMENT_TAGS:
        raise ConfigError(
            f"unknown experiment tag {cfg.experiment!r} "
            f"(known: {', '.join(EXPERIMENT_TAGS)})")
    out = RunConfig(experiment=cfg.experiment, out_dir=cfg.out_dir)
    defaults = copy.deepcopy(_DEFAULTS[cfg.experiment])
    out.model = {**defaults["model"], **cfg.model}
    if "kind" in cfg.model:
        # a user-chosen kind replaces the default model wholesale
        out.model = dict(cfg.model)
    out.grid = {**defaults["grid"], **cfg.grid}
    out.solver = {**defaults["solver"], **cfg.solver}
    if "sigma" in cfg.solver:
        out.solver.pop("eps", None)
    out.extra = {**defaults["extra"], **cfg.extra}
    return out


# ---------------------------------------------------------------------------
# experiment drivers

def _gaussian(x, center, width):
    return np.exp(-((x - center) ** 2) / (2.0 * width * width)) / (
        width * np.sqrt(2.0 * np.pi))


def _x_m_of(model) -> float:
    info = model.analytic_info or {}
    if "x_m" in info:
        return float(info["x_m"])
    return env_models.locate_optimum(model, (-5.0, 5.0))


def _run_sigma0(cfg: RunConfig):
    model = build_model(cfg.model, cfg.grid)
    T = model.period
    x_m = _x_m_of(model)
    q = rho_ode.PeriodicScalarSignal.from_callable(
        T, lambda t: float(np.asarray(model.rate(t, np.array([x_m])))[0]))
    orbit = rho_ode.periodic_rho_closed_form(q)

    t_end = float(cfg.extra["t_end"])
    gaps = {}
    trajs = {}
    for label, rho0 in (("low", 0.05), ("high", 5.0)):
        times, rho = rho_ode.integrate_logistic(q, rho0, t_end, dt=T / 1024.0)
        last = times >= t_end - T - 1e-12
        gaps[label] = float(np.abs(rho[last] - orbit.evaluate(times[last])).max())
        trajs[label] = (times, rho)
    qbar = q.mean()
    q_const = rho_ode.PeriodicScalarSignal.from_callable(T, lambda t: qbar)
    const_orbit = rho_ode.periodic_rho_closed_form(q_const)
    const_gap = float(np.abs(const_orbit.samples - qbar).max())

    grid = pde_solver.SimulationGrid(
        x_lo=cfg.grid["x_lo"], x_hi=cfg.grid["x_hi"], nx=cfg.grid["nx"],
        dt=cfg.grid["dt"], sigma=0.0)
    w0 = float(cfg.extra["w0"])
    window = float(cfg.extra["window"])
    n0 = _gaussian(grid.x, x_m, w0)
    t_density = float(cfg.extra["t_end_density"])
    state, (times_d, rho_d), diag = no_mutation.simulate_sigma0(
        grid, model, n0, t_density)
    metrics = no_mutation.concentration_metrics(
        grid, state, radius=window, center=x_m)
    last = times_d >= t_density - T - 1e-12
    rho_gap_final = float(
        np.abs(rho_d[last] - orbit.evaluate(times_d[last])).max())

    times_l, rho_l = trajs["low"]
    keep = times_l >= t_end - T - 1e-12
    rows_logistic = np.column_stack([
        times_l[keep], orbit.evaluate(times_l[keep]), trajs["low"][1][keep],
        trajs["high"][1][keep]])
    stride = max(1, len(times_d) // 2048)
    rows_density = np.column_stack([
        times_d[::stride], rho_d[::stride], orbit.evaluate(times_d[::stride])])
    tables = {
        "logistic_compare": (["t", "rho_closed", "rho_from_low", "rho_from_high"],
                             rows_logistic),
        "sigma0_rho": (["t", "rho", "rho_closed"], rows_density),
    }
    summary = {
        "final_period_gap_from_low": gaps["low"],
        "final_period_gap_from_high": gaps["high"],
        "constant_rate_collapse_gap": const_gap,
        "orbit_mean": orbit.mean,
        "mass_outside_window": metrics.mass_outside,
        "variance_final": metrics.variance,
        "mean_final": metrics.mean,
        "rho_gap_final_period": rho_gap_final,
        "extinct": bool(diag["extinct"]),
    }
    return tables, summary


def _bounds_summary(grid, model, record, pair):
    """Size-band and tail-envelope checks on a recorded orbit."""
    lam = pair.lam
    d0 = float(max(np.abs(np.asarray(model.rate(t, grid.x), dtype=float)).max()
                   for t in record.times[::64]))
    T = model.period
    rho = record.rho_samples
    rho_upper = max(float(rho[0]), d0)
    lam_m = abs(lam)
    rho_lower = np.exp(-d0 * T) * np.expm1(lam_m * T) / T
    report = env_models.check_hypotheses(
        model, (grid.x_lo, grid.x_hi), lambda_hint=lam)
    tail_ok = None
    tail_margin = None
    if report.h5_delta is not None and report.h5_delta > 0:
        decay = np.sqrt(report.h5_delta / grid.sigma)
        xs = grid.x
        outside = np.abs(xs) >= report.h5_radius
        if outside.any():
            p = pair.p_snapshots
            envelope = p.max() * np.exp(-decay * (np.abs(xs[outside]) - report.h5_radius))
            worst = float((p[:, outside] / envelope[None, :]).max())
            tail_ok = bool(worst <= 1.0 + 1e-9)
            tail_margin = worst
    return {
        "rho_band_lower": float(rho_lower),
        "rho_band_upper": float(rho_upper),
        "rho_min": float(rho.min()),
        "rho_max": float(rho.max()),
        "rho_band_ok": bool(rho_lower - 1e-12 <= rho.min()
                            and rho.max() <= rho_upper + 1e-12),
        "tail_ok": tail_ok,
        "tail_worst_ratio": tail_margin,
        "confine_delta": report.h5_delta,
        "confine_radius": report.h5_radius,
    }


def _run_periodic_orbit(cfg: RunConfig):
    model = build_model(cfg.model, cfg.grid)
    grid = build_grid(cfg, model.period)
    solver = cfg.solver
    pair = floquet.principal_eigenpair(grid, model,
                                       tol=float(solver.get("eigen_tol", 1e-10)))
    summary = {"lambda": pair.lam, "eigen_iterations": pair.iterations}
    try:
        record = pde_solver.find_periodic_orbit(
            grid, model, orbit_tol=float(solver.get("orbit_tol", 1e-8)),
            max_periods=int(solver.get("max_periods", 2000)))
    except ExtinctionError as exc:
        t_end = float(cfg.extra.get("t_end", 30.0))
        n0 = pde_solver.default_orbit_guess(grid, model)
        _, (times, rho), diag = pde_solver.simulate(grid, model, n0, t_end)
        stride = max(1, len(times) // 2048)
        tables = {"rho_decay": (["t", "rho"],
                                np.column_stack([times[::stride], rho[::stride]]))}
        summary.update({
            "extinct": True,
            "message": str(exc),
            "rho_final": float(rho[-1]),
            "t_final": float(times[-1]),
        })
        return tables, summary

    eff = floquet.effective_signals(pair, model)
    # same step count: orbit and eigen snapshots share their time grid
    shape_gap = float(np.abs(
        record.snapshots / record.rho_samples[:, None] - eff.P_snapshots).max())
    mrep = asymptotics.measure_moments(record)
    summary.update({
        "extinct": False,
        "period_gap": record.period_gap,
        "periods_run": record.periods_run,
        "rho_mean": mrep.rho_mean,
        "sup_gap_density_vs_eigenprofile": shape_gap,
        "identity_residual": floquet.lambda_identity_residual(pair, eff),
    })
    summary.update(_bounds_summary(grid, model, record, pair))
    tables = {
        "orbit_rho": (["t", "rho"],
                      np.column_stack([record.times, record.rho_samples])),
    }
    return tables, summary


def _run_floquet_sweep(cfg: RunConfig):
    model = build_model(cfg.model, cfg.grid)
    radii = [float(r) for r in cfg.extra["radii"]]
    records = floquet.radius_sweep(
        model, radii, sigma=_sigma_of(cfg.solver),
        points_per_unit=int(cfg.extra.get("points_per_unit", 100)),
        steps_per_period=int(cfg.solver.get("steps_per_period", 1024)),
        tol=float(cfg.solver.get("eigen_tol", 1e-10)))
    rows = np.array([[r["R"], r["sigma"], r["lambda"], r["identity_residual"],
                      r["iterations"]] for r in records])
    lams = rows[:, 2]
    summary = {
        "lambda_nonincreasing": bool(np.all(np.diff(lams) <= 1e-9)),
        "truncation_gap_last_two": float(abs(lams[-1] - lams[-2])),
        "max_identity_residual": float(rows[:, 3].max()),
    }
    tables = {"eigenreport": (["R", "sigma", "lambda", "identity_residual",
                               "iterations"], rows)}
    return tables, summary


def _run_epsilon_limit(cfg: RunConfig):
    model = build_model(cfg.model, cfg.grid)
    T = model.period
    eps_list = [float(e) for e in cfg.extra["eps_list"]]
    steps = int(cfg.solver.get("steps_per_period", 1024))
    lo, hi = float(cfg.extra["window_lo"]), float(cfg.extra["window_hi"])
    rows = []
    for eps in eps_list:
        grid = pde_solver.SimulationGrid(
            x_lo=cfg.grid["x_lo"], x_hi=cfg.grid["x_hi"], nx=cfg.grid["nx"],
            dt=T / steps, sigma=eps * eps)
        record = pde_solver.find_periodic_orbit(
            grid, model, orbit_tol=float(cfg.solver.get("orbit_tol", 1e-8)),
            max_periods=int(cfg.solver.get("max_periods", 2000)))
        u_eps = asymptotics.hopf_cole(record.snapshots[0], grid.sigma)
        profile = asymptotics.limit_profile(model, grid.x)
        window = (grid.x >= lo) & (grid.x <= hi)
        gap = float(np.abs(u_eps[window] - profile.u_values[window]).max())
        rows.append([eps, gap])
    rows = np.array(rows)
    summary = {
        "gaps_decrease_with_eps": bool(np.all(np.diff(rows[:, 1]) < 0.0)),
        "final_gap": float(rows[-1, 1]),
        "window": [lo, hi],
    }
    return {"epsilon_gaps": (["eps", "sup_gap"], rows)}, summary


def _fit_first_harmonic(times, values, period):
    """Least-squares fit values ~ offset + amp * sin(2 pi t / period + phase)."""
    w = 2.0 * np.pi / period
    design = np.column_stack([np.sin(w * times), np.cos(w * times),
                              np.ones_like(times)])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    amp = float(np.hypot(coef[0], coef[1]))
    phase = float(np.arctan2(coef[1], coef[0]))
    return amp, phase, float(coef[2])


def _run_moments(cfg: RunConfig):
    model = build_model(cfg.model, cfg.grid)
    grid = build_grid(cfg, model.period)
    eps = np.sqrt(grid.sigma)
    record = pde_solver.find_periodic_orbit(
        grid, model, orbit_tol=float(cfg.solver.get("orbit_tol", 1e-8)),
        max_periods=int(cfg.solver.get("max_periods", 2000)))
    measured = asymptotics.measure_moments(record)
    predicted = asymptotics.predict_moments(
        model, eps, domain=(grid.x_lo, grid.x_hi),
        nt=int(cfg.extra.get("nt", 2048)))
    T = model.period
    mu_pred = predicted.mu(measured.mu.times)
    var_pred = predicted.sigma2(measured.sigma2.times)
    amp_s, ph_s, _ = _fit_first_harmonic(measured.mu.times, measured.mu.values, T)
    amp_p, ph_p, _ = _fit_first_harmonic(measured.mu.times, mu_pred, T)
    phase_err = abs((ph_s - ph_p + np.pi) % (2.0 * np.pi) - np.pi)
    var_mean_s = measured.sigma2.mean()
    var_mean_p = float(simpson(var_pred, x=measured.sigma2.times)) / T
    rows = np.column_stack([measured.mu.times, measured.mu.values, mu_pred,
                            measured.sigma2.values, var_pred,
                            record.rho_samples])
    summary = {
        "mean_amplitude_simulated": amp_s,
        "mean_amplitude_predicted": amp_p,
        "mean_amplitude_rel_err": abs(amp_s - amp_p) / abs(amp_p) if amp_p else 0.0,
        "mean_phase_err_rad": phase_err,
        "variance_mean_simulated": var_mean_s,
        "variance_mean_predicted": var_mean_p,
        "variance_rel_err": abs(var_mean_s - var_mean_p) / var_mean_p,
        "rho_mean_simulated": measured.rho_mean,
        "rho_mean_predicted": predicted.rho_mean,
        "rho_mean_gap": abs(measured.rho_mean - predicted.rho_mean),
        "eps": float(eps),
        "notes": predicted.notes,
    }
    tables = {"moments": (["t", "mu_simulated", "mu_predicted",
                           "var_simulated", "var_predicted", "rho"], rows)}
    return tables, summary


def _run_fitness_compare(cfg: RunConfig):
    model = build_model(cfg.model, cfg.grid)
    grid = build_grid(cfg, model.period)
    t_star = cfg.extra.get("t_star")
    comp = asymptotics.fitness_comparison(
        grid, model, t_star=None if t_star is None else float(t_star),
        orbit_tol=float(cfg.solver.get("orbit_tol", 1e-8)),
        max_periods=int(cfg.solver.get("max_periods", 2000)),
        eigen_tol=float(cfg.solver.get("eigen_tol", 1e-10)))
    eps = np.sqrt(grid.sigma)
    summary = {
        "t_star": comp.t_star,
        "periodic_fitness_at_t_star": comp.q_star,
        "periodic_fitness_mean": comp.q_mean,
        "frozen_fitness": comp.frozen_fitness,
        "frozen_rho": comp.frozen_rho,
        "periodic_rho_mean": comp.rho_mean_periodic,
        "periodic_variance_mean": comp.sigma2_periodic_mean,
        "frozen_variance": comp.sigma2_frozen,
        "periodic_fitness_exceeds_frozen": bool(comp.q_star > comp.frozen_fitness),
        "periodic_variance_below_frozen": bool(
            comp.sigma2_periodic_mean < comp.sigma2_frozen),
        "periodic_rho_below_frozen": bool(comp.rho_mean_periodic < comp.frozen_rho),
        "eps": float(eps),
    }
    tables = {"fitness": (["t", "q_periodic"],
                          np.column_stack([comp.times, comp.q_values]))}
    return tables, summary


def _run_refinement(cfg: RunConfig):
    model = build_model(cfg.model, cfg.grid)
    T = model.period
    levels = int(cfg.extra["levels"])
    nx0 = int(cfg.grid["nx"])
    steps0 = int(cfg.solver.get("steps_per_period", 500))
    sigma = _sigma_of(cfg.solver)
    rows = []
    for level in range(levels):
        nx = (nx0 + 1) * 2 ** level - 1
        steps = steps0 * 4 ** level
        grid = pde_solver.SimulationGrid(
            x_lo=cfg.grid["x_lo"], x_hi=cfg.grid["x_hi"], nx=nx, dt=T / steps,
            sigma=sigma)
        pair = floquet.principal_eigenpair(
            grid, model, tol=float(cfg.solver.get("eigen_tol", 1e-10)))
        record = pde_solver.find_periodic_orbit(
            grid, model, orbit_tol=float(cfg.solver.get("orbit_tol", 1e-8)),
            max_periods=int(cfg.solver.get("max_periods", 2000)))
        rho_bar = float(simpson(record.rho_samples, x=record.times)) / T
        rows.append([level, nx, steps, pair.lam, rho_bar])
    rows = np.array(rows)
    summary = {}
    if levels >= 3:
        lam, rho = rows[:, 3], rows[:, 4]
        summary["lambda_richardson_ratio"] = float(
            abs(lam[0] - lam[1]) / abs(lam[1] - lam[2]))
        summary["rho_richardson_ratio"] = float(
            abs(rho[0] - rho[1]) / abs(rho[1] - rho[2]))
    tables = {"refinement": (["level", "nx", "steps_per_period", "lambda",
                              "rho_bar"], rows)}
    return tables, summary


_DRIVERS = {
    "sigma0-convergence": _run_sigma0,
    "periodic-orbit": _run_periodic_orbit,
    "floquet-sweep": _run_floquet_sweep,
    "epsilon-limit": _run_epsilon_limit,
    "moments": _run_moments,
    "example1": _run_moments,
    "example2": _run_fitness_compare,
    "fitness-compare": _run_fitness_compare,
    "refinement": _run_refinement,
}


def run_experiment(cfg: RunConfig) -> ResultBundle:
    """Run the configured experiment; deterministic, no randomness anywhere."""
    cfg = resolve_config(cfg)
    start = time.perf_counter()
    tables, summary = _DRIVERS[cfg.experiment](cfg)
    elapsed = time.perf_counter() - start
    manifest = {
        "version": __version__,
        "config": asdict(cfg),
        "timing": {"elapsed_seconds": elapsed},
    }
    return ResultBundle(manifest=_pyify(manifest), tables=tables,
                        summary=_pyify(summary))


def config_from_manifest(manifest: dict) -> RunConfig:
    """Rebuild the RunConfig echoed in a manifest (timing is not part of it)."""
    return RunConfig(**manifest["config"])


# ---------------------------------------------------------------------------
# emission

def _pyify(obj):
    """Recursively convert numpy scalars/arrays to plain Python values."""
    if isinstance(obj, dict):
        return {k: _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_pyify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _format_cell(value) -> str:
    if isinstance(value, (int, float, np.integer, np.floating)):
        return f"{float(value):.12e}"
    return str(value)


def emit_bundle(bundle: ResultBundle, out_dir) -> list[str]:
    """Write manifest.json, summary.json, and one CSV per table.

    CSV cells are scientific notation with 13 significant digits; files are
    UTF-8 with a header line. Emission is deterministic, so re-emitting the
    same bundle rewrites byte-identical CSV and summary files. An empty
    bundle produces only the manifest.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def _write(name, text):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        written.append(path)

    _write("manifest.json", json.dumps(bundle.manifest, indent=2, sort_keys=True) + "\n")
    if bundle.summary:
        _write("summary.json",
               json.dumps(_pyify(bundle.summary), indent=2, sort_keys=True) + "\n")
    for name, (columns, rows) in bundle.tables.items():
        lines = [",".join(columns)]
        for row in np.atleast_2d(np.asarray(rows)):
            lines.append(",".join(_format_cell(v) for v in row))
        _write(f"{name}.csv", "\n".join(lines) + "\n")
    return written


# ---------------------------------------------------------------------------
# command line

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fluctsel",
        description=("Run one experiment of the fluctuating-selection toolkit "
                     "and write its result bundle."))
    parser.add_argument("experiment", choices=EXPERIMENT_TAGS,
                        help="which study to run")
    parser.add_argument("--config", help="INI-like or JSON config file")
    parser.add_argument("--out", help="output directory "
                        "(default fluctsel-out/<experiment>)")
    parser.add_argument("--override", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="override one config value; repeatable")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config) if args.config else RunConfig()
        cfg.experiment = args.experiment
        if args.out:
            cfg.out_dir = args.out
        if not cfg.out_dir:
            cfg.out_dir = os.path.join("fluctsel-out", args.experiment)
        for text in args.override:
            apply_override(cfg, text)
        bundle = run_experiment(cfg)
        written = emit_bundle(bundle, cfg.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ExtinctionError, ConvergenceError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
