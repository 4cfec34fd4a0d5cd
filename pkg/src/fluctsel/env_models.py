"""Periodic growth-rate models and hypothesis checks.

A model is a time-periodic net growth rate a(t, x) for a population structured
by a scalar trait x. The rest of the package consumes models through this
module: the time-averaged rate, the location of its maximum, and a numerical
audit of the structural hypotheses (periodicity, a unique averaged optimum,
confinement away from the optimum) that the analysis relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigError, NumericalError

# Composite-Simpson node count for time averages (must stay odd).
MEAN_NODES = 1025


@dataclass
class EnvironmentModel:
    """A time-periodic growth rate.

    period : float
        Period T > 0 of the environment.
    rate : callable
        a(t, x); t is a scalar, x a scalar or ndarray, vectorized in x.
    kind : str
        One of "oscillating_optimum", "oscillating_pressure", "tabulated",
        "custom".
    analytic_info : dict
        Optional closed-form facts: "mean_growth" (callable), "x_m", "a_m",
        "d2"/"d3"/"d4" (derivatives of the averaged rate at the optimum),
        "params" (constructor parameters).
    """

    period: float
    rate: Callable
    kind: str
    analytic_info: dict | None = None


@dataclass
class HypothesisReport:
    """Result of the numerical hypothesis audit."""

    h2_unique_max: bool
    x_m: float | None
    h2_a_m: float | None
    h5_delta: float | None
    h5_radius: float | None
    periodicity_residual: float
    d0: float
    notes: str = ""


def make_oscillating_optimum(r: float, g: float, c: float, b: float) -> EnvironmentModel:
    """Quadratic selection toward an optimum that oscillates sinusoidally.

    a(t, x) = r - g * (x - c * sin(b t))**2, with period 2*pi/b.
    """
    if g <= 0:
        raise ConfigError(f"selection strength g must be positive, got {g}")
    if b <= 0:
        raise ConfigError(f"angular frequency b must be positive, got {b}")
    period = 2.0 * np.pi / b

    def rate(t, x):
        return r - g * (np.asarray(x) - c * np.sin(b * t)) ** 2

    def mean_rate(x):
        return r - g * (np.asarray(x) ** 2 + 0.5 * c * c)

    info = {
        "params": {"r": r, "g": g, "c": c, "b": b},
        "mean_growth": mean_rate,
        "x_m": 0.0,
        "a_m": r - 0.5 * g * c * c,
        "d2": -2.0 * g,
        "d3": 0.0,
        "d4": 0.0,
    }
    return EnvironmentModel(period=period, rate=rate, kind="oscillating_optimum",
                            analytic_info=info)


def make_oscillating_pressure(r: float, g_fn: Callable[[float], float]) -> EnvironmentModel:
    """Quadratic selection with a 1-periodic, time-varying strength.

    a(t, x) = r - g(t) * x**2. The pressure g must be positive; positivity is
    checked on a sample grid over one period.
    """
    ts = np.linspace(0.0, 1.0, MEAN_NODES)
    gs = np.array([float(g_fn(t)) for t in ts])
    if gs.min() <= 0.0:
        raise ConfigError(
            f"selection pressure must stay positive; sampled min g = {gs.min():.6g}")
    g_bar = float(simpson(gs, x=ts))

    def rate(t, x):
        return r - g_fn(t) * np.asarray(x) ** 2

    def mean_rate(x):
        return r - g_bar * np.asarray(x) ** 2

    info = {
        "params": {"r": r, "g_fn": g_fn, "g_bar": g_bar},
        "mean_growth": mean_rate,
        "x_m": 0.0,
        "a_m": r,
        "d2": -2.0 * g_bar,
        "d3": 0.0,
        "d4": 0.0,
    }
    return EnvironmentModel(period=1.0, rate=rate, kind="oscillating_pressure",
                            analytic_info=info)


def make_custom(period: float, rate: Callable, analytic_info: dict | None = None) -> EnvironmentModel:
    """Wrap an arbitrary periodic rate callable as a model."""
    if period <= 0:
        raise ConfigError(f"period must be positive, got {period}")
    return EnvironmentModel(period=float(period), rate=rate, kind="custom",
                            analytic_info=analytic_info)


def make_tabulated(period: float, t_nodes: np.ndarray, x_nodes: np.ndarray,
                   values: np.ndarray) -> EnvironmentModel:
    """Model from sampled rate values, interpolated bilinearly in (t, x).

    t_nodes must be uniform on [0, period) without the right endpoint; time is
    wrapped modulo the period, so the interpolant is exactly periodic. Outside
    the x-node range the edge value is held.
    """
    t_nodes = np.asarray(t_nodes, dtype=float)
    x_nodes = np.asarray(x_nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    nt, nx = len(t_nodes), len(x_nodes)
    if period <= 0:
        raise ConfigError(f"period must be positive, got {period}")
    if values.shape != (nt, nx):
        raise ConfigError(
            f"value table shape {values.shape} does not match {nt} times x {nx} nodes")
    if nt < 2 or nx < 2:
        raise ConfigError("tabulated model needs at least 2 nodes in each direction")
    step = period / nt
    if not np.allclose(t_nodes, step * np.arange(nt), rtol=0, atol=1e-12 * period):
        raise ConfigError("time nodes must be uniform on [0, period) without the endpoint")

    def rate(t, x):
        pos = (t % period) / step
        j0 = int(np.floor(pos)) % nt
        j1 = (j0 + 1) % nt
        w = pos - np.floor(pos)
        row = (1.0 - w) * values[j0] + w * values[j1]
        return np.interp(np.asarray(x), x_nodes, row)

    return EnvironmentModel(period=float(period), rate=rate, kind="tabulated",
                            analytic_info=None)


def load_tabulated(path, x_lo: float, x_hi: float) -> EnvironmentModel:
    """Read a tabulated model from a plain-text file.

    The first non-comment line is a header "T nx nt"; the remaining tokens are
    the nt*nx rate values in row-major order (one row per time sample). Time
    samples are uniform on [0, T); trait nodes are uniform on [x_lo, x_hi].
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    tokens: list[str] = []
    header = None
    for line in lines:
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if header is None:
            header = body.split()
            continue
        tokens.extend(body.split())
    if header is None:
        raise ConfigError(f"{path}: empty tabulated-model file")
    if len(header) != 3:
        raise ConfigError(f"{path}: header must be 'T nx nt', got {' '.join(header)!r}")
    try:
        period = float(header[0])
        nx = int(header[1])
        nt = int(header[2])
    except ValueError as exc:
        raise ConfigError(f"{path}: bad header 'T nx nt': {exc}") from exc
    if len(tokens) != nt * nx:
        raise ConfigError(
            f"{path}: expected {nt * nx} values ({nt} times x {nx} nodes), found {len(tokens)}")
    try:
        values = np.array([float(tok) for tok in tokens]).reshape(nt, nx)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric value in table: {exc}") from exc
    t_nodes = period / nt * np.arange(nt)
    x_nodes = np.linspace(x_lo, x_hi, nx)
    model = make_tabulated(period, t_nodes, x_nodes, values)
    return model


def mean_growth(model: EnvironmentModel, x) -> np.ndarray:
    """Time average of the growth rate over one period at trait value(s) x.

    Uses the model's closed form when present, otherwise composite Simpson
    quadrature in time with MEAN_NODES nodes.
    """
    info = model.analytic_info or {}
    if "mean_growth" in info:
        return info["mean_growth"](x)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    ts = np.linspace(0.0, model.period, MEAN_NODES)
    table = np.empty((MEAN_NODES, xs.size))
    for j, t in enumerate(ts):
        table[j] = model.rate(t, xs)
    out = simpson(table, x=ts, axis=0) / model.period
    return out if np.ndim(x) else float(out[0])


def _golden_max(f: Callable[[float], float], lo: float, hi: float,
                xtol: float = 1e-10) -> float:
    """Golden-section search for the maximizer of a unimodal function."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def locate_optimum(model: EnvironmentModel, bracket: tuple[float, float]) -> float:
    """Locate the unique interior maximum of the averaged growth rate.

    Scans the bracket on a fine grid to certify a single interior peak, then
    refines it by golden-section search. Raises NumericalError("H2 violated on
    bracket") when the averaged rate has no unique interior maximum there
    (peak at an endpoint, several separated peaks, or a flat top).
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ConfigError(f"empty bracket ({lo}, {hi})")
    xs = np.linspace(lo, hi, 1025)
    vals = np.asarray(mean_growth(model, xs), dtype=float)
    i = int(np.argmax(vals))
    if i == 0 or i == len(xs) - 1:
        raise NumericalError("H2 violated on bracket: maximum at an endpoint")
    d = np.diff(vals)
    scale = max(np.abs(vals).max(), 1.0)
    sgn = np.sign(d)
    sgn[np.abs(d) <= 1e-13 * scale] = 0.0
    nonzero = sgn[sgn != 0.0]
    if nonzero.size == 0:
        raise NumericalError("H2 violated on bracket: averaged rate is flat")
    flips = int(np.count_nonzero(np.diff(nonzero) != 0.0))
    if flips != 1 or nonzero[0] <= 0.0 or nonzero[-1] >= 0.0:
        raise NumericalError("H2 violated on bracket: averaged rate is not unimodal")

    def f(x):
        return float(mean_growth(model, np.array([x]))[0])

    return _golden_max(f, xs[i - 1], xs[i + 1])


def check_hypotheses(model: EnvironmentModel, domain: tuple[float, float],
                     lambda_hint: float = 0.0) -> HypothesisReport:
    """Audit the structural hypotheses on a trait domain.

    Checks, on sample grids: exact periodicity of the rate; existence of a
    unique interior maximum x_m of the averaged rate with a positive value
    there; and confinement, i.e. a radius R0 and margin delta > 0 with
    max_t a(t, x) + lambda_hint <= -delta for |x| >= R0. Bounds on higher
    derivatives are not checked numerically.
    """
    lo, hi = float(domain[0]), float(domain[1])
    xs = np.linspace(lo, hi, 513)
    ts = np.linspace(0.0, model.period, 65)
    table = np.array([np.asarray(model.rate(t, xs), dtype=float) for t in ts])
    periodicity_residual = float(np.max(np.abs(table[-1] - table[0])))
    d0 = float(np.max(np.abs(table)))
    notes = [f"rate bound d0 = {d0:.6g}",
             f"periodicity residual = {periodicity_residual:.3g}",
             "H6 (higher-derivative bounds) not checked numerically"]

    try:
        x_m = locate_optimum(model, (lo, hi))
        unique = True
        a_m = float(np.asarray(mean_growth(model, np.array([x_m])))[0])
        if a_m <= 0.0:
            notes.append(f"averaged rate at the optimum is not positive ({a_m:.6g})")
    except NumericalError as exc:
        unique, x_m, a_m = False, None, None
        notes.append(str(exc))

    # Confinement: s(x) = max over sampled t of a(t, x), shifted by the hint.
    s = table[:-1].max(axis=0) + lambda_hint
    delta = None
    radius = None
    if s[0] >= 0.0 or s[-1] >= 0.0:
        notes.append("no confinement: rate nonnegative at the domain edge")
    else:
        hot = np.abs(xs[s >= 0.0])
        r_zero = float(hot.max()) if hot.size else 0.0
        r0 = 1.1 * r_zero
        outside = np.abs(xs) >= r0
        if not outside.any():
            notes.append("no sample points beyond the confinement radius")
        else:
            radius = r0
            delta = float(-s[outside].max())

    return HypothesisReport(
        h2_unique_max=unique, x_m=x_m, h2_a_m=a_m,
        h5_delta=delta, h5_radius=radius,
        periodicity_residual=periodicity_residual, d0=d0,
        notes="; ".join(notes))
