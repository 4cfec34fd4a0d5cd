"""Periodic logistic dynamics for the total population size.

When the population concentrates at a single trait, its total size rho obeys
the scalar logistic law rho' = rho * (q(t) - rho) with a periodic per-capita
rate q. This module provides the positive periodic solution in closed form,
a direct time integrator to observe attraction toward it, and period means.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .errors import ExtinctionError, NumericalError

# Fine-grid intervals per period used for the closed-form machinery.
FINE_INTERVALS = 8192


@dataclass
class PeriodicScalarSignal:
    """A scalar signal with a fixed period.

    Holds uniform samples over one closed period, plus optionally the callable
    they came from. Evaluation uses the callable when present and periodic
    linear interpolation of the samples otherwise.
    """

    period: float
    times: np.ndarray
    values: np.ndarray
    fn: Callable | None = None

    @classmethod
    def from_callable(cls, period: float, fn: Callable, n: int = 2049):
        times = np.linspace(0.0, period, n)
        values = np.array([float(fn(t)) for t in times])
        return cls(period=period, times=times, values=values, fn=fn)

    @classmethod
    def from_samples(cls, period: float, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        times = np.linspace(0.0, period, len(values))
        return cls(period=period, times=times, values=values, fn=None)

    def __call__(self, t):
        if self.fn is not None:
            if np.ndim(t):
                return np.array([float(self.fn(tt)) for tt in np.asarray(t)])
            return float(self.fn(t))
        return np.interp(np.asarray(t) % self.period, self.times, self.values)

    def mean(self) -> float:
        return float(simpson(self.values, x=self.times)) / self.period


@dataclass
class RhoOrbit:
    """The positive periodic orbit of the logistic law.

    samples holds the orbit on a uniform closed grid over one period; mean is
    its period average. evaluate() uses the closed-form machinery when the
    orbit was built from it, so off-grid queries keep full accuracy.
    """

    period: float
    times: np.ndarray
    samples: np.ndarray
    mean: float
    _eval: Callable | None = field(default=None, repr=False)

    def evaluate(self, t):
        if self._eval is not None:
            return self._eval(t)
        return np.interp(np.asarray(t) % self.period, self.times, self.samples)


def periodic_rho_closed_form(q: PeriodicScalarSignal, n_samples: int = 2049) -> RhoOrbit:
    """Positive periodic logistic orbit for per-capita rate q.

    Parameters
    ----------
    q : PeriodicScalarSignal
        Per-capita growth rate with period T. Its antiderivative is
        precomputed once on a fine grid spanning two periods.
    n_samples : int
        Number of sample points (closed grid) stored on the returned orbit.

    Returns
    -------
    RhoOrbit
        Orbit with rho(t) = (1 - e^{-I}) / (e^{-I} * J(t)) where I is the
        period integral of q and J(t) = int_t^{t+T} exp(int_t^s q) ds.

    Raises
    ------
    ExtinctionError
        If the period integral of q is not positive, in which case no
        positive periodic solution exists and 0 attracts.
    """
    T = q.period
    ts = np.linspace(0.0, 2.0 * T, 2 * FINE_INTERVALS + 1)
    qs = np.asarray(q(ts), dtype=float)
    anti = cumulative_simpson(qs, x=ts, initial=0.0)
    period_integral = float(anti[FINE_INTERVALS])
    if period_integral <= 0.0:
        raise ExtinctionError(
            "extinction regime: no positive periodic orbit "
            f"(period integral of q = {period_integral:.6g})")
    shift = float(anti.max())
    grow = cumulative_simpson(np.exp(anti - shift), x=ts, initial=0.0)

    def evaluate(t):
        tq = np.asarray(t, dtype=float) % T
        a_t = np.interp(tq, ts, anti)
        j = np.exp(-(a_t - shift) - period_integral) * (
            np.interp(tq + T, ts, grow) - np.interp(tq, ts, grow))
        out = -np.expm1(-period_integral) / j
        return out if np.ndim(t) else float(out)

    times = np.linspace(0.0, T, n_samples)
    samples = np.asarray(evaluate(times), dtype=float)
    fine_times = ts[:FINE_INTERVALS + 1]
    mean = float(simpson(evaluate(fine_times), x=fine_times)) / T
    return RhoOrbit(period=T, times=times, samples=samples, mean=mean, _eval=evaluate)


def integrate_logistic(q: PeriodicScalarSignal, rho0: float, t_end: float,
                       dt: float | None = None):
    """Integrate rho' = rho (q(t) - rho) from rho(0) = rho0 with RK4.

    Steps live on a uniform grid of width dt (default period/1024). A step
    whose result is not positive is retried as two half steps, recursively;
    more than 40 halvings raises NumericalError. Returns (times, rho).
    """
    if rho0 < 0:
        raise NumericalError(f"negative initial size {rho0}")
    if dt is None:
        dt = q.period / 1024.0
    n = int(round(t_end / dt))
    times = dt * np.arange(n + 1)

    def rk4(rho, t, h):
        k1 = rho * (q(t) - rho)
        r2 = rho + 0.5 * h * k1
        k2 = r2 * (q(t + 0.5 * h) - r2)
        r3 = rho + 0.5 * h * k2
        k3 = r3 * (q(t + 0.5 * h) - r3)
        r4 = rho + h * k3
        k4 = r4 * (q(t + h) - r4)
        return rho + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def advance(rho, t, h, depth):
        out = rk4(rho, t, h)
        if out > 0.0 or rho == 0.0:
            return out
        if depth >= 40:
            raise NumericalError(f"positivity lost at t = {t:.6g} despite step halving")
        half = advance(rho, t, 0.5 * h, depth + 1)
        return advance(half, t + 0.5 * h, 0.5 * h, depth + 1)

    rho = np.empty(n + 1)
    rho[0] = rho0
    cur = float(rho0)
    for k in range(n):
        cur = advance(cur, times[k], dt, 0)
        rho[k + 1] = cur
    return times, rho


def orbit_mean(orbit: RhoOrbit) -> float:
    """Period average of an orbit, by Simpson quadrature of its samples."""
    return float(simpson(orbit.samples, x=orbit.times)) / orbit.period
