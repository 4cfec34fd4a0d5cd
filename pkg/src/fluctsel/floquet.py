"""Principal periodic eigenpair of the linearized growth operator.

The linear flow dp/dt - sigma * d2p/dx2 = a(t, x) p over one period defines a
positive period map; its principal eigenvalue exp(-lambda * T) and positive
eigenfunction determine persistence (lambda < 0) or extinction (lambda >= 0)
of the full model, and the eigenfunction yields the effective per-capita
growth signal that the scalar logistic law runs on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env_models import EnvironmentModel
from .errors import ConvergenceError, NumericalError
from .pde_solver import SimulationGrid, _Stepper
from .rho_ode import PeriodicScalarSignal


@dataclass
class FloquetPair:
    """Principal eigenvalue and periodic eigenfunction snapshots.

    p_snapshots[k] holds p(t_k) on the grid nodes for t_k = k * T / steps,
    k = 0..steps, normalized so sup_x p(0, x) = 1; p(T) = p(0) up to the
    iteration tolerance. lam is the principal exponent: solutions of the
    linear flow behave like exp(-lam * t) times a periodic profile.
    """

    lam: float
    period: float
    radius: float
    p_snapshots: np.ndarray
    times: np.ndarray
    iterations: int
    grid: SimulationGrid


@dataclass
class EffectiveSignal:
    """Per-capita growth rate felt by the eigenprofile.

    Q(t_k) = int a(t_k, x) p(t_k, x) dx / int p(t_k, x) dx, packaged as a
    periodic signal; P_snapshots are the unit-mass profiles p / int p.
    """

    Q: PeriodicScalarSignal
    P_snapshots: np.ndarray
    times: np.ndarray


def _linear_period(stepper: _Stepper, p: np.ndarray, record: bool = False):
    """One period of the linear flow (no saturation term)."""
    snaps = np.empty((stepper.steps + 1, p.size)) if record else None
    if record:
        snaps[0] = p
    for k in range(stepper.steps):
        p = stepper.step(p, k, 0.0)
        if record:
            snaps[k + 1] = p
    return p, snaps


def principal_eigenpair(grid: SimulationGrid, model: EnvironmentModel,
                        tol: float = 1e-10, max_iters: int = 5000,
                        guess: np.ndarray | None = None) -> FloquetPair:
    """Power iteration on the period map of the linear flow.

    Parameters
    ----------
    grid : SimulationGrid
        Discretization; grid.dt is snapped to divide the period, with at
        least 512 steps per period enforced for the eigen-run.
    model : EnvironmentModel
        Periodic growth rate.
    tol : float
        Relative change of the period growth factor at which the iteration
        stops.
    guess : ndarray, optional
        Starting profile; defaults to a Gaussian at the averaged optimum
        matched to the local curvature when the model provides it.

    Returns
    -------
    FloquetPair
        With lam = -log(growth factor) / T and one period of snapshots of
        the periodic eigenfunction, sup-normalized at t = 0.

    Raises
    ------
    ConvergenceError
        If the growth factor has not settled after max_iters periods; the
        message carries the last two factors.
    """
    T = model.period
    steps = int(round(T / grid.dt))
    if steps < 512:
        grid = SimulationGrid(x_lo=grid.x_lo, x_hi=grid.x_hi, nx=grid.nx,
                              dt=T / 512.0, sigma=grid.sigma, boundary=grid.boundary)
    stepper = _Stepper(grid, model)
    x = grid.x
    if guess is not None:
        p = np.asarray(guess, dtype=float)
    else:
        info = model.analytic_info or {}
        x_m = float(info.get("x_m", 0.5 * (grid.x_lo + grid.x_hi)))
        eps = np.sqrt(grid.sigma) if grid.sigma > 0 else grid.dx
        d2 = info.get("d2")
        curv = np.sqrt(-0.5 * d2) if d2 is not None and d2 < 0 else 1.0
        p = np.exp(-curv * (x - x_m) ** 2 / (2.0 * eps))
    p = p / p.max()
    factor = np.nan
    for it in range(1, max_iters + 1):
        p_new, _ = _linear_period(stepper, p)
        prev, factor = factor, float(p_new.max())
        if factor <= 0.0 or not np.isfinite(factor):
            raise NumericalError(f"period map lost positivity (factor {factor})")
        p = p_new / factor
        if np.isfinite(prev) and abs(factor - prev) <= tol * abs(factor):
            break
    else:
        raise ConvergenceError(
            f"growth factor not settled after {max_iters} periods; "
            f"last two factors {prev:.12e}, {factor:.12e}")
    lam = -np.log(factor) / T
    _, snaps = _linear_period(stepper, p, record=True)
    times = stepper.dt * np.arange(stepper.steps + 1)
    # weight by exp(lam t) so the stored snapshots are the periodic profile
    snaps *= np.exp(lam * times)[:, None]
    radius = 0.5 * (grid.x_hi - grid.x_lo)
    return FloquetPair(lam=float(lam), period=T, radius=radius,
                       p_snapshots=snaps, times=times, iterations=it, grid=grid)


def effective_signals(pair: FloquetPair, model: EnvironmentModel) -> EffectiveSignal:
    """Mass-normalized profiles and their instantaneous mean growth rate."""
    grid = pair.grid
    dx = grid.dx
    x = grid.x
    masses = dx * pair.p_snapshots.sum(axis=1)
    if masses.min() <= 0.0:
        raise NumericalError("eigenfunction snapshot with nonpositive mass")
    P = pair.p_snapshots / masses[:, None]
    q = np.empty(len(pair.times))
    for k, t in enumerate(pair.times):
        row = np.asarray(model.rate(t, x), dtype=float)
        q[k] = dx * float(np.sum(row * P[k]))
    signal = PeriodicScalarSignal(period=pair.period, times=pair.times.copy(),
                                  values=q, fn=None)
    return EffectiveSignal(Q=signal, P_snapshots=P, times=pair.times.copy())


def lambda_identity_residual(pair: FloquetPair, effective: EffectiveSignal,
                             method: str = "matched") -> float:
    """Defect of the balance between lam and the period mean of Q.

    For the continuous problem lam + (1/T) int_0^T Q dt = 0. The "matched"
    method evaluates the integral with the quadrature induced by the discrete
    period map, sum_k log(1 + dt * Q(t_k)), for which the identity holds
    exactly up to the boundary mass flux; "simpson" uses plain Simpson
    quadrature of the samples and carries the O(dt) splitting error.
    """
    T = pair.period
    dt = pair.times[1] - pair.times[0]
    q = effective.Q.values
    if method == "matched":
        integral = float(np.sum(np.log1p(dt * q[:-1])))
    elif method == "simpson":
        from scipy.integrate import simpson
        integral = float(simpson(q, x=pair.times))
    else:
        raise NumericalError(f"unknown residual method {method!r}")
    return abs(pair.lam + integral / T)


def radius_sweep(model: EnvironmentModel, radii, sigma: float,
                 points_per_unit: int = 100, steps_per_period: int = 1024,
                 tol: float = 1e-10, center: float | None = None) -> list[dict]:
    """Eigenvalue against domain half-width, to audit truncation.

    radii must increase. Returns one record per radius with keys R, sigma,
    lambda, identity_residual, iterations; the eigenvalue should be
    nonincreasing in R (enlarging the domain relaxes the Dirichlet pinning)
    and the gap between the last two radii estimates the truncation error.
    """
    radii = list(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise NumericalError("radii must be strictly increasing")
    if center is None:
        info = model.analytic_info or {}
        center = float(info.get("x_m", 0.0))
    out = []
    for R in radii:
        nx = max(16, int(round(2.0 * R * points_per_unit)) - 1)
        grid = SimulationGrid(x_lo=center - R, x_hi=center + R, nx=nx,
                              dt=model.period / steps_per_period, sigma=sigma)
        pair = principal_eigenpair(grid, model, tol=tol)
        eff = effective_signals(pair, model)
        out.append({
            "R": float(R),
            "sigma": float(sigma),
            "lambda": pair.lam,
            "identity_residual": lambda_identity_residual(pair, eff),
            "iterations": pair.iterations,
        })
    return out
