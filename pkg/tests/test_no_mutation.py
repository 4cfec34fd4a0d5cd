import numpy as np
import pytest

import fluctsel as fs


def _grid(dt=1e-3, nx=600):
    return fs.SimulationGrid(x_lo=-3.0, x_hi=3.0, nx=nx, dt=dt, sigma=0.0)


def test_exponent_matches_time_independent_rate():
    # a(t, x) = a(x): the growth exponent is exactly t * a(x)
    grid = _grid()
    model = fs.make_custom(1.0, lambda t, x: 1.0 - np.asarray(x) ** 2)
    n0 = np.exp(-grid.x ** 2)
    state, _, _ = fs.simulate_sigma0(grid, model, n0, 2.0)
    np.testing.assert_allclose(state.log_factors, 2.0 * (1.0 - grid.x ** 2),
                               rtol=0, atol=1e-10)
    assert state.time == pytest.approx(2.0)


def test_mass_coupling_closes_on_logistic_ode(ex1_model):
    # the recorded population-mean rate drives a scalar logistic equation
    # whose solution must reproduce the recorded mass itself
    grid = _grid(dt=2e-4)
    n0 = np.exp(-((grid.x - 0.2) ** 2) / 0.08)
    state, (times, rho), diag = fs.simulate_sigma0(grid, ex1_model, n0, 2.0)
    sig = fs.PeriodicScalarSignal.from_samples(2.0 * times[-1],
                                               np.concatenate([diag["mean_growth"],
                                                               diag["mean_growth"][1:]]))
    t2, rho2 = fs.integrate_logistic(sig, rho[0], 2.0, dt=grid.dt)
    assert np.abs(rho2 - rho).max() < 1e-6


def test_density_concentrates_at_averaged_optimum(ex1_model):
    grid = _grid()
    n0 = np.ones(grid.nx)
    state, (times, rho), diag = fs.simulate_sigma0(grid, ex1_model, n0, 60.0)
    dens = fs.reconstruct_density(state)
    assert grid.x[np.argmax(dens)] == pytest.approx(0.0, abs=2 * grid.dx)
    metrics = fs.concentration_metrics(grid, state, radius=0.5)
    assert metrics.mass_outside < 1e-2
    assert abs(metrics.mean) < 0.05
    assert not diag["extinct"]


def test_variance_decays_like_inverse_time(ex1_model):
    # concentration rate: variance of exp(-g t x^2) is 1/(2 g t)
    grid = _grid()
    n0 = np.ones(grid.nx)
    for t_end in (20.0, 40.0):
        state, _, _ = fs.simulate_sigma0(grid, ex1_model, n0, t_end)
        got = fs.concentration_metrics(grid, state, radius=1.0).variance
        assert got == pytest.approx(1.0 / (2.0 * t_end), rel=0.05)


def test_gaussian_mass_outside_three_sigma():
    grid = fs.SimulationGrid(x_lo=-2.0, x_hi=2.0, nx=4000, dt=1e-3, sigma=0.0)
    w = 0.25
    dens = np.exp(-grid.x ** 2 / (2 * w * w))
    got = fs.concentration_metrics(grid, dens, radius=3 * w).mass_outside
    assert got == pytest.approx(0.0026998, abs=2e-4)


def test_metrics_reject_zero_density():
    grid = _grid(nx=100)
    with pytest.raises(fs.NumericalError):
        fs.concentration_metrics(grid, np.zeros(100), radius=1.0)


def test_simulate_rejects_bad_start():
    grid = _grid(nx=100)
    with pytest.raises(fs.NumericalError):
        fs.simulate_sigma0(grid, fs.make_custom(1.0, lambda t, x: 0 * x),
                           -np.ones(100), 1.0)
    with pytest.raises(fs.NumericalError):
        fs.simulate_sigma0(grid, fs.make_custom(1.0, lambda t, x: 0 * x),
                           np.zeros(100), 1.0)


def test_extinction_flag_under_negative_rate():
    grid = _grid(nx=200)
    model = fs.make_custom(1.0, lambda t, x: -2.0 + 0 * np.asarray(x))
    n0 = np.exp(-grid.x ** 2)
    state, (times, rho), diag = fs.simulate_sigma0(grid, model, n0, 20.0)
    assert diag["extinct"]
    assert rho[-1] < 1e-12


def test_reconstruction_supports_vanished_traits():
    grid = _grid(nx=100)
    n0 = np.zeros(100)
    n0[40:60] = 1.0
    model = fs.make_custom(1.0, lambda t, x: 0.5 + 0 * np.asarray(x))
    state, _, _ = fs.simulate_sigma0(grid, model, n0, 1.0)
    dens = fs.reconstruct_density(state)
    assert (dens[:40] == 0.0).all()
    assert (dens[40:60] > 0.0).all()
