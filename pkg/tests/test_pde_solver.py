import numpy as np
import pytest

import fluctsel as fs


def _const_model(value=1.0):
    return fs.make_custom(1.0, lambda t, x: np.full_like(np.asarray(x, float), value))


@pytest.mark.parametrize("kwargs", [
    dict(nx=8),
    dict(x_lo=2.0, x_hi=-2.0),
    dict(dt=0.0),
    dict(sigma=-1e-3),
    dict(boundary="neumann"),
])
def test_grid_validation(kwargs):
    base = dict(x_lo=-2.0, x_hi=2.0, nx=64, dt=1e-3, sigma=1e-2)
    base.update(kwargs)
    with pytest.raises(fs.ConfigError):
        fs.SimulationGrid(**base)


def test_grid_geometry():
    grid = fs.SimulationGrid(x_lo=-1.0, x_hi=1.0, nx=19, dt=1e-3, sigma=0.0)
    assert grid.dx == pytest.approx(0.1)
    assert grid.x[0] == pytest.approx(-0.9)
    assert grid.x[-1] == pytest.approx(0.9)
    assert len(grid.x) == 19


def test_density_field_rejects_bad_values():
    with pytest.raises(fs.NumericalError):
        fs.DensityField(time=0.0, values=np.array([1.0, -0.1, 1.0]))
    with pytest.raises(fs.NumericalError):
        fs.DensityField(time=0.0, values=np.array([1.0, np.nan, 1.0]))


def test_default_guess_has_unit_mass(ex1_model):
    grid = fs.SimulationGrid(x_lo=-5.0, x_hi=5.0, nx=1000, dt=1e-3, sigma=0.0025)
    guess = fs.default_orbit_guess(grid, ex1_model)
    assert fs.total_mass(grid, guess) == pytest.approx(1.0, abs=1e-6)
    assert grid.x[np.argmax(guess)] == pytest.approx(0.0, abs=2 * grid.dx)


def test_step_without_diffusion_is_exact_reaction():
    grid = fs.SimulationGrid(x_lo=-2.0, x_hi=2.0, nx=63, dt=1e-2, sigma=0.0)
    model = fs.make_custom(1.0, lambda t, x: 1.0 - np.asarray(x) ** 2)
    n0 = np.exp(-grid.x ** 2)
    field = fs.step_imex(grid, fs.DensityField(0.0, n0), model, rho=0.3)
    expect = n0 * (1.0 + grid.dt * (1.0 - grid.x ** 2 - 0.3))
    np.testing.assert_allclose(field.values, expect, rtol=1e-13)
    assert field.time == pytest.approx(grid.dt)


@pytest.mark.parametrize("diffusion", ["be", "cn"])
def test_pure_diffusion_conserves_interior_mass(diffusion):
    # zero growth, zero rho: only diffusion acts; mass leaks just through the
    # far-away ends, so it is conserved to solver accuracy
    grid = fs.SimulationGrid(x_lo=-5.0, x_hi=5.0, nx=1000, dt=1e-3, sigma=0.01)
    model = _const_model(0.0)
    n = fs.DensityField(0.0, np.exp(-grid.x ** 2 / 0.02) / np.sqrt(0.02 * np.pi))
    m0 = fs.total_mass(grid, n.values)
    for _ in range(200):
        n = fs.step_imex(grid, n, model, rho=0.0, diffusion=diffusion)
    assert fs.total_mass(grid, n.values) == pytest.approx(m0, rel=1e-9)
    assert n.values.min() >= 0.0


def test_step_rejects_oversized_reaction():
    grid = fs.SimulationGrid(x_lo=-2.0, x_hi=2.0, nx=64, dt=0.5, sigma=0.0)
    with pytest.raises(fs.NumericalError, match="step constraint"):
        fs.step_imex(grid, fs.DensityField(0.0, np.ones(64)), _const_model(1.0),
                     rho=1.5)


def test_step_rejects_unknown_scheme():
    grid = fs.SimulationGrid(x_lo=-2.0, x_hi=2.0, nx=64, dt=1e-3, sigma=0.0)
    with pytest.raises(fs.ConfigError):
        fs.step_imex(grid, fs.DensityField(0.0, np.ones(64)), _const_model(),
                     diffusion="upwind", rho=0.0)


def test_simulate_logistic_growth_matches_ode():
    # flat rate: mass obeys rho' = rho (1 - rho) regardless of diffusion
    grid = fs.SimulationGrid(x_lo=-5.0, x_hi=5.0, nx=500, dt=1e-3, sigma=0.01)
    n0 = np.exp(-grid.x ** 2)
    n0 *= 0.1 / fs.total_mass(grid, n0)
    field, (times, rho), diag = fs.simulate(grid, _const_model(1.0), n0, 5.0)
    exact = 0.1 * np.exp(times) / (1.0 + 0.1 * (np.exp(times) - 1.0))
    assert np.abs(rho - exact).max() < 5e-3
    assert not diag["extinct"]


def test_simulate_decay_and_extinction_flag():
    grid = fs.SimulationGrid(x_lo=-5.0, x_hi=5.0, nx=200, dt=1e-2, sigma=0.0025)
    n0 = np.exp(-grid.x ** 2)
    field, (times, rho), diag = fs.simulate(grid, _const_model(-1.0), n0, 30.0)
    assert (rho[1:] <= rho[0] * np.exp(-times[1:] + 1e-9)).all()
    assert diag["extinct"]
    assert rho[-1] < 1e-12


def test_autonomous_steady_state():
    # frozen environment: the period map fixed point is a true steady state
    model = fs.make_custom(1.0, lambda t, x: 1.0 - np.asarray(x) ** 2)
    grid = fs.SimulationGrid(x_lo=-4.0, x_hi=4.0, nx=400, dt=1.0 / 256, sigma=0.01)
    rec = fs.find_periodic_orbit(grid, model, orbit_tol=1e-10)
    assert rec.period_gap < 1e-9
    within = np.abs(rec.snapshots - rec.snapshots[0]).max() / rec.snapshots[0].max()
    assert within < 1e-6
    # steady total size is the principal eigenvalue's negative
    assert rec.rho_samples[0] == pytest.approx(1.0 - np.sqrt(0.01), abs=5e-3)


def test_find_periodic_orbit_detects_extinction():
    grid = fs.SimulationGrid(x_lo=-3.0, x_hi=3.0, nx=100, dt=1.0 / 128, sigma=0.01)
    model = fs.make_custom(1.0, lambda t, x: -0.5 - np.asarray(x) ** 2)
    with pytest.raises(fs.ExtinctionError, match="no positive periodic orbit"):
        fs.find_periodic_orbit(grid, model)


def test_find_periodic_orbit_convergence_error():
    grid = fs.SimulationGrid(x_lo=-3.0, x_hi=3.0, nx=100, dt=1.0 / 128, sigma=0.01)
    model = fs.make_custom(1.0, lambda t, x: 1.0 - np.asarray(x) ** 2)
    with pytest.raises(fs.ConvergenceError, match="no periodic orbit within"):
        fs.find_periodic_orbit(grid, model, max_periods=2)


def test_find_periodic_orbit_rejects_bad_guess():
    grid = fs.SimulationGrid(x_lo=-3.0, x_hi=3.0, nx=100, dt=1.0 / 128, sigma=0.01)
    model = fs.make_custom(1.0, lambda t, x: 1.0 - np.asarray(x) ** 2)
    with pytest.raises(fs.ConfigError):
        fs.find_periodic_orbit(grid, model, n0_guess=np.zeros(100))


def test_orbit_record_shape(ex1_orbit, wide_grid):
    steps = round(1.0 / wide_grid.dt)
    assert ex1_orbit.snapshots.shape == (steps + 1, wide_grid.nx)
    assert ex1_orbit.times[0] == 0.0
    assert ex1_orbit.times[-1] == pytest.approx(1.0)
    assert len(ex1_orbit.rho_samples) == steps + 1
    assert ex1_orbit.period_gap < 1e-8
