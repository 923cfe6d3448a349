"""Constrained descent: step mechanics, convergence, failure reporting."""
import math

import numpy as np
import pytest

from helpers import ZERO_G, free_power, harmonic_v, power_g, well_v
from ngs.energy import evaluate
from ngs.flow import SolverConfig, flow_step, gaussian_start, minimize
from ngs.grids import GridFunction, RadialGrid, mass
from ngs.models import make_model


@pytest.fixture(scope="module")
def small_grid():
    return RadialGrid(1, 16.0, 400)


@pytest.fixture(scope="module")
def well_cubic():
    return make_model(1, power_g((1.0, 2.0)), well_v(depth=1.0, width=1.0))


@pytest.fixture(scope="module")
def well_solution(small_grid, well_cubic):
    res = minimize(1.0, well_cubic, small_grid)
    assert res.converged
    return res


# --- configuration ---

def test_config_rejects_bad_fields():
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0)
    with pytest.raises(ValueError):
        SolverConfig(starts=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iters=-1)
    with pytest.raises(ValueError):
        SolverConfig(vanishing_fraction=1.5)


def test_config_roundtrips_to_dict():
    cfg = SolverConfig(dt=0.5, starts=2, seed=7)
    d = cfg.to_dict()
    assert d["dt"] == 0.5 and d["starts"] == 2 and d["seed"] == 7


# --- single step mechanics ---

def test_converged_profile_is_a_fixed_point(well_solution, well_cubic):
    u = well_solution.u
    v = flow_step(u, well_cubic, dt=1e-2)
    rel = float(np.max(np.abs(v.values - u.values)) / np.max(np.abs(u.values)))
    assert rel <= 1e-5


def test_step_spreads_positivity(small_grid, well_cubic):
    # nonnegative data with dead zones: the implicit solve fills them in
    vals = np.abs(np.sin(small_grid.r)) * np.exp(-0.3 * small_grid.r**2)
    u = GridFunction(small_grid, vals)
    u = u.with_values(u.values / math.sqrt(mass(u)))
    v = flow_step(u, well_cubic, dt=1e-2, a=1.0)
    assert np.all(v.values > 0)


def test_steps_hold_mass_to_machine_precision(small_grid, well_cubic):
    u = gaussian_start(small_grid, 1.3, a=2.0)
    for _ in range(50):
        u = flow_step(u, well_cubic, dt=1e-2, a=2.0)
        assert abs(mass(u) - 2.0) <= 1e-12 * 2.0


# --- linear limit ---

def test_linear_harmonic_ground_state():
    grid = RadialGrid(1, 12.0, 400)
    model = make_model(1, ZERO_G, harmonic_v(1.0))
    res = minimize(1.0, model, grid)
    assert res.converged
    assert abs(res.lam + 1.0) <= 1e-3
    assert abs(res.energy - 0.5) <= 1e-3
    # profile should be the gaussian eigenfunction
    ref = np.pi ** (-0.25) * np.exp(-0.5 * grid.r**2)
    dist = math.sqrt(float(grid.w @ (res.u.values - ref) ** 2))
    assert dist <= 1e-3


# --- descent bookkeeping ---

def test_energy_trace_monotone_after_burn_in(well_solution):
    trace = well_solution.energy_trace
    assert trace[0][0] == 0
    tail = [(i, J) for i, J in trace if i >= 10]
    for (_, a), (_, b) in zip(tail, tail[1:]):
        assert b <= a + 1e-9 * (1.0 + abs(a))


def test_iteration_budget_reports_not_raises(small_grid, well_cubic):
    cfg = SolverConfig(max_iters=60)
    res = minimize(1.0, well_cubic, small_grid, config=cfg)
    assert not res.converged
    assert res.reason == "max-iters"


def test_starts_agree_on_well_problem(small_grid, well_cubic):
    res = minimize(1.0, well_cubic, small_grid, config=SolverConfig(starts=3))
    assert res.converged
    assert len(res.all_start_energies) == 3
    spread = max(res.all_start_energies) - min(res.all_start_energies)
    assert spread <= 1e-6
    assert not res.start_disagreement


def test_warm_start_cuts_iterations(small_grid, well_cubic, well_solution):
    warm = minimize(1.2, well_cubic, small_grid, warm_start=well_solution.u)
    cold = minimize(1.2, well_cubic, small_grid)
    assert warm.converged and cold.converged
    assert abs(warm.energy - cold.energy) <= 1e-6 * (1.0 + abs(cold.energy))
    assert warm.iterations <= cold.iterations


def test_result_serialization_keys(well_solution):
    d = well_solution.to_dict()
    for key in ("a", "mass", "lambda", "C_a_estimate", "residuals", "converged",
                "reason", "iterations", "residual_norm", "all_start_energies"):
        assert key in d
    assert set(d["residuals"]) == {"nehari", "pohozaev", "lambda"}
    assert d["converged"] is True
    assert d["reason"] is None


# --- regimes without minimizers ---

def test_mass_subcritical_threshold_regime_flagged(small_grid):
    # quintic on the line: no negative-energy profile below the soliton mass
    model = free_power(1, 4.0)
    res = minimize(1.0, model, small_grid)
    assert not res.converged
    assert res.reason == "no-minimizer-regime"
    assert abs(res.energy) < 1e-2


def test_rejects_nonpositive_mass(small_grid, well_cubic):
    with pytest.raises(ValueError):
        minimize(0.0, well_cubic, small_grid)
    with pytest.raises(ValueError):
        minimize(-2.0, well_cubic, small_grid)


def test_rejects_warm_start_on_other_grid(small_grid, well_cubic):
    other = RadialGrid(1, 16.0, 800)
    warm = gaussian_start(other, 1.0, a=1.0)
    with pytest.raises(ValueError):
        minimize(1.0, well_cubic, small_grid, warm_start=warm)


def test_nehari_pohozaev_hold_at_convergence(well_solution, well_cubic):
    assert abs(well_solution.residuals.nehari) <= 1e-4
    assert abs(well_solution.residuals.pohozaev) <= 1e-3
    rep = evaluate(well_solution.u, well_cubic)
    assert math.isclose(rep.J, well_solution.energy, rel_tol=1e-12)
