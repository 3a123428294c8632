import numpy as np
import pytest

from fracdg.fluxes import ConvectiveFlux, DDGFluxParams
from fracdg.fractional import FractionalParams, assemble_weights
from fracdg.grids import GridSpec, TimeGrid
from fracdg.problems import builtin_example, project_initial
from fracdg.solvers import (CellState, DGState, LDGState, SolverAbort,
                            _DGOperator, cfl_dt, rk3_step, run, step_ddg_k0,
                            step_ldg_k0)


def eo_flux(prob):
    return ConvectiveFlux("eo", prob.convective_flux, prob.state_range)


# -- CFL ------------------------------------------------------------------

def test_cfl_single_term():
    grid = GridSpec(dx=0.05)
    L = 3.0
    assert cfl_dt(grid, L, 0.0, 1.0, 0.5, 0.0, safety=0.7) == \
        pytest.approx(0.7 * 0.05 / L)


def test_cfl_ex3_plugin():
    # L = 1 for the linear flux, a = 0.1, b = 0, dx = 1/20, safety = 1
    grid = GridSpec(dx=1.0 / 20.0)
    dt = cfl_dt(grid, 1.0, 0.1, 1.0, 0.5, 0.0, safety=1.0)
    assert dt == pytest.approx(1.0 / 100.0)


def test_cfl_nonlocal_only():
    params = FractionalParams.for_order(0.5)
    grid = GridSpec(dx=0.1, x_left=0.0, x_right=1.0)
    dt = cfl_dt(grid, 0.0, 0.0, params.d_lam, 0.5, 1.0, safety=0.8)
    assert dt == pytest.approx(0.8 * 0.1**0.5 / params.d_lam)


def test_cfl_rejects_bad_safety():
    grid = GridSpec(dx=0.1)
    with pytest.raises(ValueError):
        cfl_dt(grid, 1.0, 0.0, 1.0, 0.5, 0.0, safety=1.5)


def test_time_grid_lands_on_horizon():
    tg = TimeGrid(dt=0.3, horizon=1.0)
    steps = tg.step_sizes()
    assert steps.sum() == pytest.approx(1.0)
    assert np.all(steps[:-1] == 0.3)


# -- piecewise-constant steps ----------------------------------------------

def test_rest_state_is_fixed_point():
    prob = builtin_example("ex1", 0.5, 1.0)
    W = assemble_weights(FractionalParams.for_order(0.5), 0.05, 64)
    out = step_ddg_k0(CellState(np.zeros(32)), prob, W, eo_flux(prob), 1e-3)
    np.testing.assert_array_equal(out.values, 0.0)


def test_constant_state_is_periodic_equilibrium():
    prob = builtin_example("ex1", 0.5, 1.0)
    W = assemble_weights(FractionalParams.for_order(0.5), 0.05, 64)
    u = np.full(40, 0.8)
    out = step_ddg_k0(CellState(u), prob, W, eo_flux(prob), 1e-3,
                      boundary="periodic")
    np.testing.assert_allclose(out.values, u, atol=1e-14)


def test_single_bump_matches_hand_update():
    """One explicit step for pure convection f = u^2 with the split flux."""
    prob = builtin_example("ex1", 0.5, 0.0)
    prob.diffusion_coefficient = prob.diffusion_coefficient.scaled(0.0)
    prob.derived = type(prob.derived).from_problem(prob)
    dx, dt = 0.1, 0.01
    W = assemble_weights(FractionalParams.for_order(0.5), dx, 16)
    u = np.zeros(9)
    u[4] = 0.6
    out = step_ddg_k0(CellState(u), prob, W, eo_flux(prob), dt).values
    # EO for u^2 on nonnegative states is pure upwind: fhat(a, b) = a^2
    fh = np.concatenate([[0.0], u, [0.0]])[:-1] ** 2
    expect = u - dt / dx * (fh[1:] - fh[:-1])
    np.testing.assert_allclose(out, expect, atol=1e-15)


def test_ldg_reduces_to_ddg_without_diffusion():
    prob = builtin_example("ex1", 0.5, 1.0)
    prob.diffusion_coefficient = prob.diffusion_coefficient.scaled(0.0)
    prob.derived = type(prob.derived).from_problem(prob)
    W = assemble_weights(FractionalParams.for_order(0.5), 0.05, 64)
    rng = np.random.default_rng(3)
    u = rng.uniform(0, 1, 40)
    a = step_ddg_k0(CellState(u), prob, W, eo_flux(prob), 1e-3).values
    b = step_ldg_k0(LDGState.from_values(u, prob, 0.05), prob, W,
                    eo_flux(prob), 1e-3).values
    np.testing.assert_array_equal(a, b)


def test_ldg_equal_neighbours_no_diffusion_flux():
    """A flat region produces zero diffusion contribution (removable limit)."""
    prob = builtin_example("ex2", 0.5, 0.0)
    W = assemble_weights(FractionalParams.for_order(0.5), 0.1, 16)
    u = np.full(10, 0.55)
    out = step_ldg_k0(LDGState.from_values(u, prob, 0.1), prob, W,
                      eo_flux(prob), 1e-3, boundary="periodic").values
    np.testing.assert_allclose(out, u, atol=1e-15)


def test_ldg_slaved_gradient():
    prob = builtin_example("ex2", 0.5, 0.0)
    u = np.array([0.2, 0.5, 0.9])
    st = LDGState.from_values(u, prob, 0.1)
    gU = prob.g(np.array([0.0, 0.2, 0.5, 0.9]))
    np.testing.assert_allclose(st.q, (gU[1:] - gU[:-1]) / 0.1)


# -- SSP-RK3 -----------------------------------------------------------------

def test_rk3_zero_rhs_identity():
    u = np.array([1.0, -2.0, 3.0])
    out = rk3_step(u, lambda v: 0.0 * v, 0.1)
    np.testing.assert_allclose(out, u, atol=1e-16)


def test_rk3_linear_amplification():
    # u' = -u, dt = 0.1: growth factor 1 - h + h^2/2 - h^3/6
    out = rk3_step(np.array([1.0]), lambda v: -v, 0.1)
    assert out[0] == pytest.approx(1 - 0.1 + 0.005 - 0.1**3 / 6, abs=1e-16)


def test_rk3_observed_order_three():
    errs = []
    for dt in (0.1, 0.05, 0.025):
        y, t = np.array([1.0]), 0.0
        while t < 1.0 - 1e-12:
            h = min(dt, 1.0 - t)
            y = rk3_step(y, lambda v: -v, h)
            t += h
        errs.append(abs(y[0] - np.exp(-1.0)))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(abs(o - 3.0) <= 0.1 for o in orders)


# -- semidiscrete DG -----------------------------------------------------------

def test_k0_semidiscrete_equals_difference_scheme():
    """Forward Euler on the k=0 weak form reproduces the direct update."""
    prob = builtin_example("ex1", 0.5, 1.0)
    grid = GridSpec(dx=1.0 / 40.0)
    from fracdg.fractional import assemble_dg_blocks
    params = FractionalParams.for_order(0.5)
    W = assemble_weights(params, grid.dx, grid.n_cells + grid.padding_cells)
    blocks = assemble_dg_blocks(params, grid.dx, 0,
                                grid.n_cells + grid.padding_cells)
    flux = eo_flux(prob)
    op = _DGOperator(problem=prob, ddg_params=DDGFluxParams(degree=0),
                     flux=flux, dx=grid.dx, boundary="dirichlet",
                     blocks=blocks)
    u0 = project_initial(prob, grid, 0)
    dt = 1e-4
    euler = u0 + dt * op(u0)
    direct = step_ddg_k0(CellState(u0[0]), prob, W, flux, dt).values
    scale = np.abs(direct).max()
    np.testing.assert_allclose(euler[0], direct, atol=1e-14 * max(scale, 1.0))


@pytest.mark.parametrize("k", [1, 2])
def test_global_constant_periodic_rhs_vanishes(k):
    prob = builtin_example("ex1", 0.5, 1.0)
    grid = GridSpec(dx=1.0 / 16.0)
    from fracdg.fractional import assemble_dg_blocks
    params = FractionalParams.for_order(0.5)
    blocks = assemble_dg_blocks(params, grid.dx, k, grid.n_cells)
    op = _DGOperator(problem=prob, ddg_params=DDGFluxParams.default_for_degree(k),
                     flux=eo_flux(prob), dx=grid.dx, boundary="periodic",
                     blocks=blocks)
    coeffs = np.zeros((k + 1, grid.n_cells))
    coeffs[0] = 0.75
    rhs = op(coeffs)
    np.testing.assert_allclose(rhs, 0.0, atol=1e-11)


def test_semidiscrete_rhs_converges_to_linear_operator():
    """Interior L2 distance to the exact spatial operator decreases."""
    from fracdg.fractional import assemble_dg_blocks
    from fracdg.spectral import SpectralConfig

    prob = builtin_example("ex3", 0.5, 1.0)
    cfg = SpectralConfig(half_width=32.0, modes=2**17)
    us = prob.initial_datum(cfg.grid)
    xi = cfg.frequencies
    op_hat = (-(1j * xi) - 0.1 * xi**2 - np.abs(xi) ** 0.5) * np.fft.fft(us)

    def exact_at(xq):
        out = np.empty(xq.size)
        for i in range(0, xq.size, 16):
            ph = np.exp(1j * np.outer(xq[i:i + 16] + cfg.half_width, xi))
            out[i:i + 16] = np.real(ph @ op_hat) / cfg.modes
        return out

    params = FractionalParams.for_order(0.5)
    errs = []
    for nd in (20, 40, 80):
        grid = GridSpec(dx=1.0 / nd)
        coeffs = project_initial(prob, grid, 1)
        blocks = assemble_dg_blocks(params, grid.dx, 1,
                                    grid.n_cells + grid.padding_cells)
        op = _DGOperator(problem=prob,
                         ddg_params=DDGFluxParams.default_for_degree(1),
                         flux=eo_flux(prob), dx=grid.dx, boundary="dirichlet",
                         blocks=blocks)
        mask = np.abs(grid.centers) <= 0.6
        vals = DGState(op(coeffs)).eval_at(grid.centers[mask], grid)
        ref = exact_at(grid.centers[mask])
        errs.append(np.sqrt(grid.dx * np.sum((vals - ref) ** 2)))
    assert errs[0] > errs[1] > errs[2]


# -- run orchestration ---------------------------------------------------------

def test_run_zero_horizon_returns_projection():
    prob = builtin_example("ex1", 0.5, 1.0)
    grid = GridSpec(dx=0.05)
    traj = run(prob, grid, "ddg_k0", horizon=0.0)
    np.testing.assert_allclose(traj.cell_values(),
                               project_initial(prob, grid, 0)[0])


def test_run_snapshot_interpolation_times():
    prob = builtin_example("ex1", 0.5, 1.0)
    grid = GridSpec(dx=0.05)
    traj = run(prob, grid, "ddg_k0", horizon=0.01,
               snapshot_times=[0.0, 0.005, 0.01])
    assert traj.times == pytest.approx([0.0, 0.005, 0.01])


def test_run_aborts_on_nonfinite_state():
    prob = builtin_example("ex1", 0.5, 1.0)
    prob.initial_datum = lambda x: np.where(np.abs(np.asarray(x)) < 0.1,
                                            np.nan, 0.0)
    prob.datum_breakpoints = ()
    grid = GridSpec(dx=0.05)
    with pytest.raises(SolverAbort):
        run(prob, grid, "ddg_k0", horizon=0.01)


def test_fractional_term_changes_the_solution():
    """Switching the nonlocal term on must move the profile measurably."""
    grid = GridSpec(dx=1.0 / 40.0)
    sols = {}
    for b in (0.0, 1.0):
        prob = builtin_example("ex1", 0.5, b)
        sols[b] = run(prob, grid, "ddg_k0", horizon=0.15).cell_values()
    dist = grid.dx * np.abs(sols[0.0] - sols[1.0]).sum()
    assert dist > 10 * np.finfo(float).eps * np.abs(sols[0.0]).max()
    assert dist > 1e-3      # the effect is macroscopic, not roundoff


def test_translation_invariance_periodic():
    """Shifting the datum by one cell shifts every later state by one cell."""
    prob = builtin_example("ex1", 0.5, 1.0)
    grid = GridSpec(dx=1.0 / 20.0, x_left=-2.0, x_right=2.0)
    base = run(prob, grid, "ddg_k0", horizon=0.02, boundary="periodic",
               store_full=True)
    prob_s = builtin_example("ex1", 0.5, 1.0)
    prob_s.initial_datum = lambda x: prob.initial_datum(np.asarray(x) - grid.dx)
    prob_s.datum_breakpoints = tuple(b + grid.dx for b in
                                     prob.datum_breakpoints)
    shifted = run(prob_s, grid, "ddg_k0", horizon=0.02, boundary="periodic",
                  store_full=True)
    for a, b in zip(base.full_states, shifted.full_states):
        np.testing.assert_allclose(np.roll(a, 1), b, atol=1e-13)


def test_l1_time_increments_do_not_grow():
    prob = builtin_example("ex1", 0.5, 1.0)
    grid = GridSpec(dx=1.0 / 40.0, x_left=-2.0, x_right=2.0)
    traj = run(prob, grid, "ddg_k0", horizon=0.03, boundary="periodic")
    inc = traj.ledger["l1_time_increment"][:-1]   # final short step excluded
    assert np.all(inc <= inc[0] + 1e-10)


def test_front_location_self_reference():
    """Fine-grid self-reference pins the shock front within two cells."""
    sols = {}
    for nd in (640, 1280):
        prob = builtin_example("ex1", 0.5, 0.0)
        grid = GridSpec(dx=1.0 / nd)
        sols[nd] = (run(prob, grid, "ddg_k0", horizon=0.15).cell_values(),
                    grid.centers)

    def front(u, x):
        # rightmost downward crossing of the half-height level
        idx = np.where((u[:-1] >= 0.3) & (u[1:] < 0.3))[0][-1]
        x0, x1 = x[idx], x[idx + 1]
        return x0 + (u[idx] - 0.3) / (u[idx] - u[idx + 1]) * (x1 - x0)

    f_coarse = front(*sols[640])
    f_fine = front(*sols[1280])
    assert abs(f_coarse - f_fine) <= 2.0 / 640.0
