import numpy as np
import pytest

from fracdg.analysis import (bilinear_interpolant, check_cell_entropy,
                             convergence_rate, convergence_study,
                             default_entropy_levels, error_norms,
                             holder_audit, restrict_cell_averages,
                             stability_monitors)
from fracdg.fluxes import ConvectiveFlux
from fracdg.fractional import FractionalParams, assemble_weights
from fracdg.grids import GridSpec
from fracdg.problems import builtin_example
from fracdg.solvers import run


# -- error norms and rates ------------------------------------------------------

def test_error_norm_zero_for_identical_inputs():
    u = np.linspace(0, 1, 11)
    E, R = error_norms(u, u, 1, 0.1)
    assert E == 0.0 and R == 0.0


def test_error_norm_constant_difference():
    # measure-2 window, |diff| = 0.1, p = 1: E = 0.2
    n = 20
    dx = 2.0 / n
    E, _ = error_norms(np.full(n, 0.6), np.full(n, 0.5), 1, dx)
    assert E == pytest.approx(0.2)


def test_rate_halving_errors():
    assert convergence_rate(2.0, 1.0) == pytest.approx(1.0)


def test_rate_reported_table_values():
    # first-block pair and the quadratic-element pair of the reported table
    assert convergence_rate(0.0706, 0.0361) == pytest.approx(0.9676, abs=2e-4)
    assert round(convergence_rate(0.0706, 0.0361), 2) == 0.97
    assert convergence_rate(0.009000, 0.002300) == pytest.approx(1.9684,
                                                                 abs=2e-4)


def test_rate_rejects_nonpositive():
    with pytest.raises(ValueError):
        convergence_rate(0.0, 1.0)


def test_scale_covariance():
    """Scaling both solutions by s scales E1 by s and leaves alpha fixed."""
    rng = np.random.default_rng(0)
    u1, r1 = rng.normal(size=64), rng.normal(size=64)
    u2, r2 = rng.normal(size=128), rng.normal(size=128)
    E1c, _ = error_norms(u1, r1, 1, 1.0 / 32)
    E1f, _ = error_norms(u2, r2, 1, 1.0 / 64)
    s = 3.7
    E1cs, _ = error_norms(s * u1, s * r1, 1, 1.0 / 32)
    E1fs, _ = error_norms(s * u2, s * r2, 1, 1.0 / 64)
    assert E1cs == pytest.approx(s * E1c, rel=1e-12)
    assert convergence_rate(E1cs, E1fs) == pytest.approx(
        convergence_rate(E1c, E1f), abs=1e-12)


def test_restriction_averages_pairs():
    np.testing.assert_allclose(restrict_cell_averages(np.arange(8.0), 2),
                               [0.5, 2.5, 4.5, 6.5])


def test_transport_study_first_order():
    """Pure transport with the upwind reduction shows first-order rates."""
    from fracdg.piecewise import constant, polynomial
    from fracdg.problems import ProblemSpec

    prob = ProblemSpec(name="transport",
                       convective_flux=polynomial([0.0, 1.0]),
                       diffusion_coefficient=constant(0.0),
                       initial_datum=lambda x: np.exp(
                           -(((np.asarray(x) + 0.125) / 0.3) ** 2)),
                       fractional_weight=0.0, linear_speed=1.0)
    T = 0.25

    def run_one(dx):
        grid = GridSpec(dx=dx)
        traj = run(prob, grid, "ddg_k0", horizon=T)
        return traj.cell_values(), grid

    ref = ("oracle", lambda x: prob.initial_datum(np.asarray(x) - T))
    report = convergence_study(run_one, [1.0 / 40, 1.0 / 80, 1.0 / 160,
                                         1.0 / 320], ref, p_norms=(1,))
    rates = report.rates(1)
    assert len(rates) == 3
    assert all(0.8 <= r <= 1.1 for r in rates), rates


def test_study_rejects_non_halving_grids():
    with pytest.raises(ValueError):
        convergence_study(lambda dx: (np.zeros(4), GridSpec(dx=dx)),
                          [0.1, 0.03], ("oracle", lambda x: 0 * x))


# -- entropy ---------------------------------------------------------------------

def _entropy_setup():
    from fracdg.solvers import scheme_weights

    prob = builtin_example("ex1", 0.5, 1.0)
    grid = GridSpec(dx=1.0 / 40.0, x_left=-2.0, x_right=2.0)
    traj = run(prob, grid, "ddg_k0", horizon=0.01, boundary="periodic",
               store_full=True)
    W = scheme_weights(prob, grid)
    flux = ConvectiveFlux("eo", prob.convective_flux, prob.state_range)
    return prob, traj, W, flux


def test_entropy_affine_regime_levels():
    """Levels outside the state range reduce the inequality to conservation,
    so the residual is pure roundoff."""
    prob, traj, W, flux = _entropy_setup()
    hist = traj.full_states
    for level in (-3.0, 4.0):
        audit = check_cell_entropy(hist[0], hist[1], [level], prob, W, flux,
                                   traj.full_times[1], "periodic")
        assert abs(audit.worst_residual) <= 1e-12


def test_entropy_interior_levels_nonpositive():
    prob, traj, W, flux = _entropy_setup()
    hist = traj.full_states
    dts = np.diff(traj.full_times)       # the final step is shortened
    levels = np.linspace(0.1, 0.9, 9)
    for n in range(min(10, hist.shape[0] - 1)):
        audit = check_cell_entropy(hist[n], hist[n + 1], levels, prob, W,
                                   flux, dts[n], "periodic")
        assert audit.worst_residual <= 2e-12


def test_default_entropy_levels_span_range():
    levels = default_entropy_levels(np.array([0.0, 0.2, 1.0, 0.3]))
    assert levels[0] < 0.0 and levels[-1] > 1.0
    assert np.all((levels[1:-1] > 0.0) & (levels[1:-1] < 1.0))


# -- monitors and regularity -----------------------------------------------------

def test_monitors_flat_for_steady_state():
    prob = builtin_example("ex1", 0.5, 1.0)
    grid = GridSpec(dx=0.1, x_left=-2.0, x_right=2.0)
    prob.initial_datum = lambda x: np.full_like(np.asarray(x, float), 0.7)
    prob.datum_breakpoints = ()
    traj = run(prob, grid, "ddg_k0", horizon=0.02, boundary="periodic",
               store_full=True)
    mon = stability_monitors(traj)
    assert not any(mon["flags"].values())
    np.testing.assert_allclose(np.diff(mon["linf"]), 0.0, atol=1e-14)


def test_monitors_ex2_max_bounded_by_datum():
    prob = builtin_example("ex2", 0.5, 1.0)
    grid = GridSpec(dx=1.0 / 40.0)
    traj = run(prob, grid, "ddg_k0", horizon=0.05, store_full=True)
    mon = stability_monitors(traj)
    assert np.all(mon["linf"] <= 1.0 + 1e-12)
    assert not mon["flags"]["bv"]


def test_holder_estimate_zero_cases():
    prob = builtin_example("ex1", 0.5, 1.0)
    grid = GridSpec(dx=0.1, x_left=-2.0, x_right=2.0)
    prob.initial_datum = lambda x: np.full_like(np.asarray(x, float), 0.3)
    prob.datum_breakpoints = ()
    traj = run(prob, grid, "ddg_k0", horizon=0.02, boundary="periodic",
               store_full=True)
    assert holder_audit(traj, prob) == pytest.approx(0.0, abs=1e-13)
    # degenerate diffusion keeps A identically zero below the ramp
    prob2 = builtin_example("ex1", 0.5, 0.0)
    prob2.initial_datum = lambda x: 0.4 * np.exp(-((np.asarray(x) / 0.3) ** 2))
    prob2.datum_breakpoints = ()
    traj2 = run(prob2, GridSpec(dx=0.05), "ddg_k0", horizon=0.02,
                store_full=True)
    assert holder_audit(traj2, prob2) == pytest.approx(0.0, abs=1e-13)


def test_holder_estimate_grid_stable():
    """The fitted space-time regularity constant of A(u) is grid-stable."""
    ests = {}
    for nd in (40, 80, 160):
        prob = builtin_example("ex1", 0.5, 1.0)
        grid = GridSpec(dx=1.0 / nd)
        traj = run(prob, grid, "ddg_k0", horizon=0.05, store_full=True)
        ests[nd] = holder_audit(traj, prob, seed=12)
    vals = list(ests.values())
    assert max(vals) / min(vals) < 2.0, ests


# -- bilinear interpolant ---------------------------------------------------------

def _toy_trajectory():
    prob = builtin_example("ex1", 0.5, 1.0)
    grid = GridSpec(dx=0.25, x_left=-1.0, x_right=1.0)
    return run(prob, grid, "ddg_k0", horizon=0.005, store_full=True), grid


def test_bilinear_nodes_exact():
    traj, grid = _toy_trajectory()
    t_n = traj.full_times[1]
    x_i = grid.x_left + 3 * grid.dx
    got = bilinear_interpolant(traj, x_i, t_n)
    assert got == pytest.approx(traj.full_states[1][3], abs=1e-14)


def test_bilinear_rectangle_center_is_corner_mean():
    traj, grid = _toy_trajectory()
    t0, t1 = traj.full_times[0], traj.full_times[1]
    xc = grid.x_left + 3.5 * grid.dx
    tc = 0.5 * (t0 + t1)
    corners = [traj.full_states[0][3], traj.full_states[0][4],
               traj.full_states[1][3], traj.full_states[1][4]]
    assert bilinear_interpolant(traj, xc, tc) == pytest.approx(
        np.mean(corners), abs=1e-14)


def test_bilinear_partition_of_unity():
    traj, grid = _toy_trajectory()
    traj.full_states = np.full_like(traj.full_states, 2.5)
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.uniform(grid.x_left, grid.x_right - grid.dx)
        t = rng.uniform(0.0, traj.full_times[-1])
        assert bilinear_interpolant(traj, x, t) == pytest.approx(2.5)


def test_bilinear_out_of_window_rejected():
    traj, grid = _toy_trajectory()
    with pytest.raises(ValueError):
        bilinear_interpolant(traj, 5.0, 0.0)
    with pytest.raises(ValueError):
        bilinear_interpolant(traj, 0.0, 1e9)
