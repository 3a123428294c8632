import numpy as np
import pytest
from scipy.integrate import quad

from fracdg.grids import GridSpec
from fracdg.piecewise import constant, polynomial
from fracdg.problems import (ProblemSpec, builtin_example, eval_coefficients,
                             project_initial)


@pytest.fixture(scope="module")
def examples():
    return {name: builtin_example(name) for name in ("ex1", "ex2", "ex3")}


def test_ex1_coefficients_at_055(examples):
    f, a, A, g = eval_coefficients(examples["ex1"], 0.55)
    assert a == pytest.approx(2.5 * 0.55 - 1.25)      # = 0.125
    assert f == pytest.approx(0.55**2)


def test_zero_diffusion_gives_zero_antiderivatives():
    prob = ProblemSpec(name="adv", convective_flux=polynomial([0.0, 1.0]),
                       diffusion_coefficient=constant(0.0),
                       initial_datum=lambda x: np.exp(-np.asarray(x) ** 2),
                       linear_speed=1.0)
    for u in np.linspace(-1, 1, 11):
        assert prob.A(u) == 0.0
        assert prob.g(u) == 0.0


def test_ex1_antiderivative_value(examples):
    # symbolic piecewise integration of the diffusion ramp, cross-checked by
    # quadrature below in test_antiderivative_matches_quadrature
    assert examples["ex1"].A(0.7) == pytest.approx(
        1.25 * (0.6 - 0.5) ** 2 + 0.25 * (0.7 - 0.6), abs=1e-14)


def test_ex2_scalings(examples):
    assert examples["ex2"].f(0.55) == pytest.approx(0.55**2 / 4.0)
    assert examples["ex2"].a(0.55) == pytest.approx(4.0 * 0.125)


def test_ex3_data(examples):
    assert examples["ex3"].initial_datum(0.0) == pytest.approx(1.0)
    assert np.all(examples["ex3"].a(np.linspace(0, 1, 7)) == 0.1)
    assert examples["ex3"].linear_speed == 1.0


def test_ex1_datum_ramp(examples):
    assert examples["ex1"].initial_datum(0.4) == pytest.approx(2.5 - 5 * 0.4)


def test_flux_vanishes_at_zero(examples):
    for prob in examples.values():
        assert prob.f(0.0) == 0.0


def test_unknown_example_rejected():
    with pytest.raises(ValueError):
        builtin_example("ex9")


def test_invalid_fractional_order():
    with pytest.raises(ValueError):
        builtin_example("ex1", fractional_order=1.0)
    with pytest.raises(ValueError):
        builtin_example("ex1", fractional_weight=-1.0)


@pytest.mark.parametrize("name", ["ex1", "ex2", "ex3"])
def test_antiderivative_matches_quadrature(name, examples):
    """A(u) = int_0^u a to 1e-10 and a >= 0 on 1000 random states."""
    prob = examples[name]
    rng = np.random.default_rng(1234)
    us = rng.uniform(-2.0, 2.0, size=1000)
    breaks = list(prob.diffusion_coefficient.breakpoints)
    a_clamped = lambda s: prob.diffusion_coefficient(np.clip(s, -2, 2))
    avals = prob.diffusion_coefficient(us)
    assert np.all(avals >= 0.0)
    for u in us[::50]:
        ref = quad(a_clamped, 0.0, u, points=[b for b in breaks if
                                              min(0, u) < b < max(0, u)],
                   limit=200)[0]
        assert prob.derived.A(u) == pytest.approx(ref, abs=1e-10)


def test_g_squared_slope_equals_A_slope(examples):
    """(g')^2 = A' away from coefficient breakpoints."""
    prob = examples["ex1"]
    gp = prob.derived.g.derivative()
    us = np.linspace(0.51, 0.99, 25)
    np.testing.assert_allclose(gp(us) ** 2, prob.a(us), atol=1e-12)


# -- initial projection -------------------------------------------------------

def test_projection_reproduces_constants():
    prob = builtin_example("ex3")
    prob.initial_datum = lambda x: np.full_like(np.asarray(x, dtype=float), 1.0)
    grid = GridSpec(dx=0.2)
    for k in (0, 1, 2):
        U = project_initial(prob, grid, k)
        np.testing.assert_allclose(U[0], 1.0, atol=1e-12)
        if k:
            np.testing.assert_allclose(U[1:], 0.0, atol=1e-12)


def test_projection_of_linear_function_single_cell():
    prob = builtin_example("ex3")
    prob.initial_datum = lambda x: np.asarray(x, dtype=float)
    prob.datum_breakpoints = ()
    dx = 0.25
    grid = GridSpec(dx=dx, x_left=0.0, x_right=dx, padding_cells=1)
    U = project_initial(prob, grid, 1)
    assert U[0, 0] == pytest.approx(dx / 2.0)       # cell mean
    assert U[1, 0] == pytest.approx(dx / 2.0)       # slope mode


def test_projection_exact_on_datum_ramp():
    """Cells split at datum breakpoints make piecewise-linear data exact."""
    prob = builtin_example("ex1")
    grid = GridSpec(dx=0.2, x_left=-0.5, x_right=0.5, padding_cells=5)
    U = project_initial(prob, grid, 0)
    # cell [-0.5, -0.3] averages the up-ramp 5x + 2.5 exactly
    assert U[0, 0] == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_projection_reproduces_polynomials(k):
    """Any polynomial of degree <= k projects onto itself."""
    rng = np.random.default_rng(k)
    coeffs = rng.normal(size=k + 1)
    prob = builtin_example("ex3")
    prob.initial_datum = lambda x: np.polyval(coeffs, np.asarray(x, dtype=float))
    prob.datum_breakpoints = ()
    grid = GridSpec(dx=0.25)
    U = project_initial(prob, grid, k)
    xq = np.linspace(-1 + 1e-9, 1 - 1e-9, 97)
    from fracdg.solvers import DGState
    vals = DGState(U).eval_at(xq, grid)
    ref = np.polyval(coeffs, xq)
    scale = max(np.abs(ref).max(), 1.0)
    np.testing.assert_allclose(vals, ref, atol=1e-12 * scale)


def test_state_clamp_warns_once(caplog):
    prob = builtin_example("ex1")
    with caplog.at_level("WARNING"):
        prob.a(np.array([5.0]))
        prob.a(np.array([6.0]))
    assert sum("clamped" in r.message for r in caplog.records) == 1
