import numpy as np
import pytest
from scipy.integrate import quad

from fracdg.piecewise import PiecewiseFunction, constant, polynomial


def ramp():
    # 0 below 0.5, 2.5*(u-0.5) on (0.5, 0.6], 0.25 above
    return PiecewiseFunction([0.5, 0.6],
                             [[(0.0, 0.0)], [(2.5, 1.0)], [(0.25, 0.0)]])


def test_eval_vectorized_and_scalar():
    f = ramp()
    assert f(0.55) == pytest.approx(0.125)
    np.testing.assert_allclose(f(np.array([0.0, 0.55, 1.0])),
                               [0.0, 0.125, 0.25])


def test_antiderivative_matches_quadrature():
    f = ramp()
    F = f.antiderivative(base=0.0)
    for u in np.linspace(-0.5, 1.5, 41):
        ref = quad(f, 0.0, u, points=[0.5, 0.6], limit=200)[0]
        assert F(u) == pytest.approx(ref, abs=1e-12)


def test_antiderivative_continuity_at_breakpoints():
    F = ramp().antiderivative()
    for b in (0.5, 0.6):
        assert F(b - 1e-13) == pytest.approx(F(b + 1e-13), abs=1e-11)


def test_sqrt_of_ramp_and_constant():
    g = ramp().sqrt()
    assert g(0.55) == pytest.approx(np.sqrt(2.5 * 0.05))
    assert g(0.3) == 0.0
    assert g(0.8) == pytest.approx(0.5)
    assert constant(4.0).sqrt()(1.23) == pytest.approx(2.0)


def test_sqrt_rejects_offset_affine_piece():
    f = PiecewiseFunction([0.0], [[(1.0, 0.0)], [(1.0, 0.0), (1.0, 1.0)]])
    with pytest.raises(ValueError):
        f.sqrt()


def test_derivative_of_polynomial():
    p = polynomial([0.0, 0.0, 1.0])      # u^2
    d = p.derivative()
    np.testing.assert_allclose(d(np.array([-1.0, 0.5, 2.0])), [-2.0, 1.0, 4.0])


def test_critical_points_of_quadratic():
    p = polynomial([0.0, 0.0, 1.0])
    assert p.critical_points(-2.0, 2.0) == pytest.approx([0.0])
    assert p.critical_points(0.5, 2.0) == []


def test_breakpoints_must_increase():
    with pytest.raises(ValueError):
        PiecewiseFunction([0.6, 0.5], [[(0.0, 0.0)]] * 3)
