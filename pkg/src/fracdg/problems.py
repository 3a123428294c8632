"""Equation data for u_t + f(u)_x = (a(u) u_x)_x + b L[u].

A problem bundles the convective flux f, the (possibly strongly degenerate)
diffusion coefficient a >= 0, the fractional-diffusion parameters (lambda, b),
and the initial datum.  The antiderivatives A(u) = int_0^u a and
g(u) = int_0^u sqrt(a) that the schemes consume are precomputed exactly from
the piecewise representation of a.

Three builtin benchmark problems are provided ("ex1", "ex2", "ex3"):
a Burgers flux with a degenerate piecewise-linear diffusion ramp and a
trapezoid datum, a rescaled variant with a monotone ramp datum, and a linear
transport-diffusion problem with a Gaussian datum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grids import GridSpec
from .piecewise import PiecewiseFunction, constant, polynomial

__all__ = [
    "ProblemSpec",
    "DerivedCoefficients",
    "builtin_example",
    "eval_coefficients",
    "project_initial",
    "legendre_basis_values",
]

log = logging.getLogger(__name__)


@dataclass
class ProblemSpec:
    """Data of one initial-value problem.

    ``fractional_order`` is the exponent of the Levy symbol -|xi|^lambda and
    must lie strictly inside (0, 1); ``fractional_weight`` is the constant
    b >= 0 multiplying the nonlocal term.  ``linear_speed`` is set only for
    linear problems f(u) = c*u and enables the exact Fourier reference.
    """

    name: str
    convective_flux: PiecewiseFunction
    diffusion_coefficient: PiecewiseFunction
    initial_datum: Callable[[np.ndarray], np.ndarray]
    fractional_order: float = 0.5
    fractional_weight: float = 0.0
    linear_speed: float | None = None
    domain_half_width: float = 1.0
    state_range: tuple[float, float] | None = None
    datum_breakpoints: tuple[float, ...] = ()
    derived: "DerivedCoefficients" = field(init=False, repr=False)

    def __post_init__(self):
        if not (0.0 < self.fractional_order < 1.0):
            raise ValueError("fractional order must lie in (0, 1)")
        if self.fractional_weight < 0.0:
            raise ValueError("fractional weight must be nonnegative")
        f0 = self.convective_flux(0.0)
        if abs(f0) > 1e-13:
            raise ValueError(f"convective flux must vanish at 0, got f(0)={f0}")
        if self.state_range is None:
            self.state_range = _datum_range(self.initial_datum,
                                            self.domain_half_width,
                                            self.datum_breakpoints)
        self.derived = DerivedCoefficients.from_problem(self)
        self._warned_clamp = False

    # coefficient evaluation clamps to the admissible state range (the
    # explicit schemes respect the range; only intermediate high-order
    # stages can overshoot, and only slightly)
    def clamp(self, u):
        lo, hi = self.state_range
        u = np.asarray(u, dtype=float)
        if np.any(u < lo - 1e-9) or np.any(u > hi + 1e-9):
            if not self._warned_clamp:
                log.warning(
                    "problem %r: state outside admissible range [%g, %g]; "
                    "coefficient arguments clamped", self.name, lo, hi)
                self._warned_clamp = True
        return np.clip(u, lo, hi)

    def f(self, u):
        return self.convective_flux(self.clamp(u))

    def a(self, u):
        return self.diffusion_coefficient(self.clamp(u))

    def A(self, u):
        return self.derived.A(self.clamp(u))

    def g(self, u):
        return self.derived.g(self.clamp(u))


@dataclass(frozen=True)
class DerivedCoefficients:
    """Antiderivatives and bounds derived from (f, a).

    A(u) = int_0^u a  and  g(u) = int_0^u sqrt(a), both continuous across
    coefficient breakpoints; ``lipschitz_f`` and ``sup_a`` are taken over the
    admissible state range and feed the CFL bound.
    """

    A: PiecewiseFunction
    g: PiecewiseFunction
    a_prime: PiecewiseFunction
    lipschitz_f: float
    sup_a: float

    @classmethod
    def from_problem(cls, prob: "ProblemSpec"):
        a = prob.diffusion_coefficient
        A = a.antiderivative(base=0.0)
        g = a.sqrt().antiderivative(base=0.0)
        lo, hi = prob.state_range
        fp = prob.convective_flux.derivative()
        grid = _range_samples(fp, lo, hi)
        lip = float(np.max(np.abs(fp(grid)))) if grid.size else 0.0
        agrid = _range_samples(a, lo, hi)
        sup_a = float(np.max(a(agrid))) if agrid.size else 0.0
        if np.any(a(agrid) < -1e-13):
            raise ValueError("diffusion coefficient must be nonnegative")
        return cls(A=A, g=g, a_prime=a.derivative(), lipschitz_f=lip, sup_a=sup_a)


def _range_samples(func, lo, hi, n=513):
    pts = np.linspace(lo, hi, n)
    extra = [b for b in np.atleast_1d(func.breakpoints) if lo <= b <= hi]
    return np.unique(np.concatenate([pts, extra])) if extra else pts


def _datum_range(u0, half_width, breaks, n=4097):
    x = np.linspace(-half_width, half_width, n)
    if breaks:
        x = np.unique(np.concatenate([x, np.asarray(breaks, dtype=float)]))
    v = np.asarray(u0(x), dtype=float)
    # the zero-Dirichlet exterior is part of the admissible data
    return min(float(v.min()), 0.0), max(float(v.max()), 0.0)


def eval_coefficients(spec: ProblemSpec, u):
    """Evaluate (f(u), a(u), A(u), g(u)) at one state or an array of states."""
    return spec.f(u), spec.a(u), spec.A(u), spec.g(u)


# ---------------------------------------------------------------------------
# builtin benchmark problems
# ---------------------------------------------------------------------------

def _ramp_a1():
    # 0 below 0.5, ramp 2.5*(u - 0.5) on (0.5, 0.6], 0.25 above
    return PiecewiseFunction(
        [0.5, 0.6],
        [[(0.0, 0.0)], [(2.5, 1.0)], [(0.25, 0.0)]],
    )


def _trapezoid(x):
    x = np.asarray(x, dtype=float)
    return np.clip(np.minimum(5.0 * x + 2.5, 2.5 - 5.0 * x), 0.0, 1.0)


def _down_ramp(x):
    x = np.asarray(x, dtype=float)
    return np.clip(-2.5 * x, 0.0, 1.0)


def builtin_example(name: str, fractional_order=0.5, fractional_weight=1.0) -> ProblemSpec:
    """Return one of the builtin benchmark problems ("ex1", "ex2", "ex3")."""
    key = name.lower()
    if key == "ex1":
        return ProblemSpec(
            name="ex1",
            convective_flux=polynomial([0.0, 0.0, 1.0]),
            diffusion_coefficient=_ramp_a1(),
            initial_datum=_trapezoid,
            fractional_order=fractional_order,
            fractional_weight=fractional_weight,
            datum_breakpoints=(-0.5, -0.3, 0.3, 0.5),
        )
    if key == "ex2":
        return ProblemSpec(
            name="ex2",
            convective_flux=polynomial([0.0, 0.0, 0.25]),
            diffusion_coefficient=_ramp_a1().scaled(4.0),
            initial_datum=_down_ramp,
            fractional_order=fractional_order,
            fractional_weight=fractional_weight,
            datum_breakpoints=(-0.4, 0.0),
        )
    if key == "ex3":
        return ProblemSpec(
            name="ex3",
            convective_flux=polynomial([0.0, 1.0]),
            diffusion_coefficient=constant(0.1),
            initial_datum=lambda x: np.exp(-((np.asarray(x, dtype=float) / 0.1) ** 2)),
            fractional_order=fractional_order,
            fractional_weight=fractional_weight,
            linear_speed=1.0,
        )
    raise ValueError(f"unknown builtin example {name!r}")


# ---------------------------------------------------------------------------
# Legendre projection of the initial datum
# ---------------------------------------------------------------------------

def legendre_basis_values(degree: int, xi):
    """Values of the Legendre basis P_0..P_degree at reference points xi."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty((degree + 1, xi.size))
    for p in range(degree + 1):
        c = np.zeros(p + 1)
        c[p] = 1.0
        out[p] = np.polynomial.legendre.legval(xi, c)
    return out


def project_initial(spec: ProblemSpec, grid: GridSpec, degree: int = 0) -> np.ndarray:
    """L2 projection of the initial datum onto piecewise polynomials.

    Returns modal coefficients of shape (degree+1, n_cells) with
    ``U[p, i] = (2p+1)/dx * int_{I_i} u0 phi_p``.  Cells are split at datum
    breakpoints before quadrature so piecewise-linear data project exactly.
    """
    nq = max(degree + 1, 5)
    gx, gw = np.polynomial.legendre.leggauss(nq)
    edges = grid.edges
    breaks = np.asarray(spec.datum_breakpoints, dtype=float)
    coeffs = np.zeros((degree + 1, grid.n_cells))
    for i in range(grid.n_cells):
        xl, xr = edges[i], edges[i + 1]
        inner = breaks[(breaks > xl + 1e-14) & (breaks < xr - 1e-14)]
        seams = np.concatenate([[xl], inner, [xr]])
        for sl, sr in zip(seams[:-1], seams[1:]):
            xq = 0.5 * (sl + sr) + 0.5 * (sr - sl) * gx
            u0q = np.asarray(spec.initial_datum(xq), dtype=float)
            xi = 2.0 * (xq - xl) / grid.dx - 1.0
            phi = legendre_basis_values(degree, xi)
            # int over the seam in physical coords, then mass-matrix scaling
            seg = 0.5 * (sr - sl) * (phi * (gw * u0q)).sum(axis=1)
            coeffs[:, i] += seg
    scale = (2.0 * np.arange(degree + 1) + 1.0) / grid.dx
    return coeffs * scale[:, None]
