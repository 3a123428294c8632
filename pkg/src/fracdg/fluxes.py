"""Interface fluxes: monotone convective E-fluxes, the direct (DDG) diffusion
flux with its admissibility certificate, and the local (LDG) flux pair.

An E-flux is a consistent two-point flux, nondecreasing in its first and
nonincreasing in its second argument, satisfying
int_{u-}^{u+} (f(s) - fhat(u-, u+)) ds >= 0 across every interface.  The
Engquist-Osher flux is the default: its split form

    fhat(a, b) = f_plus(a) + f_minus(b) + f(0),
    f_pm(u) = int_0^u max/min(f'(s), 0) ds,

is monotone for any Lipschitz f.  The split antiderivatives are evaluated
exactly from a sign-refined breakpoint table (plain flux evaluations per
signed piece), so no quadrature error enters the flux.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .piecewise import PiecewiseFunction

__all__ = [
    "ConvectiveFlux",
    "DDGFluxParams",
    "LDGFluxParams",
    "AdmissibilityResult",
    "convective_flux",
    "ddg_diffusion_flux",
    "ldg_flux_pair",
    "ldg_c11",
    "check_admissibility",
]

log = logging.getLogger(__name__)

_KINDS = ("eo", "godunov", "lf", "linear_upwind")


class ConvectiveFlux:
    """Two-point monotone flux of a given kind over a state range.

    Parameters
    ----------
    kind : 'eo', 'godunov', 'lf' or 'linear_upwind'.
    f : flux function; the exact split/extremum tables are used when this is
        a :class:`~fracdg.piecewise.PiecewiseFunction`.
    state_range : admissible interval, used for the derivative bounds and the
        Lax-Friedrichs viscosity constant.
    fprime : derivative of f; required for plain callables.
    linear_speed : wave speed, only for kind 'linear_upwind'.
    """

    def __init__(self, kind, f, state_range, fprime=None, linear_speed=None):
        if kind not in _KINDS:
            raise ValueError(f"unknown flux kind {kind!r}")
        self.kind = kind
        self.f = f
        self.state_range = (float(state_range[0]), float(state_range[1]))
        self.linear_speed = linear_speed
        if kind == "linear_upwind" and linear_speed is None:
            raise ValueError("linear_upwind needs the wave speed")
        self._setup_table(f, fprime)

    def _setup_table(self, f, fprime):
        # table range always contains 0 so the split antiderivatives anchor
        # at the state where f vanishes
        lo = min(self.state_range[0], 0.0)
        hi = max(self.state_range[1], 0.0)
        if isinstance(f, PiecewiseFunction):
            pad = 1e-9 * max(1.0, hi - lo)
            crits = f.critical_points(lo - pad, hi + pad)
            inner = [float(b) for b in f.breakpoints if lo < b < hi]
            self._fprime = f.derivative()
        else:
            if fprime is None:
                raise ValueError("a plain-callable flux needs fprime")
            self._fprime = fprime
            crits = _scan_roots(fprime, lo, hi)
            inner = []
        knots = sorted({lo, hi, 0.0, *crits, *inner})
        self._knots = np.asarray([k for k in knots if lo <= k <= hi])
        self._zero_idx = int(np.searchsorted(self._knots, 0.0))
        mids = 0.5 * (self._knots[:-1] + self._knots[1:])
        self._piece_sign = np.sign(np.asarray(self._fprime(mids), dtype=float))
        fk = np.asarray(f(self._knots), dtype=float)
        self._f_knots = fk
        dplus = np.where(self._piece_sign > 0, np.diff(fk), 0.0)
        dminus = np.where(self._piece_sign < 0, np.diff(fk), 0.0)
        self._cum_plus = np.concatenate([[0.0], np.cumsum(dplus)])
        self._cum_minus = np.concatenate([[0.0], np.cumsum(dminus)])
        self._cum_plus -= self._cum_plus[self._zero_idx]
        self._cum_minus -= self._cum_minus[self._zero_idx]
        # derivative bounds over the admissible range, densely sampled
        sl, sh = self.state_range
        dense = np.unique(np.concatenate([np.linspace(sl, sh, 2001), self._knots]))
        dense = dense[(dense >= sl) & (dense <= sh)]
        dvals = np.asarray(self._fprime(dense), dtype=float)
        self.max_fprime = float(np.max(np.abs(dvals))) if dense.size else 0.0
        self.bound_d1 = float(np.max(dvals.clip(min=0.0))) if dense.size else 0.0
        self.bound_d2 = float(np.max((-dvals).clip(min=0.0))) if dense.size else 0.0
        if self.kind == "lf":
            self.bound_d1 = self.bound_d2 = self.max_fprime
        elif self.kind == "linear_upwind":
            c = float(self.linear_speed)
            self.bound_d1, self.bound_d2 = max(c, 0.0), max(-c, 0.0)
            self.max_fprime = abs(c)

    # -- split antiderivatives (exact: flux evaluations per signed piece) -----

    def _split(self, u, which):
        u = np.asarray(u, dtype=float)
        uc = np.clip(u, self._knots[0], self._knots[-1])
        j = np.clip(np.searchsorted(self._knots, uc, side="right") - 1, 0,
                    len(self._knots) - 2)
        cum = self._cum_plus if which > 0 else self._cum_minus
        want = self._piece_sign[j] > 0 if which > 0 else self._piece_sign[j] < 0
        partial = np.where(want,
                           np.asarray(self.f(uc), dtype=float) - self._f_knots[j],
                           0.0)
        return cum[j] + partial

    def f_plus(self, u):
        """int_0^u max(f'(s), 0) ds, exact on the table range."""
        return self._split(u, +1)

    def f_minus(self, u):
        """int_0^u min(f'(s), 0) ds, exact on the table range."""
        return self._split(u, -1)

    # -- evaluation -------------------------------------------------------------

    def __call__(self, u_minus, u_plus):
        um = np.asarray(u_minus, dtype=float)
        up = np.asarray(u_plus, dtype=float)
        if self.kind == "eo":
            f0 = float(np.asarray(self.f(0.0), dtype=float))
            return self.f_plus(um) + self.f_minus(up) + f0
        if self.kind == "godunov":
            return self._godunov(um, up)
        if self.kind == "lf":
            theta = self.max_fprime
            return 0.5 * (np.asarray(self.f(um), dtype=float)
                          + np.asarray(self.f(up), dtype=float)) \
                - 0.5 * theta * (up - um)
        c = float(self.linear_speed)
        return c * 0.5 * (um + up) - 0.5 * abs(c) * (up - um)

    def _godunov(self, um, up):
        fm = np.asarray(self.f(um), dtype=float)
        fp = np.asarray(self.f(up), dtype=float)
        lo = np.minimum(um, up)
        hi = np.maximum(um, up)
        vmin = np.minimum(fm, fp)
        vmax = np.maximum(fm, fp)
        for x in self._knots[1:-1]:
            inside = (lo < x) & (x < hi)
            if np.any(inside):
                fx = float(np.asarray(self.f(x), dtype=float))
                vmin = np.where(inside, np.minimum(vmin, fx), vmin)
                vmax = np.where(inside, np.maximum(vmax, fx), vmax)
        return np.where(um <= up, vmin, vmax)

    @property
    def lipschitz_sum(self):
        """Bound on |d1 fhat| + |d2 fhat| entering the CFL condition."""
        if self.kind == "lf":
            return 2.0 * self.max_fprime
        return self.bound_d1 + self.bound_d2


def _scan_roots(fprime, lo, hi, n=2001):
    from scipy.optimize import brentq

    xs = np.linspace(lo, hi, n)
    vals = np.asarray(fprime(xs), dtype=float)
    roots = []
    for i in range(n - 1):
        if vals[i] == 0.0:
            roots.append(float(xs[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            roots.append(float(brentq(fprime, xs[i], xs[i + 1])))
    return sorted(set(roots))


def convective_flux(flux: ConvectiveFlux, u_minus, u_plus):
    """Evaluate fhat(u-, u+)."""
    return flux(u_minus, u_plus)


# ---------------------------------------------------------------------------
# DDG diffusion flux
# ---------------------------------------------------------------------------

@dataclass
class DDGFluxParams:
    """Coefficients of the interface diffusion flux

        hhat = beta0 [A(u)]/dx + mean(A(u)_x) + beta1 dx [d^2_x A(u)]

    (the last term only for quadratic elements).  ``certificate`` stores the
    sampled admissibility pair (gamma, alpha) once validated.
    """

    degree: int
    beta0: float = 1.0
    beta1: float = 0.0
    certificate: tuple[float, float] | None = None

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise ValueError("polynomial degree must be 0, 1 or 2")

    @classmethod
    def default_for_degree(cls, degree: int) -> "DDGFluxParams":
        if degree == 0:
            return cls(degree=0, beta0=1.0)
        if degree == 1:
            return cls(degree=1, beta0=2.0)
        return cls(degree=2, beta0=4.0, beta1=1.0 / 12.0)


def ddg_diffusion_flux(params: DDGFluxParams, traces, dx):
    """Diffusion interface flux from one-sided traces of A(u).

    ``traces`` maps derivative order m -> (left, right) traces of d^m_x A(u)
    for m = 0..degree.  For piecewise constants the mean-slope term vanishes
    and the flux is exactly the jump quotient beta0 [A]/dx.
    """
    A_m, A_p = (np.asarray(t, dtype=float) for t in traces[0])
    out = params.beta0 * (A_p - A_m) / dx
    if params.degree >= 1:
        if 1 not in traces:
            raise ValueError("missing first-derivative traces for degree >= 1")
        Ax_m, Ax_p = (np.asarray(t, dtype=float) for t in traces[1])
        out = out + 0.5 * (Ax_m + Ax_p)
    if params.degree == 2:
        if 2 not in traces:
            raise ValueError("missing second-derivative traces for degree 2")
        Axx_m, Axx_p = (np.asarray(t, dtype=float) for t in traces[2])
        out = out + params.beta1 * dx * (Axx_p - Axx_m)
    return out


# reference-cell trace factors of the Legendre basis
def basis_trace_factors(degree, dx):
    p = np.arange(degree + 1)
    return {
        "right": np.ones(degree + 1),                       # phi_p(x_{i+1}^-)
        "left": (-1.0) ** p,                                # phi_p(x_i^+)
        "dright": p * (p + 1) / 2.0 * (2.0 / dx),
        "dleft": ((-1.0) ** (p + 1)) * p * (p + 1) / 2.0 * (2.0 / dx),
        "d2right": (p - 1) * p * (p + 1) * (p + 2) / 8.0 * (4.0 / dx**2),
        "d2left": ((-1.0) ** p) * (p - 1) * p * (p + 1) * (p + 2) / 8.0 * (4.0 / dx**2),
    }


def interface_traces(coeffs, dx, boundary="periodic"):
    """One-sided (u, u_x, u_xx) traces at the n_cells+0/1 interfaces.

    Interface i sits at the left edge of cell i; the minus side belongs to
    cell i-1.  'periodic' wraps, 'dirichlet' inserts zero exterior states and
    returns n_cells+1 interfaces.
    """
    k = coeffs.shape[0] - 1
    fac = basis_trace_factors(k, dx)
    if boundary == "periodic":
        left_cells = np.roll(coeffs, 1, axis=1)
        right_cells = coeffs
    elif boundary == "dirichlet":
        zero = np.zeros((k + 1, 1))
        left_cells = np.concatenate([zero, coeffs], axis=1)
        right_cells = np.concatenate([coeffs, zero], axis=1)
    else:
        raise ValueError(f"unknown boundary mode {boundary!r}")
    out = {
        "u": (fac["right"] @ left_cells, fac["left"] @ right_cells),
        "ux": (fac["dright"] @ left_cells, fac["dleft"] @ right_cells),
        "uxx": (fac["d2right"] @ left_cells, fac["d2left"] @ right_cells),
    }
    return out


def diffusion_traces(traces, problem, degree):
    """Convert u-traces to traces of A(u) and its spatial derivatives."""
    u_m, u_p = traces["u"]
    out = {0: (problem.A(u_m), problem.A(u_p))}
    if degree >= 1:
        ux_m, ux_p = traces["ux"]
        out[1] = (problem.a(u_m) * ux_m, problem.a(u_p) * ux_p)
    if degree == 2:
        ux_m, ux_p = traces["ux"]
        uxx_m, uxx_p = traces["uxx"]
        ap = problem.derived.a_prime
        out[2] = (ap(u_m) * ux_m**2 + problem.a(u_m) * uxx_m,
                  ap(u_p) * ux_p**2 + problem.a(u_p) * uxx_p)
    return out


@dataclass(frozen=True)
class AdmissibilityResult:
    """Outcome of the sampled coercivity search; ``ok`` is False on failure."""

    ok: bool
    gamma: float | None = None
    alpha: float | None = None


def check_admissibility(params: DDGFluxParams, problem, n_samples=128,
                        n_cells=32, seed=0) -> AdmissibilityResult:
    """Search a (gamma, alpha) certificate for the diffusion flux.

    Draws random periodic piecewise-polynomial states of the configured
    degree, evaluates both sides of the coercivity inequality

        sum_i hhat(u_i) [u_i] >= alpha sum_i ([A(u_i)]/dx) [u_i]
                                  - gamma sum_i int_{I_i} a(u) (u_x)^2,

    and returns the largest alpha on the search grid (with some gamma < 1)
    that survives every sample.  Failure is a value, not an exception.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    from .problems import legendre_basis_values

    rng = np.random.default_rng(seed)
    k = params.degree
    dx = 2.0 * problem.domain_half_width / n_cells
    lo, hi = problem.state_range
    mid, rad = 0.5 * (lo + hi), 0.5 * max(hi - lo, 1e-3)
    gx, gw = np.polynomial.legendre.leggauss(max(2 * k + 2, 4))
    phi_q = legendre_basis_values(k, gx)
    dphi_q = _legendre_derivative_values(k, gx)
    lhs_flux = np.empty(n_samples)
    jumpA_term = np.empty(n_samples)
    grad_term = np.empty(n_samples)
    for s in range(n_samples):
        coeffs = rng.normal(size=(k + 1, n_cells)) * \
            (rad * 0.5 / (1.0 + np.arange(k + 1))[:, None])
        coeffs[0] += mid
        traces = interface_traces(coeffs, dx, "periodic")
        u_m, u_p = traces["u"]
        hhat = ddg_diffusion_flux(params, diffusion_traces(traces, problem, k), dx)
        jump_u = u_p - u_m
        lhs_flux[s] = float(np.sum(hhat * jump_u))
        jumpA_term[s] = float(np.sum((problem.A(u_p) - problem.A(u_m)) / dx * jump_u))
        uq = phi_q.T @ coeffs
        uxq = (dphi_q.T @ coeffs) * (2.0 / dx)
        cell = (gw[:, None] * (problem.a(uq) * uxq**2)).sum(axis=0) * (dx / 2.0)
        grad_term[s] = float(np.sum(cell))
    tol = 1e-12 * max(1.0, np.abs(lhs_flux).max(), np.abs(jumpA_term).max(),
                      np.abs(grad_term).max())
    for alpha in np.arange(2.0, -0.001, -0.05):
        for gmm in np.arange(0.1, 0.91, 0.1):
            if np.all(lhs_flux >= alpha * jumpA_term - gmm * grad_term - tol):
                return AdmissibilityResult(ok=True, gamma=round(float(gmm), 10),
                                           alpha=round(float(alpha), 10))
    return AdmissibilityResult(ok=False)


def _legendre_derivative_values(degree, xi):
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty((degree + 1, xi.size))
    for p in range(degree + 1):
        c = np.zeros(p + 1)
        c[p] = 1.0
        out[p] = np.polynomial.legendre.legval(xi, np.polynomial.legendre.legder(c))
    return out


# ---------------------------------------------------------------------------
# LDG flux pair
# ---------------------------------------------------------------------------

@dataclass
class LDGFluxParams:
    """Antiderivatives and the convective flux entering the LDG pair.

    c11 comes from ([F]/[u] - fhat)/[u] per interface and is nonnegative
    because fhat is an E-flux; c12 = [g]/(2 [u]) couples the two equations
    and collapses the piecewise-constant system to a pure difference scheme.
    """

    convective: ConvectiveFlux
    F: object               # antiderivative of f
    g: object               # antiderivative of sqrt(a)
    f: object
    g_prime: object

    @classmethod
    def for_problem(cls, problem, flux: ConvectiveFlux) -> "LDGFluxParams":
        return cls(
            convective=flux,
            F=problem.convective_flux.antiderivative(base=0.0),
            g=problem.derived.g,
            f=problem.convective_flux,
            g_prime=problem.derived.g.derivative(),
        )


def _jump_quotients(params, u_m, u_p, jump_tol):
    ju = u_p - u_m
    small = np.abs(ju) <= jump_tol * np.maximum(1.0, np.maximum(np.abs(u_m),
                                                                np.abs(u_p)))
    safe = np.where(small, 1.0, ju)
    dF = np.asarray(params.F(u_p), dtype=float) - np.asarray(params.F(u_m), dtype=float)
    dg = np.asarray(params.g(u_p), dtype=float) - np.asarray(params.g(u_m), dtype=float)
    Fq = np.where(small, np.asarray(params.f(u_m), dtype=float), dF / safe)
    gq = np.where(small, np.asarray(params.g_prime(u_m), dtype=float), dg / safe)
    return ju, small, safe, Fq, gq


def ldg_flux_pair(params: LDGFluxParams, w_minus, w_plus, jump_tol=1e-12):
    """Interface fluxes (hhat_u, hhat_q) for states w = (u, q).

    Difference quotients [F]/[u] and [g]/[u] switch to the derivative limits
    f(u) and g'(u) where the u-jump vanishes (removable singularity), and
    c12 -> g'(u)/2 accordingly.
    """
    u_m, q_m = (np.asarray(v, dtype=float) for v in w_minus)
    u_p, q_p = (np.asarray(v, dtype=float) for v in w_plus)
    ju, _, _, Fq, gq = _jump_quotients(params, u_m, u_p, jump_tol)
    jq = q_p - q_m
    qbar = 0.5 * (q_m + q_p)
    c12 = 0.5 * gq
    fhat = params.convective(u_m, u_p)
    c11_ju = Fq - fhat                       # c11 * [u]; finite as [u] -> 0
    hhat_u = Fq - gq * qbar - c11_ju - c12 * jq
    gbar = 0.5 * (np.asarray(params.g(u_m), dtype=float)
                  + np.asarray(params.g(u_p), dtype=float))
    hhat_q = -gbar + c12 * ju
    return hhat_u, hhat_q


def ldg_c11(params: LDGFluxParams, u_minus, u_plus, jump_tol=1e-12):
    """The penalty coefficient c11 itself (0 where the u-jump vanishes)."""
    u_m = np.asarray(u_minus, dtype=float)
    u_p = np.asarray(u_plus, dtype=float)
    ju, small, safe, Fq, _ = _jump_quotients(params, u_m, u_p, jump_tol)
    return np.where(small, 0.0, (Fq - params.convective(u_m, u_p)) / safe)
