"""Fractional Laplacian weights for piecewise-polynomial functions.

The nonlocal operator is the singular integral

    L[u](x) = c_lam * int_{|z|>0} (u(x+z) - u(x)) / |z|^{1+lam} dz,

with 0 < lam < 1 and the normalization c_lam chosen so that the Fourier
symbol is exactly -|xi|^lam.  Cell averages of L applied to indicator
functions give a symmetric Toeplitz weight row

    G_d = c_lam * dx^mu * (2 d^mu - (d+1)^mu - (d-1)^mu) / (lam*mu),

mu = 1 - lam, for offsets d >= 1, with diagonal G_0 = -2 c_lam dx^mu/(lam*mu).
The full row over the integers sums to zero; a truncated row is repaired
exactly by folding the analytic tail mass into the diagonal.

For polynomial elements of degree k >= 1 the same calculus yields block rows
W[p][q][d] = int_{I_0} phi_p L[phi_{q,d}], assembled from exact singular
moment integrals of the Legendre basis; the (0, 0) block reproduces the
cell-average row above.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma

__all__ = [
    "FractionalParams",
    "WeightMatrix",
    "compute_c_lambda",
    "symbol_quadrature",
    "assemble_weights",
    "quadrature_oracle_weight",
    "apply_levy",
    "discrete_h_seminorm",
    "assemble_dg_blocks",
]

log = logging.getLogger(__name__)


def compute_c_lambda(lam: float) -> float:
    """Normalization making the singular integral's symbol equal -|xi|^lam.

    One-dimensional value 2^lam Gamma((1+lam)/2) / (sqrt(pi) |Gamma(-lam/2)|).
    """
    if not (0.0 < lam < 1.0):
        raise ValueError("fractional order must lie in (0, 1)")
    return 2.0**lam * gamma((1.0 + lam) / 2.0) / (np.pi**0.5 * abs(gamma(-lam / 2.0)))


def symbol_quadrature(lam: float, xi: float, c_lam: float | None = None) -> float:
    """Symbol of the singular integral at frequency xi, by adaptive quadrature.

    Independent oracle for :func:`compute_c_lambda`; the exact value is
    -|xi|^lam.  The oscillatory tail uses a weighted (QAWF-style) rule.
    """
    if c_lam is None:
        c_lam = compute_c_lambda(lam)
    xi = abs(xi)
    if xi == 0.0:
        return 0.0
    near = quad(lambda z: (np.cos(xi * z) - 1.0) * z ** (-1.0 - lam), 0.0, 1.0,
                limit=200)[0]
    osc = quad(lambda z: z ** (-1.0 - lam), 1.0, np.inf,
               weight="cos", wvar=xi, limit=400)[0]
    return 2.0 * c_lam * (near + osc - 1.0 / lam)


@dataclass(frozen=True)
class FractionalParams:
    """Order lam in (0,1) with normalization c_lam and diagonal constant d_lam.

    ``d_lam = c_lam * (2/(1-lam) + 2/lam)``, so the weight diagonal is
    ``-d_lam * dx^(1-lam)``; d_lam also enters the CFL bound of the explicit
    schemes.
    """

    lam: float
    c_lam: float
    d_lam: float

    @classmethod
    def for_order(cls, lam: float) -> "FractionalParams":
        c = compute_c_lambda(lam)
        return cls(lam=lam, c_lam=c, d_lam=c * (2.0 / (1.0 - lam) + 2.0 / lam))


def _offdiag_profile(lam: float, n: int) -> np.ndarray:
    """Grid-free off-diagonal weights gamma_d, G_d = c_lam dx^mu gamma_d."""
    mu = 1.0 - lam
    out = np.empty(n)
    if n >= 1:
        out[0] = (2.0 - 2.0**mu) / (lam * mu)
    if n >= 2:
        d = np.arange(2.0, n + 1.0)
        # 2 d^mu - (d+1)^mu - (d-1)^mu, written to avoid cancellation
        bracket = np.expm1(mu * np.log1p(1.0 / d)) + np.expm1(mu * np.log1p(-1.0 / d))
        out[1:] = -(d**mu) * bracket / (lam * mu)
    return out


def _tail_profile(lam: float, m: int) -> float:
    """sum_{d > m} gamma_d, the analytic one-sided tail beyond offset m."""
    mu = 1.0 - lam
    return float(m**mu * np.expm1(mu * np.log1p(1.0 / m)) / (lam * mu))


class WeightMatrix:
    """Toeplitz fractional-weight row over a computational window.

    ``row[d]`` holds G_d for offsets d = 0..cells; the matrix entry is
    G^i_j = row[|j - i|].  The plain row keeps the untruncated diagonal, so
    the localized (zero-Dirichlet) operator loses mass through the window
    boundary; :meth:`tail_corrected_diagonal` folds the analytic off-window
    tail back into G_0, which the periodic application uses to make the row
    sum vanish exactly.
    """

    def __init__(self, params: FractionalParams, dx: float, row: np.ndarray,
                 cells: int):
        self.params = params
        self.dx = float(dx)
        self.row = np.asarray(row, dtype=float)
        self.cells = int(cells)
        self._circ_cache: dict[int, np.ndarray] = {}

    @property
    def diagonal(self) -> float:
        return float(self.row[0])

    @property
    def tail_mass(self) -> float:
        """One-sided analytic row mass beyond the stored offsets."""
        return self.params.c_lam * self.dx ** (1.0 - self.params.lam) * \
            _tail_profile(self.params.lam, len(self.row) - 1)

    def tail_corrected_diagonal(self) -> float:
        # equals G_0 + 2*tail_mass; computed as the exact negation of the
        # stored off-diagonal mass so the represented row sums to zero
        return -2.0 * math.fsum(self.row[1:])

    def represented_row_sum(self) -> float:
        """Stored row plus analytic tail; zero up to roundoff."""
        return 2.0 * math.fsum(self.row[1:]) + self.row[0] + 2.0 * self.tail_mass

    def dense(self, n: int | None = None) -> np.ndarray:
        """Dense (n x n) section G^i_j = row[|i - j|]."""
        n = self.cells if n is None else n
        idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        if idx.max() > len(self.row) - 1:
            raise ValueError("stored row too short for this section")
        return self.row[idx]

    def periodic_row(self, n: int) -> np.ndarray:
        """Row folded onto a periodic window of n cells, zero-sum corrected."""
        rho = np.zeros(n)
        rho[0] = self.tail_corrected_diagonal()
        for d in range(1, len(self.row)):
            rho[d % n] += self.row[d]
            rho[-d % n] += self.row[d]
        return rho

    def circulant(self, n: int) -> np.ndarray:
        if n not in self._circ_cache:
            rho = self.periodic_row(n)
            j = np.arange(n)
            self._circ_cache[n] = rho[(j[None, :] - j[:, None]) % n]
        return self._circ_cache[n]


def assemble_weights(params: FractionalParams, dx: float,
                     window_cells: int) -> WeightMatrix:
    """Closed-form weight row for a window of ``window_cells`` cells.

    The stored row carries offsets 0..window_cells, enough for every cell
    pair in the window plus the row-sum audits.
    """
    if dx <= 0:
        raise ValueError("dx must be positive")
    if window_cells < 3:
        raise ValueError("window must have at least 3 cells")
    mu = 1.0 - params.lam
    scale = params.c_lam * dx**mu
    if not np.isfinite(scale) or scale == 0.0:
        raise FloatingPointError("weight scale under/overflow for this order")
    row = np.empty(window_cells + 1)
    row[0] = -2.0 * scale / (params.lam * mu)
    row[1:] = scale * _offdiag_profile(params.lam, window_cells)
    return WeightMatrix(params=params, dx=dx, row=row, cells=window_cells)


def quadrature_oracle_weight(params: FractionalParams, dx: float,
                             offset: int) -> float:
    """Weight G_d recomputed by adaptive quadrature of the double integral.

    Independent audit for :func:`assemble_weights`: the z-integral of the
    singular kernel against indicator data reduces to explicit power-law
    limits near z = 0, and the remaining x-integral is regularized at its
    endpoint singularities by the substitution x = dx * t^(1/(1-lam)).
    """
    lam, c = params.lam, params.c_lam
    mu = 1.0 - lam
    d = abs(int(offset))

    def desingularized(h, t_hi=1.0):
        # integrate h over x in (0, dx*t_hi^(1/mu)) with an x^-lam blowup at
        # x = 0, regularized by the substitution x = dx * t^(1/mu)
        def sub(t):
            x = dx * t ** (1.0 / mu)
            return h(x) * dx * t ** (1.0 / mu - 1.0) / mu
        val, err = quad(sub, 0.0, t_hi, limit=400)
        if err > 1e-11 * max(abs(val), 1e-300):
            raise RuntimeError("weight oracle quadrature did not converge")
        return val

    if d == 0:
        # escape mass: -c int_I [x^-lam + (dx-x)^-lam]/lam dx, symmetric halves
        half_sing = desingularized(lambda x: x ** (-lam) / lam, t_hi=0.5**mu)
        half_reg = quad(lambda x: (dx - x) ** (-lam) / lam, 0.0, dx / 2,
                        limit=200)[0]
        return -2.0 * c * (half_sing + half_reg)
    if d == 1:
        # inner z-integral blows up like y^-lam where the two cells meet
        val = desingularized(lambda y: (y ** (-lam) - (dx + y) ** (-lam)) / lam)
        return c * val

    def inner(x):
        lo = d * dx - x
        hi = (d + 1) * dx - x
        return (lo ** (-lam) - hi ** (-lam)) / lam

    val, err = quad(inner, 0.0, dx, limit=400)
    if err > 1e-11 * max(abs(val), 1e-300):
        raise RuntimeError("weight oracle quadrature did not converge")
    return c * val


def apply_levy(weights: WeightMatrix, values: np.ndarray,
               boundary: str = "dirichlet") -> np.ndarray:
    """Cell averages of the nonlocal operator: (1/dx) sum_j G^i_j U_j.

    'dirichlet' treats every exterior cell as zero (localized operator);
    'periodic' wraps the window with the zero-sum corrected row, making the
    action exactly conservative with constants in its kernel.
    """
    u = np.asarray(values, dtype=float)
    n = u.shape[0]
    if boundary == "dirichlet":
        m = min(n - 1, len(weights.row) - 1)
        r = weights.row[: m + 1]
        kernel = np.concatenate([r[::-1], r[1:]])
        return np.convolve(u, kernel)[m : m + n] / weights.dx
    if boundary == "periodic":
        return (weights.circulant(n) @ u) / weights.dx
    raise ValueError(f"unknown boundary mode {boundary!r}")


def discrete_h_seminorm(weights: WeightMatrix, values: np.ndarray) -> float:
    """Squared H^{lam/2} seminorm of the piecewise-constant interpolant.

    Equals -(2/c_lam) sum_ij U_i G^i_j U_j; the quadratic form is negative
    semidefinite, so the result is nonnegative.  Exact for finitely supported
    data whenever the stored row covers the support width.
    """
    u = np.asarray(values, dtype=float)
    if len(weights.row) - 1 < u.shape[0] - 1:
        raise ValueError("stored row too short for this support")
    form = float(u @ (apply_levy(weights, u, "dirichlet") * weights.dx))
    return -2.0 / weights.params.c_lam * form


# ---------------------------------------------------------------------------
# exact singular moments for polynomial elements (degree k >= 1)
# ---------------------------------------------------------------------------
#
# Everything below lives on the unit cell in the variable s in (0, 1) and is
# rescaled by c_lam * dx^(1-lam) at the end.  Polynomials are power-basis
# coefficient arrays (low to high).

def _poly_antiderivative(c):
    return np.concatenate([[0.0], c / np.arange(1.0, len(c) + 1.0)])


def _poly_derivative(c):
    return c[1:] * np.arange(1.0, len(c)) if len(c) > 1 else np.zeros(1)


def _poly_compose_affine(c, a0, a1):
    """Coefficients of p(a0 + a1*t) for p given by coefficients c."""
    out = np.zeros(1)
    power = np.ones(1)
    for ck in c:
        out = _poly_add(out, ck * power)
        power = np.convolve(power, np.array([a0, a1]))
    return out


def _poly_add(a, b):
    n = max(len(a), len(b))
    out = np.zeros(n)
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def _overlap_polys(pa, pb, difference=False):
    """Overlap integrals of a unit-cell pair as polynomials of the shift u.

    Returns coefficient arrays (g_minus, g_plus), valid on u in (-1, 0) and
    (0, 1), of  u -> int phi_a(s) phi_b(s+u) ds  over the overlap of (0, 1)
    with its shift.  With ``difference=True`` the integrand is
    phi_a(s) (phi_b(s+u) - phi_b(s)) instead, which is the diagonal exchange
    term (the j = 0 Taylor term cancels pointwise).
    """
    cjs = []
    der = np.array(pb, dtype=float)
    fact = 1.0
    j = 0
    while True:
        cjs.append(der / fact)
        if len(der) == 1:
            break
        der = _poly_derivative(der)
        j += 1
        fact *= j
    g_plus = np.zeros(1)
    g_minus = np.zeros(1)
    for j, bj in enumerate(cjs):
        if difference and j == 0:
            continue
        D = _poly_antiderivative(np.convolve(pa, bj))
        # u > 0: s in (0, 1-u):  D(1-u) - D(0)
        term_p = _poly_compose_affine(D, 1.0, -1.0)
        term_p[0] -= D[0]
        # u < 0: s in (-u, 1):  D(1) - D(-u)
        term_m = -_poly_compose_affine(D, 0.0, -1.0)
        term_m[0] += float(np.polyval(D[::-1], 1.0))
        shift = np.zeros(j + 1)
        shift[j] = 1.0
        g_plus = _poly_add(g_plus, np.convolve(shift, term_p))
        g_minus = _poly_add(g_minus, np.convolve(shift, term_m))
    return g_minus, g_plus


def _series_moment(coeffs, lam, drop_tol=1e-9):
    """int_0^1 g(v) v^{-1-lam} dv for a polynomial g with g(0) = 0."""
    c = np.asarray(coeffs, dtype=float)
    scale = max(float(np.max(np.abs(c))), 1e-300)
    if abs(c[0]) > drop_tol * scale:
        raise ValueError("singular moment requires a vanishing constant term")
    m = np.arange(len(c), dtype=float)
    return float(np.sum(c[1:] / (m[1:] - lam))) if len(c) > 1 else 0.0


def _legendre_power_coeffs(p):
    c = np.zeros(p + 1)
    c[p] = 1.0
    mono = np.polynomial.legendre.leg2poly(c)
    return _poly_compose_affine(mono, -1.0, 2.0)  # P_p(2s - 1) in powers of s


@lru_cache(maxsize=16)
def _unit_blocks(lam: float, degree: int, offsets: int):
    """Unit-cell block rows; the physical row is c_lam * dx^(1-lam) * this.

    Index order [p, q, d] with d = 0..offsets; negative offsets follow from
    the parity relation W[p][q][-d] = (-1)^(p+q) W[p][q][d].
    """
    basis = [_legendre_power_coeffs(p) for p in range(degree + 1)]
    gx, gw = np.polynomial.legendre.leggauss(40)
    xm = 0.5 * (gx - 1.0)   # nodes on (-1, 0)
    xp = 0.5 * (gx + 1.0)   # nodes on (0, 1)
    out = np.zeros((degree + 1, degree + 1, offsets + 1))
    for p in range(degree + 1):
        for q in range(degree + 1):
            g_minus, g_plus = _overlap_polys(basis[p], basis[q])
            gm = np.polyval(g_minus[::-1], xm)
            gp = np.polyval(g_plus[::-1], xp)
            if offsets >= 2:
                d = np.arange(2.0, offsets + 1.0)
                km = (d[:, None] + xm[None, :]) ** (-1.0 - lam)
                kp = (d[:, None] + xp[None, :]) ** (-1.0 - lam)
                out[p, q, 2:] = 0.5 * (km @ (gw * gm) + kp @ (gw * gp))
            if offsets >= 1:
                smooth = 0.5 * float(np.sum(gw * gp * (1.0 + xp) ** (-1.0 - lam)))
                shifted = _poly_compose_affine(g_minus, -1.0, 1.0)
                out[p, q, 1] = smooth + _series_moment(shifted, lam)
            # diagonal: intra-cell exchange plus escape of the kernel mass
            dminus, dplus = _overlap_polys(basis[p], basis[q], difference=True)
            flip = dminus * (-1.0) ** np.arange(len(dminus))
            intra = _series_moment(dplus, lam) + _series_moment(flip, lam)
            prod = np.convolve(basis[p], basis[q])
            mpow = np.arange(len(prod), dtype=float)
            esc = float(np.sum(prod / (mpow + 1.0 - lam)))
            prod_ref = _poly_compose_affine(prod, 1.0, -1.0)
            esc += float(np.sum(prod_ref / (mpow + 1.0 - lam)))
            out[p, q, 0] = intra - esc / lam
    return out


def assemble_dg_blocks(params: FractionalParams, dx: float, degree: int,
                       window_cells: int) -> np.ndarray:
    """Nonlocal block rows N[p, q, d] = int_{I_0} phi_p L[phi_{q,d}] dx.

    Shape (degree+1, degree+1, 2*window_cells+1) with offset d stored at
    index d + window_cells.  The (0, 0) block reproduces the cell-average
    weight row of :func:`assemble_weights`.
    """
    unit = _unit_blocks(float(params.lam), int(degree), int(window_cells))
    scale = params.c_lam * dx ** (1.0 - params.lam)
    k1 = degree + 1
    out = np.empty((k1, k1, 2 * window_cells + 1))
    for p in range(k1):
        for q in range(k1):
            pos = unit[p, q]
            sign = (-1.0) ** (p + q)
            out[p, q, window_cells:] = scale * pos
            out[p, q, :window_cells] = sign * scale * pos[1:][::-1]
    return out
