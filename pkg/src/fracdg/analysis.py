"""Error norms, observed convergence orders, and the stability/entropy audits.

Errors follow the convention E_{dx,p} = ||u_num - u_ref||_Lp ** p (the p-th
POWER of the norm, kept verbatim from the reporting convention this library
reproduces), with relative form R = E / ||u_ref||^p and observed order
alpha = log2(E_coarse / E_fine) between halved grids.

The entropy audit evaluates, per cell, level k and step, the residual of

    |U^{n+1}-k| - |U^n-k| + dt D_-Q^n - dt D_-D_+|A(U^n)-A(k)|
        - dt sgn(U^{n+1}-k) b Levy<U^n>  <=  0,

with Q_i^n = fhat(U_i v k, U_{i+1} v k) - fhat(U_i ^ k, U_{i+1} ^ k); the
monotone scheme satisfies it exactly, so any residual beyond roundoff flags
a defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fractional import apply_levy
from .grids import GridSpec

__all__ = [
    "ConvergenceReport",
    "EntropyAudit",
    "error_norms",
    "convergence_rate",
    "restrict_cell_averages",
    "convergence_study",
    "check_cell_entropy",
    "stability_monitors",
    "holder_audit",
    "bilinear_interpolant",
]


# ---------------------------------------------------------------------------
# error norms and convergence orders
# ---------------------------------------------------------------------------

def error_norms(u_num, u_ref, p, dx):
    """(E, R) with E the p-th power of the Lp distance on a common grid.

    Both inputs are cell/sample values on the same comparison grid of
    spacing dx; E = dx * sum |diff|^p and R = E / (dx * sum |u_ref|^p).
    """
    u_num = np.asarray(u_num, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    if u_num.shape != u_ref.shape or u_num.size == 0:
        raise ValueError("need matching nonempty sample arrays")
    E = dx * float(np.sum(np.abs(u_num - u_ref) ** p))
    denom = dx * float(np.sum(np.abs(u_ref) ** p))
    return E, (E / denom if denom > 0 else np.inf)


def convergence_rate(E_coarse, E_fine):
    """Observed order log2(E_coarse / E_fine) between halved grids."""
    if E_coarse <= 0.0 or E_fine <= 0.0:
        raise ValueError("errors must be positive to take rates")
    return float(np.log2(E_coarse / E_fine))


def restrict_cell_averages(fine_values, ratio):
    """Cell-average a fine-grid solution down to a coarser grid."""
    v = np.asarray(fine_values, dtype=float)
    if v.size % ratio:
        raise ValueError("fine grid is not a multiple of the coarse grid")
    return v.reshape(-1, ratio).mean(axis=1)


@dataclass
class ConvergenceReport:
    """Per-grid errors, relative errors and observed orders."""

    scheme: str
    reference: str
    p_norms: tuple
    dxs: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)      # p -> [E per grid]
    relative: dict = field(default_factory=dict)    # p -> [R per grid]

    def rates(self, p):
        E = self.errors[p]
        return [convergence_rate(E[i], E[i + 1]) for i in range(len(E) - 1)]

    def rows(self):
        """One row per grid: (dx, E1, R1, alpha1, E2, R2, alpha2)."""
        out = []
        for i, dx in enumerate(self.dxs):
            row = {"dx": dx}
            for p in self.p_norms:
                E = self.errors[p]
                row[f"E{p}"] = E[i]
                row[f"R{p}"] = self.relative[p][i]
                row[f"alpha{p}"] = (convergence_rate(E[i], E[i + 1])
                                    if i + 1 < len(E) else np.nan)
            out.append(row)
        return out


def staircase_eval(values, grid):
    """Point evaluation of a piecewise-constant solution."""
    values = np.asarray(values, dtype=float)

    def evaluate(x):
        i = np.clip(((np.asarray(x, dtype=float) - grid.x_left)
                     // grid.dx).astype(int), 0, values.size - 1)
        return values[i]

    return evaluate


def convergence_study(run_one, dxs, reference, p_norms=(1, 2),
                      scheme="ddg_k0") -> ConvergenceReport:
    """Errors and observed orders over a halving grid family.

    ``run_one(dx)`` returns (cell_values, grid, evaluate) for one resolution,
    where ``evaluate(x)`` samples the numerical solution as a function (None
    selects piecewise-constant evaluation of the cell values).

    Each comparison happens on the finest grid participating in it: against
    an ("oracle", callable) reference that is the study grid itself (the
    oracle is gridless), sampled at cell midpoints; a
    ("fine_grid", values, dx_ref) reference is cell-averaged down to the
    study grid before differencing.
    """
    dxs = list(dxs)
    for a, b in zip(dxs[:-1], dxs[1:]):
        if abs(a / b - 2.0) > 1e-9:
            raise ValueError("grids must halve strictly")
    report = ConvergenceReport(scheme=scheme, reference=reference[0],
                               p_norms=tuple(p_norms))
    for p in p_norms:
        report.errors[p] = []
        report.relative[p] = []
    for dx in dxs:
        out = run_one(dx)
        values, grid = np.asarray(out[0], dtype=float), out[1]
        evaluate = out[2] if len(out) > 2 and out[2] is not None else None
        if reference[0] == "oracle":
            ref = np.asarray(reference[1](grid.centers), dtype=float)
            vals = np.asarray(evaluate(grid.centers), dtype=float) \
                if evaluate is not None else values
        elif reference[0] == "fine_grid":
            _, ref_values, dx_ref = reference
            ratio = int(round(dx / dx_ref))
            if abs(dx / dx_ref - ratio) > 1e-9:
                raise ValueError("reference grid must divide every study grid")
            ref = restrict_cell_averages(ref_values, ratio)
            vals = values
        else:
            raise ValueError(f"unknown reference mode {reference[0]!r}")
        report.dxs.append(dx)
        for p in p_norms:
            E, R = error_norms(vals, ref, p, dx)
            report.errors[p].append(E)
            report.relative[p].append(R)
    return report


# ---------------------------------------------------------------------------
# cell entropy inequality
# ---------------------------------------------------------------------------

@dataclass
class EntropyAudit:
    """Residuals of the cell entropy inequality (<= tol means it holds)."""

    levels: np.ndarray
    worst_residual: float
    worst_cell: int
    worst_level: float
    residuals_by_level: np.ndarray


def check_cell_entropy(u_old, u_new, levels, problem, weights, flux, dt,
                       boundary="periodic") -> EntropyAudit:
    """Evaluate the entropy residual for one step at the given levels.

    ``weights`` must be the row the scheme itself stepped with (wrapping a
    differently truncated row changes the nonlocal term).  Violations are
    reported values, never exceptions; sign convention sgn(0) = 0 on the
    nonlocal term.
    """
    u_old = np.asarray(u_old, dtype=float)
    u_new = np.asarray(u_new, dtype=float)
    dx = weights.dx
    b = problem.fractional_weight
    levy = b * apply_levy(weights, u_old, boundary) if b > 0.0 else 0.0
    if boundary == "periodic":
        ue = np.concatenate([u_old[-2:], u_old, u_old[:2]])
    else:
        ue = np.concatenate([[0.0, 0.0], u_old, [0.0, 0.0]])
    levels = np.asarray(levels, dtype=float)
    # lattice states u v k / u ^ k reach beyond the admissible range, so the
    # flux table is rebuilt over the level span and A is taken unclamped
    span = (min(flux.state_range[0], levels.min()),
            max(flux.state_range[1], levels.max()))
    if span != flux.state_range:
        flux = _extend_flux(flux, span)
    A = problem.derived.A
    worst = -np.inf
    worst_cell = -1
    worst_level = np.nan
    by_level = np.empty(len(levels))
    for j, k in enumerate(levels):
        eta_old = np.abs(u_old - k)
        eta_new = np.abs(u_new - k)
        top = np.asarray(flux(np.maximum(ue[:-1], k), np.maximum(ue[1:], k)),
                         dtype=float)
        bot = np.asarray(flux(np.minimum(ue[:-1], k), np.minimum(ue[1:], k)),
                         dtype=float)
        Q = top - bot                       # Q[j] pairs cells (j-2, j-1) wrt u
        DQ = (Q[2:-1] - Q[1:-2]) / dx
        rA = np.abs(A(ue) - A(k))
        DDr = (rA[3:-1] - 2.0 * rA[2:-2] + rA[1:-3]) / dx**2
        res = eta_new - eta_old + dt * DQ - dt * DDr \
            - dt * np.sign(u_new - k) * levy
        by_level[j] = float(res.max())
        if by_level[j] > worst:
            worst = by_level[j]
            worst_cell = int(np.argmax(res))
            worst_level = float(k)
    return EntropyAudit(levels=levels, worst_residual=float(worst),
                        worst_cell=worst_cell, worst_level=worst_level,
                        residuals_by_level=by_level)


def _extend_flux(flux, span):
    from .fluxes import ConvectiveFlux

    fprime = None if hasattr(flux.f, "derivative") else flux._fprime
    out = ConvectiveFlux(flux.kind, flux.f, span, fprime=fprime,
                         linear_speed=flux.linear_speed)
    if flux.kind == "lf":
        # keep the scheme's viscosity constant: the audit must evaluate the
        # very flux the scheme stepped with
        out.max_fprime = flux.max_fprime
    return out


def default_entropy_levels(u0_values, n_inner=9):
    """n_inner equispaced levels strictly inside the datum range, plus both
    extremes pushed out by one total-variation scale."""
    u = np.asarray(u0_values, dtype=float)
    lo, hi = float(u.min()), float(u.max())
    span = max(hi - lo, 1e-12)
    inner = lo + span * (np.arange(1, n_inner + 1)) / (n_inner + 1)
    bv = float(np.abs(np.diff(u)).sum())
    scale = max(bv, span)
    return np.concatenate([[lo - scale], inner, [hi + scale]])


# ---------------------------------------------------------------------------
# stability monitors and regularity audit
# ---------------------------------------------------------------------------

def stability_monitors(trajectory, slack=1e-12):
    """Per-step lattice norms with monotonicity flags.

    Returns a dict of arrays (l1, linf, bv, l1_increment_rate) and boolean
    flags marking any increase beyond ``slack`` times the initial value.
    """
    led = trajectory.ledger
    if led["step"].size == 0:
        return {"l1": np.array([]), "linf": np.array([]), "bv": np.array([]),
                "l1_rate": np.array([]), "flags": {}}
    if trajectory.full_states is not None:
        hist = np.atleast_2d(trajectory.full_states)
        if hist.ndim == 3:
            hist = hist[:, 0, :]
        l1 = np.abs(hist).sum(axis=1)
        linf = np.abs(hist).max(axis=1)
        if trajectory.boundary == "periodic":
            bv = np.abs(np.diff(hist, axis=1)).sum(axis=1) + \
                np.abs(hist[:, 0] - hist[:, -1])
        else:
            bv = np.abs(np.diff(hist, axis=1)).sum(axis=1) + \
                np.abs(hist[:, 0]) + np.abs(hist[:, -1])
        flags = {
            "l1": bool(np.any(np.diff(l1) > slack * max(l1[0], 1.0))),
            "linf": bool(np.any(np.diff(linf) > slack * max(linf[0], 1.0))),
            "bv": bool(np.any(np.diff(bv) > slack * max(bv[0], 1.0))),
        }
        rate = trajectory.ledger["l1_time_increment"] / \
            np.diff(trajectory.full_times)
        return {"l1": l1, "linf": linf, "bv": bv, "l1_rate": rate,
                "flags": flags}
    # ledger-only fallback (no stored history): norms from step records
    linf, bv = led["linf"], led["bv"]
    flags = {
        "linf": bool(np.any(np.diff(linf) > slack * max(linf[0], 1.0))),
        "bv": bool(np.any(np.diff(bv) > slack * max(bv[0], 1.0))),
    }
    return {"l1": None, "linf": linf, "bv": bv,
            "l1_rate": led["l1_time_increment"] / trajectory.dt,
            "flags": flags}


def holder_audit(trajectory, problem, max_pairs=200000, seed=0):
    """Space-time regularity constant of A(u) along a stored trajectory.

    Estimates sup |A(U_i^m) - A(U_j^n)| / (|i-j| dx + sqrt(|m-n| dt)) over a
    deterministic pair sample; the meaningful assertion is boundedness of the
    estimate across grid refinements, not its particular value.
    """
    if trajectory.full_states is None:
        raise ValueError("holder audit needs a trajectory with store_full")
    hist = np.atleast_2d(trajectory.full_states)
    if hist.ndim == 3:
        hist = hist[:, 0, :]
    Avals = problem.A(hist)
    nt, nx = Avals.shape
    rng = np.random.default_rng(seed)
    npairs = min(max_pairs, 4 * nt * nx)
    m = rng.integers(0, nt, size=npairs)
    n = rng.integers(0, nt, size=npairs)
    i = rng.integers(0, nx, size=npairs)
    j = rng.integers(0, nx, size=npairs)
    dx, dt = trajectory.grid.dx, trajectory.dt
    num = np.abs(Avals[m, i] - Avals[n, j])
    den = np.abs(i - j) * dx + np.sqrt(np.abs(m - n) * dt)
    keep = den > 0
    if not np.any(keep):
        return 0.0
    return float(np.max(num[keep] / den[keep]))


def bilinear_interpolant(trajectory, x, t):
    """Space-time bilinear interpolation of the stored cell values.

    On the rectangle [x_i, x_{i+1}) x [t_n, t_{n+1}) the four surrounding
    values are blended bilinearly, with U_i^n treated as the value at the
    node (x_i, t_n).  Queries outside the stored window raise.
    """
    if trajectory.full_states is None:
        raise ValueError("bilinear interpolation needs a stored trajectory")
    hist = np.atleast_2d(trajectory.full_states)
    if hist.ndim == 3:
        hist = hist[:, 0, :]
    times = trajectory.full_times
    grid = trajectory.grid
    if not (times[0] <= t <= times[-1]):
        raise ValueError("time outside the stored window")
    if not (grid.x_left <= x <= grid.x_right - grid.dx):
        raise ValueError("position outside the interpolable window")
    # rectangle widths are taken locally, so a shortened final step is fine
    n = int(np.searchsorted(times, t, side="right") - 1)
    n = min(max(n, 0), len(times) - 2) if len(times) > 1 else 0
    i = int((x - grid.x_left) // grid.dx)
    i = min(max(i, 0), hist.shape[1] - 2)
    sx = (x - (grid.x_left + i * grid.dx)) / grid.dx
    if len(times) == 1:
        row = hist[0]
        return float(row[i] + (row[i + 1] - row[i]) * sx)
    st = (t - times[n]) / (times[n + 1] - times[n])
    u00 = hist[n, i]
    u10 = hist[n, i + 1]
    u01 = hist[n + 1, i]
    u11 = hist[n + 1, i + 1]
    return float(u00 + (u10 - u00) * sx + (u01 - u00) * st
                 + (u11 - u01 - u10 + u00) * sx * st)
