"""Command-line front end: configured runs, convergence studies, oracle
output, and the property/audit suites.

A single TOML config file determines a run; every CSV artifact starts with a
comment line carrying the config hash and seed, so identical inputs produce
byte-identical outputs.

Exit codes: 0 success, 2 solver abort, 3 configuration error, 4 audit
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                      # python < 3.11
    import tomli as tomllib

from . import analysis, fluxes, fractional, problems, solvers, spectral
from .grids import GridSpec
from .piecewise import PiecewiseFunction

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_CONFIG = 3
EXIT_AUDIT = 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def load_config(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    raw = p.read_bytes()
    try:
        cfg = tomllib.loads(raw.decode("utf-8"))
    except Exception as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from None
    cfg["_hash"] = hashlib.sha256(raw).hexdigest()[:16]
    return cfg


def _piecewise_from_table(tab, what):
    try:
        return PiecewiseFunction(
            tab.get("breakpoints", []),
            [[(float(c), float(e)) for e, c in enumerate(piece)]
             for piece in tab["pieces"]],
        )
    except Exception as exc:
        raise ConfigError(f"bad piecewise table for {what}: {exc}") from None


def build_problem(cfg):
    sec = cfg.get("problem", {})
    lam = float(sec.get("lambda", 0.5))
    b = float(sec.get("b", 1.0))
    if not (0.0 < lam < 1.0):
        raise ConfigError("lambda must lie strictly inside (0, 1)")
    if b < 0:
        raise ConfigError("b must be nonnegative")
    if "example" in sec:
        try:
            return problems.builtin_example(sec["example"], lam, b)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    needed = {"f", "a", "u0"}
    if not needed <= set(sec):
        raise ConfigError("problem needs 'example' or inline f/a/u0 tables")
    u0f = _piecewise_from_table(sec["u0"], "u0")
    try:
        return problems.ProblemSpec(
            name=sec.get("name", "inline"),
            convective_flux=_piecewise_from_table(sec["f"], "f"),
            diffusion_coefficient=_piecewise_from_table(sec["a"], "a"),
            initial_datum=u0f,
            fractional_order=lam,
            fractional_weight=b,
            linear_speed=sec.get("linear_speed"),
            domain_half_width=float(sec.get("domain_half_width", 1.0)),
            datum_breakpoints=tuple(float(x) for x in
                                    sec["u0"].get("breakpoints", [])),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_scheme(cfg):
    sec = cfg.get("scheme", {})
    kind = sec.get("kind", "ddg_k0")
    if kind not in ("ddg_k0", "ldg_k0", "ddg_rk3"):
        raise ConfigError(f"unknown scheme {kind!r}")
    k = int(sec.get("k", 0))
    if not (0 <= k <= 2):
        raise ConfigError("polynomial degree k must be 0, 1 or 2")
    flux = sec.get("flux", "eo")
    if flux not in ("eo", "godunov", "lf", "linear_upwind"):
        raise ConfigError(f"unknown flux kind {flux!r}")
    boundary = sec.get("boundary", "dirichlet")
    if boundary not in ("dirichlet", "periodic"):
        raise ConfigError(f"unknown boundary {boundary!r}")
    ddg_params = None
    if kind == "ddg_rk3":
        ddg_params = fluxes.DDGFluxParams.default_for_degree(k)
        if "beta0" in sec:
            ddg_params.beta0 = float(sec["beta0"])
        if "beta1" in sec:
            ddg_params.beta1 = float(sec["beta1"])
    return {
        "kind": kind, "k": k, "flux": flux, "boundary": boundary,
        "safety": sec.get("safety"), "ddg_params": ddg_params,
    }


def build_grid(cfg, problem, dx=None):
    sec = cfg.get("grid", {})
    dx = float(dx if dx is not None else sec.get("dx", 0.0) or 0.0)
    if dx <= 0:
        raise ConfigError("grid.dx must be positive")
    try:
        return GridSpec(dx=dx, x_left=-problem.domain_half_width,
                        x_right=problem.domain_half_width,
                        padding_cells=sec.get("padding_cells"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _write_csv(path, header, rows, cfg, seed):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_sha256={cfg['_hash']} seed={seed}",
             ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, (int, float, np.floating,
                                                        np.integer))
                              else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_run(cfg, out, seed):
    problem = build_problem(cfg)
    sch = build_scheme(cfg)
    grid = build_grid(cfg, problem)
    tsec = cfg.get("time", {})
    horizon = float(tsec.get("T", 0.0))
    snaps = [float(s) for s in tsec.get("snapshots", [])] or [horizon]
    monitor_entropy = bool(cfg.get("scheme", {}).get("monitor_entropy", False))
    traj = solvers.run(problem, grid, sch["kind"], horizon, snaps,
                       flux_kind=sch["flux"], boundary=sch["boundary"],
                       safety=sch["safety"], degree=sch["k"],
                       ddg_params=sch["ddg_params"],
                       store_full=monitor_entropy)
    ent = None
    if monitor_entropy:
        ent, ent_rows = _entropy_audit(traj, problem, sch)
        _write_csv(Path(out) / "entropy.csv",
                   ["step", "k_level", "worst_cell", "residual"], ent_rows,
                   cfg, seed)
    for t, state in zip(traj.times, traj.states):
        tag = format(t, "g").replace(".", "p").replace("-", "m")
        if sch["kind"] == "ddg_rk3":
            st = solvers.DGState(state)
            mids = st.eval_at(grid.centers, grid)
            header = ["x_center"] + [f"mode_{p}" for p in range(sch["k"] + 1)] \
                + ["u_mid"]
            rows = [[x, *state[:, i], mids[i]]
                    for i, x in enumerate(grid.centers)]
        else:
            header = ["x_center", "u"]
            vals = state[0] if state.ndim == 2 else state
            rows = [[x, vals[i]] for i, x in enumerate(grid.centers)]
        _write_csv(Path(out) / f"snapshot_t{tag}.csv", header, rows, cfg, seed)
    led = traj.ledger
    rows = []
    for i in range(led["step"].size):
        rows.append([int(led["step"][i]), led["t"][i], led["mass"][i],
                     led["linf"][i], led["bv"][i],
                     led["l1_time_increment"][i],
                     (ent[i] if ent is not None else float("nan"))])
    _write_csv(Path(out) / "run_ledger.csv",
               ["step", "t", "mass", "linf", "bv", "l1_time_increment",
                "min_entropy_residual"], rows, cfg, seed)
    return EXIT_OK


def _entropy_audit(traj, problem, sch):
    """Per-step minimum entropy slack plus per-level CSV rows.

    The ledger column holds the smallest slack of the cell entropy
    inequality over all cells and levels; negative values flag violations.
    """
    hist = np.atleast_2d(traj.full_states)
    if hist.ndim == 3:
        hist = hist[:, 0, :]
    levels = analysis.default_entropy_levels(hist[0])
    params = fractional.FractionalParams.for_order(problem.fractional_order)
    W = fractional.assemble_weights(params, traj.grid.dx,
                                    traj.grid.n_cells + traj.grid.padding_cells)
    flux = fluxes.ConvectiveFlux(sch["flux"], problem.convective_flux,
                                 problem.state_range,
                                 linear_speed=problem.linear_speed)
    out = np.empty(hist.shape[0] - 1)
    rows = []
    dts = np.diff(traj.full_times)
    for n in range(hist.shape[0] - 1):
        audit = analysis.check_cell_entropy(hist[n], hist[n + 1], levels,
                                            problem, W, flux, dts[n],
                                            traj.boundary)
        out[n] = -audit.worst_residual
        rows.append([n + 1, audit.worst_level, audit.worst_cell,
                     audit.worst_residual])
    return out, rows


def _oracle_reference(cfg, problem, sch):
    if problem.linear_speed is None:
        raise ConfigError("oracle reference needs a linear problem")
    osec = cfg.get("oracle", {})
    config = spectral.SpectralConfig(
        half_width=float(osec.get("half_width", 32.0)),
        modes=int(osec.get("modes", 2**17)),
    )
    a_const = float(problem.diffusion_coefficient(0.0))
    horizon = float(cfg.get("time", {}).get("T", 0.0))

    def reference(x):
        return spectral.linear_exact_solution(
            problem.linear_speed, a_const, problem.fractional_weight,
            problem.fractional_order, problem.initial_datum, horizon, x,
            config)
    return reference


def cmd_convergence(cfg, out, seed):
    problem = build_problem(cfg)
    sch = build_scheme(cfg)
    gsec = cfg.get("grid", {})
    dxs = [float(d) for d in gsec.get("dx_list", [])]
    if len(dxs) < 1:
        raise ConfigError("convergence needs grid.dx_list")
    for a, b in zip(dxs[:-1], dxs[1:]):
        if abs(a / b - 2.0) > 1e-9:
            raise ConfigError("grid.dx_list must halve strictly")
    ssec = cfg.get("study", {})
    ref_mode = ssec.get("reference", "fine_grid")
    p_norms = tuple(int(p) for p in ssec.get("p_norms", (1, 2)))
    horizon = float(cfg.get("time", {}).get("T", 0.0))

    def run_one(dx):
        grid = build_grid(cfg, problem, dx=dx)
        traj = solvers.run(problem, grid, sch["kind"], horizon,
                           flux_kind=sch["flux"], boundary=sch["boundary"],
                           safety=sch["safety"], degree=sch["k"],
                           ddg_params=sch["ddg_params"])
        if sch["kind"] == "ddg_rk3":
            state = solvers.DGState(traj.states[-1])
            return state.cell_means, grid, lambda x: state.eval_at(x, grid)
        return traj.cell_values(), grid, None

    if ref_mode == "oracle":
        reference = ("oracle", _oracle_reference(cfg, problem, sch))
    elif ref_mode == "fine_grid":
        dx_ref = float(ssec.get("dx_ref", dxs[-1] / 2.0))
        ref_vals, _, _ = run_one(dx_ref)
        reference = ("fine_grid", ref_vals, dx_ref)
    else:
        raise ConfigError(f"unknown reference mode {ref_mode!r}")
    report = analysis.convergence_study(run_one, dxs, reference,
                                        p_norms=p_norms, scheme=sch["kind"])
    header = ["dx"]
    for p in p_norms:
        header += [f"E{p}", f"R{p}", f"alpha{p}"]
    header += ["reference", "scheme", "flux", "lambda", "b", "T"]
    rows = []
    for row in report.rows():
        r = [row["dx"]]
        for p in p_norms:
            r += [row[f"E{p}"], row[f"R{p}"], row[f"alpha{p}"]]
        r += [ref_mode, sch["kind"], sch["flux"], problem.fractional_order,
              problem.fractional_weight, horizon]
        rows.append(r)
    _write_csv(Path(out) / "convergence.csv", header, rows, cfg, seed)
    return EXIT_OK


def cmd_weights_audit(cfg, out, seed):
    problem = build_problem(cfg)
    if problem.fractional_weight == 0.0:
        _write_csv(Path(out) / "weights_audit.csv",
                   ["offset", "G_d", "oracle_value", "abs_err", "rel_err"],
                   [["n/a", "n/a", "n/a", "n/a", "n/a"]], cfg, seed)
        print("weights audit skipped: b = 0")
        return EXIT_OK
    grid = build_grid(cfg, problem)
    max_offset = int(cfg.get("weights_audit", {}).get("max_offset", 20))
    params = fractional.FractionalParams.for_order(problem.fractional_order)
    W = fractional.assemble_weights(params, grid.dx,
                                    max(max_offset, grid.n_cells))
    rows = []
    worst = 0.0
    for d in range(max_offset + 1):
        oracle = fractional.quadrature_oracle_weight(params, grid.dx, d)
        got = W.row[d]
        abs_err = abs(got - oracle)
        rel_err = abs_err / max(abs(oracle), 1e-300)
        worst = max(worst, rel_err)
        rows.append([d, got, oracle, abs_err, rel_err])
    _write_csv(Path(out) / "weights_audit.csv",
               ["offset", "G_d", "oracle_value", "abs_err", "rel_err"],
               rows, cfg, seed)
    if worst > 1e-8:
        print(f"weights audit FAILED: worst relative error {worst:.3e}",
              file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


def cmd_oracle(cfg, out, seed):
    problem = build_problem(cfg)
    sch = build_scheme(cfg)
    grid = build_grid(cfg, problem)
    reference = _oracle_reference(cfg, problem, sch)
    vals = reference(grid.centers)
    rows = [[x, v] for x, v in zip(grid.centers, vals)]
    _write_csv(Path(out) / "oracle.csv", ["x_center", "u_exact"], rows, cfg,
               seed)
    return EXIT_OK


def cmd_properties(cfg, out, seed):
    problem = build_problem(cfg)
    sch = build_scheme(cfg)
    rows = []
    failures = []

    def record(audit, status, value, threshold):
        rows.append([audit, status, value, threshold])
        if status == "fail":
            failures.append(audit)

    lam = problem.fractional_order
    b = problem.fractional_weight
    if b == 0.0:
        record("weights_row_sum", "n/a", float("nan"), float("nan"))
        record("weights_signs", "n/a", float("nan"), float("nan"))
    else:
        params = fractional.FractionalParams.for_order(lam)
        W = fractional.assemble_weights(params, 1.0 / 20.0, 200)
        resid = abs(W.represented_row_sum()) / abs(W.diagonal)
        record("weights_row_sum", "pass" if resid <= 1e-12 else "fail",
               resid, 1e-12)
        signs_ok = bool(np.all(W.row[1:] >= 0.0) and W.row[0] < 0.0)
        record("weights_signs", "pass" if signs_ok else "fail",
               float(signs_ok), 1.0)
        diag_exact = -params.d_lam * (1.0 / 20.0) ** (1.0 - lam)
        diag_err = abs(W.diagonal - diag_exact) / abs(diag_exact)
        record("weights_diagonal", "pass" if diag_err <= 1e-10 else "fail",
               diag_err, 1e-10)

    flux = fluxes.ConvectiveFlux(sch["flux"], problem.convective_flux,
                                 problem.state_range,
                                 linear_speed=problem.linear_speed)
    lo, hi = problem.state_range
    pts = np.linspace(lo, hi, 60)
    A, B = np.meshgrid(pts, pts, indexing="ij")
    h = 1e-6 * max(1.0, hi - lo)
    d1 = (np.asarray(flux(A + h, B)) - np.asarray(flux(A - h, B))) / (2 * h)
    d2 = (np.asarray(flux(A, B + h)) - np.asarray(flux(A, B - h))) / (2 * h)
    mono_ok = bool(np.all(d1 >= -1e-8) and np.all(d2 <= 1e-8))
    record("flux_monotone", "pass" if mono_ok else "fail", float(mono_ok), 1.0)
    cons = np.abs(np.asarray(flux(pts, pts)) -
                  np.asarray(problem.f(pts))).max()
    record("flux_consistent", "pass" if cons <= 1e-12 else "fail",
           float(cons), 1e-12)

    if sch["kind"] == "ddg_rk3" and problem.derived.sup_a > 0:
        pars = sch["ddg_params"] or fluxes.DDGFluxParams.default_for_degree(
            sch["k"])
        cert = fluxes.check_admissibility(pars, problem, n_samples=128,
                                          seed=seed)
        record("ddg_admissibility", "pass" if cert.ok else "fail",
               float(cert.alpha if cert.ok else -1.0), 0.0)

    # conservation / monotone norms / entropy on a periodic window
    half = 2.0 * problem.domain_half_width
    grid = GridSpec(dx=cfg.get("grid", {}).get("dx", 1.0 / 40.0),
                    x_left=-half, x_right=half)
    params = fractional.FractionalParams.for_order(lam)
    flux_l = flux
    dt = solvers.cfl_dt(grid, flux_l.lipschitz_sum, problem.derived.sup_a,
                        params.d_lam, lam, b)
    traj = solvers.run(problem, grid, "ddg_k0", horizon=100 * dt,
                       boundary="periodic", store_full=True)
    mass = traj.ledger["mass"]
    drift = np.abs(np.diff(mass)).max() if mass.size > 1 else 0.0
    tol = 1e-12 * max(1.0, abs(mass[0]) / grid.dx)
    record("conservation", "pass" if drift <= tol else "fail", float(drift),
           tol)
    mon = analysis.stability_monitors(traj)
    bad = [k for k, v in mon["flags"].items() if v]
    record("monotone_norms", "pass" if not bad else "fail",
           float(len(bad)), 0.0)
    hist = traj.full_states
    levels = analysis.default_entropy_levels(hist[0])
    W = solvers.scheme_weights(problem, grid)
    worst = -np.inf
    for n in range(min(20, hist.shape[0] - 1)):
        audit = analysis.check_cell_entropy(hist[n], hist[n + 1], levels,
                                            problem, W, flux_l, traj.dt,
                                            "periodic")
        worst = max(worst, audit.worst_residual)
    ent_tol = 1e-12 * max(1.0, problem.derived.lipschitz_f *
                          max(abs(hi), abs(lo)))
    record("cell_entropy", "pass" if worst <= ent_tol else "fail",
           float(worst), ent_tol)

    _write_csv(Path(out) / "properties.csv",
               ["audit", "status", "value", "threshold"], rows, cfg, seed)
    if failures:
        print("audit failures: " + ", ".join(failures), file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracdg",
        description="solvers and audits for fractional degenerate "
                    "convection-diffusion equations")
    parser.add_argument("command",
                        choices=["run", "convergence", "weights-audit",
                                 "properties", "oracle"])
    parser.add_argument("--config", required=True, help="TOML config file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        handler = {
            "run": cmd_run,
            "convergence": cmd_convergence,
            "weights-audit": cmd_weights_audit,
            "properties": cmd_properties,
            "oracle": cmd_oracle,
        }[args.command]
        return handler(cfg, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except solvers.SolverAbort as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except spectral.WrapError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
