"""Accuracy gain from higher polynomial degree on the linear benchmark.

The linear problem (constant drift, constant local diffusion, fractional
term at lam = 1/2) has an exact Fourier solution, so the effect of raising
the element degree is measured directly: on the same coarse grid (dx = 1/20)
the interior L2 error drops by roughly an order of magnitude per degree.
"""

import numpy as np

from fracdg import (DGState, GridSpec, SpectralConfig, builtin_example,
                    linear_exact_solution, run)


def main(dx=1.0 / 20.0, horizon=0.1):
    cfg = SpectralConfig(half_width=32.0, modes=2**17)
    grid = GridSpec(dx=dx)
    mask = np.abs(grid.centers) <= 0.5
    ref = linear_exact_solution(
        1.0, 0.1, 1.0, 0.5, lambda x: np.exp(-((np.asarray(x) / 0.1) ** 2)),
        horizon, grid.centers, cfg)
    print(f"linear benchmark, dx = {dx:g}, T = {horizon}, lam = 0.5")
    print(f"{'degree':>6} {'steps':>7} {'interior L2 err':>16}")
    for degree in (0, 1, 2):
        prob = builtin_example("ex3", 0.5, 1.0)
        scheme = "ddg_rk3" if degree else "ddg_k0"
        traj = run(prob, grid, scheme, horizon, degree=degree)
        vals = DGState(traj.states[-1]).eval_at(grid.centers, grid) \
            if degree else traj.cell_values()
        err = np.sqrt(dx * np.sum((vals[mask] - ref[mask]) ** 2))
        print(f"{degree:>6} {traj.ledger['step'].size:>7} {err:>16.4e}")


if __name__ == "__main__":
    main()
