"""How fractional diffusion reshapes a degenerate shock.

The first benchmark transports a trapezoid with a Burgers flux while the
diffusion coefficient is active only above u = 0.5, so the lower part of the
profile steepens into a genuine shock.  Running the same data with and
without the nonlocal term shows the fractional operator changing both the
size and the speed of that shock: the heavy-tailed kernel leaks mass ahead
of the front and rounds the shoulder that local diffusion leaves sharp.

Writes the profiles to ``demo_out/shock_profiles.csv`` and, when matplotlib
is importable, a side-by-side figure next to it.
"""

import pathlib

import numpy as np

from fracdg import GridSpec, builtin_example, run

OUT = pathlib.Path(__file__).resolve().parent / "demo_out"


def main(dx=1.0 / 320.0, horizon=0.15):
    grid = GridSpec(dx=dx)
    profiles = {"x": grid.centers}
    for label, b in (("local_only", 0.0), ("with_fractional", 1.0)):
        prob = builtin_example("ex1", fractional_order=0.5,
                               fractional_weight=b)
        traj = run(prob, grid, "ddg_k0", horizon)
        profiles[label] = traj.cell_values()
        print(f"{label:16s}: mass {traj.ledger['mass'][-1]:.6f}, "
              f"max {profiles[label].max():.4f}")
    prob = builtin_example("ex1")
    profiles["initial"] = np.asarray(prob.initial_datum(grid.centers))

    OUT.mkdir(exist_ok=True)
    header = ",".join(profiles)
    rows = np.column_stack(list(profiles.values()))
    np.savetxt(OUT / "shock_profiles.csv", rows, delimiter=",",
               header=header, comments="")
    print(f"wrote {OUT / 'shock_profiles.csv'}")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(profiles["x"], profiles["initial"], ":", color="gray",
            label="initial datum")
    ax.plot(profiles["x"], profiles["local_only"], label="local diffusion")
    ax.plot(profiles["x"], profiles["with_fractional"],
            label="plus fractional term")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend()
    fig.tight_layout()
    fig.savefig(OUT / "shock_profiles.png", dpi=150)
    print(f"wrote {OUT / 'shock_profiles.png'}")


if __name__ == "__main__":
    main()
