"""Uniform cell grids and time grids for the explicit solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["GridSpec", "TimeGrid"]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of cells ``I_i = [x_left + i*dx, x_left + (i+1)*dx)``.

    ``padding_cells`` is the zero-Dirichlet exterior extent used when
    assembling nonlocal weight rows and running row-sum audits; the solution
    itself lives on the interior cells.
    """

    dx: float
    x_left: float = -1.0
    x_right: float = 1.0
    padding_cells: int | None = None

    def __post_init__(self):
        if self.dx <= 0:
            raise ValueError("dx must be positive")
        width = self.x_right - self.x_left
        n = width / self.dx
        if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
            raise ValueError("(x_right - x_left)/dx must be an integer")
        if self.padding_cells is None:
            object.__setattr__(self, "padding_cells", int(round(n)))
        if self.padding_cells < int(round(n)):
            raise ValueError("padding must cover at least one window width")

    @property
    def n_cells(self) -> int:
        return int(round((self.x_right - self.x_left) / self.dx))

    @property
    def edges(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x_left + self.dx * (np.arange(self.n_cells) + 0.5)

    @classmethod
    def from_resolution(cls, dx, half_width=1.0, padding_cells=None):
        return cls(dx=dx, x_left=-half_width, x_right=half_width,
                   padding_cells=padding_cells)


@dataclass(frozen=True)
class TimeGrid:
    """Fixed-step time grid ``t_n = n*dt`` reaching ``horizon`` exactly.

    The final step is shortened so that ``t_N = horizon``.
    """

    dt: float
    horizon: float

    def __post_init__(self):
        if self.dt <= 0 or self.horizon < 0:
            raise ValueError("dt must be positive and horizon nonnegative")

    @property
    def n_steps(self) -> int:
        if self.horizon == 0.0:
            return 0
        return int(np.ceil(self.horizon / self.dt - 1e-12))

    def step_sizes(self):
        n = self.n_steps
        if n == 0:
            return np.empty(0)
        out = np.full(n, self.dt)
        out[-1] = self.horizon - (n - 1) * self.dt
        return out
