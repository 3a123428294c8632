"""Discontinuous Galerkin solvers for degenerate convection-diffusion
equations with an added fractional (Levy) diffusion term."""

from .analysis import (ConvergenceReport, EntropyAudit, bilinear_interpolant,
                       check_cell_entropy, convergence_rate, convergence_study,
                       error_norms, holder_audit, stability_monitors)
from .fluxes import (AdmissibilityResult, ConvectiveFlux, DDGFluxParams,
                     LDGFluxParams, check_admissibility, convective_flux,
                     ddg_diffusion_flux, ldg_flux_pair)
from .fractional import (FractionalParams, WeightMatrix, apply_levy,
                         assemble_dg_blocks, assemble_weights,
                         compute_c_lambda, discrete_h_seminorm,
                         quadrature_oracle_weight, symbol_quadrature)
from .grids import GridSpec, TimeGrid
from .piecewise import PiecewiseFunction, constant, polynomial
from .problems import (DerivedCoefficients, ProblemSpec, builtin_example,
                       eval_coefficients, project_initial)
from .solvers import (CellState, DGState, LDGState, SolverAbort, Trajectory,
                      cfl_dt, ddg_semidiscrete_rhs, rk3_step, rk3_time_step,
                      run, step_ddg_k0, step_ldg_k0)
from .spectral import (SpectralConfig, WrapError, linear_exact_solution,
                       spectral_levy)

__version__ = "0.1.0"
