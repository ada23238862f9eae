"""Stabilized finite-element solvers for 2D incompressible flow.

Five methods on a periodic-in-x unit square with slip walls: a fully
residual-based scheme, streamline-upwind plus grad-div, one-level local
projection, projection by interpolation, and a pressure-stabilized reference,
all advanced with a semi-implicit BDF2 integrator, plus the mixing-layer
benchmark harness that monitors vorticity thickness, kinetic energy,
enstrophy and palinstrophy.
"""

from .mesh import build_uniform, cell_geometry, horizontal_grid_lines, Mesh
from .fespace import (build_space, eval_basis, interpolate_function,
                      scott_zhang_interpolate, FeSpace, triangle_quadrature)
from .lps import FluctuationOperator, fluctuation_apply, local_l2_project
from .stab import StabCoeffs, compute_tau, compute_tau_lps_onelevel
from .assembly import Assembler, MethodKind, SparseSystem
from .linsolve import SolverConfig, solve
from .timestepper import FlowState, Stepper, discrete_time_derivative, run
from .diagnostics import (QoiRecord, mean_vorticity_profile, scalar_qois,
                          vorticity_thickness)
from .bench import (RunConfig, kh_initial_velocity, parse_config,
                    run_benchmark, run_taylor_green, write_qoi_csv,
                    write_vtk_snapshot)

__version__ = "0.1.0"
