"""Embedded discontinuous Galerkin solver for distributed optimal control of
the Poisson equation on the unit square."""

from .dofs import build_trace_map, interpolate_boundary
from .edg import assemble_local, assemble_operator_B, condense
from .estimator import EDGOptimalControl
from .mesh import Mesh, build_structured_mesh, outward_normal
from .metrics import (
    ConvergenceRecord,
    cost_functional,
    eoc,
    l2_error_scalar,
    l2_error_vector,
    l2_project_scalar,
    l2_project_vector,
)
from .mms import ExactSolution, ProblemData, builtin_paper_case, manufacture
from .solver import SolutionFields, SolverError, solve_condensed, solve_monolithic
from .study import RunConfig, run_convergence_study, run_single

__version__ = "0.1.0"

__all__ = [
    "ConvergenceRecord",
    "EDGOptimalControl",
    "ExactSolution",
    "Mesh",
    "ProblemData",
    "RunConfig",
    "SolutionFields",
    "SolverError",
    "assemble_local",
    "assemble_operator_B",
    "build_structured_mesh",
    "build_trace_map",
    "builtin_paper_case",
    "condense",
    "cost_functional",
    "eoc",
    "interpolate_boundary",
    "l2_error_scalar",
    "l2_error_vector",
    "l2_project_scalar",
    "l2_project_vector",
    "manufacture",
    "outward_normal",
    "run_convergence_study",
    "run_single",
    "solve_condensed",
    "solve_monolithic",
]
