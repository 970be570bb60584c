"""Finite-difference solvers and estimate checks for odd-order dispersive
boundary value problems ``a u + sum (-1)**(j+1) D^(2j+1) u + u^k Du = f``."""

__version__ = "0.1.0"

from .banded import BandedMatrix, SingularMatrixError, dense_solve_oracle, lu_factor, lu_solve
from .evolution import MarchConfig, Trajectory, march, march_step, project_to_boundary_conditions
from .forcing import ForcingDescriptor, manufactured_forcing, manufactured_solution
from .grid import Grid, GridFunction, build_grid, l2_inner, l2_norm, sup_norm, weighted_f2
from .nonlinear import (
    SolveReport,
    assemble_jacobian,
    continuation_solve,
    nonlinear_residual,
    picard_step,
    solve_newton,
    solve_picard,
)
from .operator import ProblemSpec, assemble_operator, linear_solve

__all__ = [
    "BandedMatrix",
    "ForcingDescriptor",
    "Grid",
    "GridFunction",
    "MarchConfig",
    "ProblemSpec",
    "SingularMatrixError",
    "SolveReport",
    "Trajectory",
    "assemble_jacobian",
    "assemble_operator",
    "build_grid",
    "continuation_solve",
    "dense_solve_oracle",
    "l2_inner",
    "l2_norm",
    "linear_solve",
    "lu_factor",
    "lu_solve",
    "manufactured_forcing",
    "manufactured_solution",
    "march",
    "march_step",
    "nonlinear_residual",
    "picard_step",
    "project_to_boundary_conditions",
    "solve_newton",
    "solve_picard",
    "sup_norm",
    "weighted_f2",
]
