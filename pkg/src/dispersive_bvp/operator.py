"""Problem data, the discrete linear operator, and the linear solve.

The linear operator is ``a u + sum_{j=1..l} (-1)**(j+1) D^(2j+1) u`` with the
``2l+1`` boundary conditions imposed by replacing the rows nearest each end:
rows ``0..l-1`` on the left and ``N-l..N`` on the right.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np

from .banded import BandedLU, BandedMatrix, SingularMatrixError, lu_factor, lu_solve
from .forcing import ForcingDescriptor
from .grid import Grid, GridFunction, l2_inner, l2_norm
from .stencils import bc_rows, boundary_derivative, derivative_matrix, sobolev_norm

Forcing = Union[ForcingDescriptor, GridFunction, np.ndarray]


def min_intervals(l: int) -> int:
    """Smallest N for which every stencil of order ``2l+1`` fits with margin."""
    return 4 * l + 8


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Data of the stationary problem on ``(0, L)``.

    ``k`` is restricted to ``1 <= k <= 4l``; ``k < 4l`` is the regular case,
    ``k == 4l`` the critical one.
    """

    L: float
    l: int
    k: int
    a: float
    forcing: Forcing = field(default_factory=lambda: ForcingDescriptor("zero"))

    def __post_init__(self) -> None:
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if not np.isfinite(self.a) or self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if int(self.l) != self.l or self.l < 1:
            raise ValueError(f"l must be an integer >= 1, got {self.l}")
        if int(self.k) != self.k or not 1 <= self.k <= 4 * self.l:
            raise ValueError(
                f"k must satisfy 1 ≤ k ≤ 4l (got k={self.k}, l={self.l}, so 1 ≤ k ≤ {4 * int(self.l)})"
            )
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "a", float(self.a))

    @property
    def case(self) -> str:
        return "critical" if self.k == 4 * self.l else "regular"

    @property
    def is_critical(self) -> bool:
        return self.k == 4 * self.l

    def with_(self, **changes) -> ProblemSpec:
        data = dict(L=self.L, l=self.l, k=self.k, a=self.a, forcing=self.forcing)
        data.update(changes)
        return ProblemSpec(**data)


def forcing_values(spec: ProblemSpec, grid: Grid) -> np.ndarray:
    """Nodal samples of the forcing on ``grid``."""
    f = spec.forcing
    if isinstance(f, ForcingDescriptor):
        return f.evaluate(grid.nodes, spec)
    if isinstance(f, GridFunction):
        if f.grid != grid:
            raise ValueError(f"forcing lives on {f.grid}, solve requested on {grid}")
        return np.array(f.values)
    v = np.asarray(f, dtype=float)
    if v.shape != (grid.size,):
        raise ValueError(f"nodal forcing has shape {v.shape}, grid needs ({grid.size},)")
    return v.copy()


def check_grid(l: int, grid: Grid) -> None:
    grid.require(min_intervals(l), f"the order-{2 * l + 1} operator")


def collocation_mask(l: int, grid: Grid) -> np.ndarray:
    """True on rows that carry the differential equation."""
    mask = np.ones(grid.size, dtype=bool)
    mask[:l] = False
    mask[grid.N - l :] = False
    return mask


@lru_cache(maxsize=32)
def _operator(L: float, l: int, a: float, grid: Grid) -> BandedMatrix:
    A = BandedMatrix.identity(grid.size, a)
    for j in range(1, l + 1):
        A = A + (-1) ** (j + 1) * derivative_matrix(2 * j + 1, grid)
    for r in bc_rows(l, grid):
        A.set_row(r.row, r.start, r.coeffs)
    A.data.flags.writeable = False
    return A


def assemble_operator(spec: ProblemSpec, grid: Grid) -> BandedMatrix:
    """Banded linear operator with boundary rows in place."""
    check_grid(spec.l, grid)
    return _operator(spec.L, spec.l, spec.a, grid).copy()


@lru_cache(maxsize=32)
def _factor(L: float, l: int, a: float, grid: Grid) -> BandedLU:
    return lu_factor(_operator(L, l, a, grid))


def factorized_operator(spec: ProblemSpec, grid: Grid) -> BandedLU:
    """Cached factorization of the linear operator; shared read-only."""
    check_grid(spec.l, grid)
    try:
        return _factor(spec.L, spec.l, spec.a, grid)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"discrete operator singular for L={spec.L}, l={spec.l}, a={spec.a}, N={grid.N} "
            f"(a resolution problem of the discretization): {exc}"
        ) from exc


def constrained_rhs(l: int, grid: Grid, F) -> np.ndarray:
    """Copy of ``F`` with zeros on the boundary-condition rows."""
    rhs = np.array(F, dtype=float)
    rhs[~collocation_mask(l, grid)] = 0.0
    return rhs


def solve_constrained(spec: ProblemSpec, grid: Grid, F) -> np.ndarray:
    return lu_solve(factorized_operator(spec, grid), constrained_rhs(spec.l, grid, F))


@dataclass
class LinearSolveReport:
    solution: GridFunction
    residual_inf: float
    energy_identity_residual: float
    empirical_C0: float


def energy_identity_residual(
    u: GridFunction, spec: ProblemSpec, grid: Grid, F: GridFunction
) -> float:
    """Defect of the energy balance obtained by testing the equation with ``u``.

    ``|a (u,u) + (D^l u(0))**2 / 2 - (F,u)|``.  The convective term drops out
    of this balance under the boundary conditions, so ``F`` is the forcing of
    either the linear or the full problem.
    """
    if u.grid != grid or F.grid != grid:
        raise ValueError("u, F and grid must agree")
    dl0 = boundary_derivative(u, spec.l, "left")
    return abs(spec.a * l2_inner(u, u) + 0.5 * dl0**2 - l2_inner(F, u))


def linear_solve(spec: ProblemSpec, grid: Grid, F: GridFunction) -> LinearSolveReport:
    """Solve the linear problem with right-hand side ``F``.

    ``residual_inf`` is the normwise backward error
    ``||A u - F~||_inf / (||A||_inf ||u||_inf + ||F~||_inf)``, where ``F~`` is
    ``F`` with its boundary-row entries zeroed.
    """
    if isinstance(F, GridFunction):
        if F.grid != grid:
            raise ValueError(f"F lives on {F.grid}, solve requested on {grid}")
    else:
        F = GridFunction(grid, F)
    check_grid(spec.l, grid)
    A = _operator(spec.L, spec.l, spec.a, grid)
    rhs = constrained_rhs(spec.l, grid, F.values)
    u = lu_solve(factorized_operator(spec, grid), rhs)
    scale = A.norm_inf() * np.max(np.abs(u)) + np.max(np.abs(rhs))
    residual = float(np.max(np.abs(A @ u - rhs)) / scale) if scale > 0 else 0.0
    sol = GridFunction(grid, u)
    fnorm = l2_norm(F)
    c0 = sobolev_norm(sol, 2 * spec.l + 1) / fnorm if fnorm > 0 else 0.0
    return LinearSolveReport(
        solution=sol,
        residual_inf=residual,
        energy_identity_residual=energy_identity_residual(sol, spec, grid, F),
        empirical_C0=c0,
    )

