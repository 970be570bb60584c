"""Implicit time marching: each step is one stationary solve with ``a = 1/h``.

Step ``n`` solves
``(u^n - u^(n-1))/h + sum (-1)**(j+1) D^(2j+1) u^n + (u^n)^k D u^n = 0``,
i.e. the stationary problem with ``a = 1/h`` and ``f = u^(n-1)/h``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridFunction, l2_norm, sup_norm
from .nonlinear import (
    DEFAULT_TOL,
    NEWTON_MAX_ITER,
    PICARD_MAX_ITER,
    SolveReport,
    continuation_solve,
    solve_newton,
    solve_picard,
)
from .operator import ProblemSpec, check_grid
from .stencils import bc_rows, boundary_derivative

log = logging.getLogger(__name__)

BC_TOL = 1e-8


class StepError(RuntimeError):
    """A stationary solve inside the march failed."""

    def __init__(self, message: str, report: SolveReport | None = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class MarchConfig:
    """Time step, step count and the data of the induced stationary problems."""

    L: float
    l: int
    k: int
    h: float
    steps: int
    grid: Grid
    solver: str = "newton"
    tol: float = DEFAULT_TOL
    max_iter: int | None = None

    def __post_init__(self) -> None:
        if not np.isfinite(self.h) or self.h <= 0:
            raise ValueError(f"time step h must be positive, got {self.h}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be an integer >= 1, got {self.steps}")
        if self.solver not in ("picard", "newton", "continuation"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if not np.isclose(self.grid.L, self.L):
            raise ValueError(f"grid length {self.grid.L} differs from L={self.L}")
        # validates l, k against each other
        self.stationary_spec(np.zeros(self.grid.size))
        check_grid(self.l, self.grid)

    @property
    def a(self) -> float:
        return 1.0 / self.h

    def stationary_spec(self, u_prev: np.ndarray) -> ProblemSpec:
        return ProblemSpec(self.L, self.l, self.k, self.a, np.asarray(u_prev) / self.h)


@dataclass
class Trajectory:
    """States ``u^0 .. u^n`` with their times and per-state diagnostics."""

    times: list[float] = field(default_factory=list)
    states: list[GridFunction] = field(default_factory=list)
    l2_norms: list[float] = field(default_factory=list)
    sup_norms: list[float] = field(default_factory=list)
    boundary_derivatives: list[float] = field(default_factory=list)
    completed: bool = True
    failure: str = ""

    def append(self, t: float, u: GridFunction, l: int) -> None:
        self.times.append(float(t))
        self.states.append(u)
        self.l2_norms.append(l2_norm(u))
        self.sup_norms.append(sup_norm(u))
        self.boundary_derivatives.append(boundary_derivative(u, l, "left"))

    def __len__(self) -> int:
        return len(self.states)


def boundary_defect(u: GridFunction, l: int) -> float:
    """Largest boundary-condition violation, relative to ``max(1, ||u||_inf)``.

    Each row is scaled by its absolute coefficient sum so that derivative
    conditions are comparable with the value conditions.
    """
    v = np.asarray(u.values)
    worst = 0.0
    for r in bc_rows(l, u.grid):
        worst = max(worst, abs(r.apply(v)) / float(np.sum(np.abs(r.coeffs))))
    return worst / max(1.0, float(np.max(np.abs(v))))


def project_to_boundary_conditions(u: GridFunction, l: int) -> GridFunction:
    """Smallest nodal correction (in the Euclidean sense) that makes ``u``
    satisfy the discrete boundary conditions; it touches only end nodes."""
    rows = bc_rows(l, u.grid)
    B = np.array([r.dense(u.grid.size) for r in rows])
    v = np.asarray(u.values)
    corr = B.T @ np.linalg.solve(B @ B.T, B @ v)
    return GridFunction(u.grid, v - corr)


def _check_state(u: GridFunction, cfg: MarchConfig, what: str) -> None:
    if u.grid != cfg.grid:
        raise ValueError(f"{what} lives on {u.grid}, march grid is {cfg.grid}")
    d = boundary_defect(u, cfg.l)
    if d > BC_TOL:
        raise ValueError(f"{what} violates the boundary conditions (defect {d:.3e} > {BC_TOL:g})")


def march_step(u_prev: GridFunction, cfg: MarchConfig) -> GridFunction:
    """Advance one step; raises :class:`StepError` if the stationary solve fails."""
    _check_state(u_prev, cfg, "previous state")
    spec = cfg.stationary_spec(u_prev.values)
    if cfg.solver == "newton":
        rep = solve_newton(spec, cfg.grid, cfg.tol, cfg.max_iter or NEWTON_MAX_ITER, u0=u_prev)
    elif cfg.solver == "picard":
        rep = solve_picard(spec, cfg.grid, cfg.tol, cfg.max_iter or PICARD_MAX_ITER, u0=u_prev)
    else:
        rep = continuation_solve(spec, cfg.grid, cfg.tol, max_iter=cfg.max_iter or NEWTON_MAX_ITER)
    if not rep.converged:
        raise StepError(
            f"{rep.method} failed (lambda reached {rep.final_lambda:g}): {rep.message}", rep
        )
    return rep.solution


def march(u0: GridFunction, cfg: MarchConfig) -> Trajectory:
    """Run ``cfg.steps`` steps from ``u0``; a failing step truncates the trajectory."""
    _check_state(u0, cfg, "initial state")
    traj = Trajectory()
    traj.append(0.0, u0, cfg.l)
    u = u0
    for n in range(1, cfg.steps + 1):
        try:
            u = march_step(u, cfg)
        except StepError as exc:
            traj.completed = False
            traj.failure = f"step {n}: {exc}"
            log.warning("march stopped at step %d: %s", n, exc)
            break
        traj.append(n * cfg.h, u, cfg.l)
    return traj
