"""Picard, damped Newton and lambda-continuation for the full problem.

The lambda-family is ``a u + sum (-1)**(j+1) D^(2j+1) u + lam u^k Du = lam f``
with the boundary rows of the linear operator.  Write ``B_lam(u)`` for the
solution of the linear problem with right-hand side ``lam (f - u^k Du)``.
All three solvers measure convergence by the fixed-point defect
``||u - B_lam(u)||_inf`` together with the L2 size of the last update.  The
defect equals ``A^-1`` applied to the raw residual, so it vanishes exactly at
the same discrete solutions while staying clear of the ``dx**-(2l+1)``
roundoff amplification that limits the raw residual on fine grids.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .banded import BandedMatrix, SingularMatrixError, lu_factor, lu_solve
from .grid import Grid, GridFunction
from .operator import (
    ProblemSpec,
    assemble_operator,
    check_grid,
    collocation_mask,
    factorized_operator,
    forcing_values,
    solve_constrained,
)
from .stencils import derivative_matrix

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
PICARD_MAX_ITER = 200
NEWTON_MAX_ITER = 50
CONTINUATION_STEPS = 20
MAX_HALVINGS = 30
MAX_RELAXATION_HALVINGS = 2


class SingularJacobianError(SingularMatrixError):
    """Newton met a singular Jacobian; ``suggestion`` names a fallback."""

    def __init__(self, message: str, lam: float, iteration: int):
        super().__init__(message)
        self.lam = lam
        self.iteration = iteration
        self.suggestion = "continuation"


@dataclass
class SolveReport:
    solution: GridFunction
    method: str
    iterations: int
    residual_history: np.ndarray
    lambda_path: np.ndarray
    converged: bool
    contraction_ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))
    step_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    path_l2_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    message: str = ""

    @property
    def final_residual(self) -> float:
        return float(self.residual_history[-1]) if self.residual_history.size else float("nan")

    @property
    def final_lambda(self) -> float:
        return float(self.lambda_path[-1]) if self.lambda_path.size else 0.0


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return lam


def _values(u, grid: Grid) -> np.ndarray:
    if isinstance(u, GridFunction):
        if u.grid != grid:
            raise ValueError(f"u lives on {u.grid}, expected {grid}")
        return np.array(u.values)
    v = np.array(u, dtype=float)
    if v.shape != (grid.size,):
        raise ValueError(f"u has shape {v.shape}, grid needs ({grid.size},)")
    return v


def _matvec(M, x: np.ndarray) -> np.ndarray:
    # banded product in the dtype of x
    y = np.zeros(M.n, dtype=x.dtype)
    for d in range(-M.kl, M.ku + 1):
        rows = slice(max(0, -d), M.n - max(0, d))
        cols = slice(max(0, d), M.n + min(0, d))
        y[rows] += M.diagonal(d).astype(x.dtype) * x[cols]
    return y


class _Workspace:
    """Per-solve data: operator, factorization, D1 and the forcing samples."""

    def __init__(self, spec: ProblemSpec, grid: Grid, lam: float):
        check_grid(spec.l, grid)
        self.spec = spec
        self.grid = grid
        self.lam = _check_lambda(lam)
        self.A = assemble_operator(spec, grid)
        self.lu = factorized_operator(spec, grid)
        self.D1 = derivative_matrix(1, grid)
        self.f = forcing_values(spec, grid)
        self.mask = collocation_mask(spec.l, grid)

    def convective_rhs(self, u: np.ndarray) -> np.ndarray:
        # diverging iterates may overflow; callers test the defect for finiteness
        with np.errstate(over="ignore", invalid="ignore"):
            rhs = self.lam * (self.f - u**self.spec.k * (self.D1 @ u))
        rhs[~self.mask] = 0.0
        return rhs

    def picard(self, u: np.ndarray) -> np.ndarray:
        return lu_solve(self.lu, self.convective_rhs(u))

    def residual(self, u: np.ndarray) -> np.ndarray:
        """Raw residual ``A u + lam (u^k Du - f)`` on collocation rows (boundary
        rows: ``A u``), accumulated in extended precision.

        In double precision the cancellation between ``A u`` and ``f`` costs
        about ``eps ||f||``, which dominates for high-order operators with
        large forcing.
        """
        ld = np.longdouble
        v = u.astype(ld)
        with np.errstate(over="ignore", invalid="ignore"):
            r = _matvec(self.A, v)
            conv = self.lam * (v**self.spec.k * _matvec(self.D1, v) - self.f.astype(ld))
            r[self.mask] += conv[self.mask]
            return r.astype(float)

    def defect(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(u - B(u), r)`` with ``u - B(u) = A^-1 r``."""
        r = self.residual(u)
        return lu_solve(self.lu, r), r

    def l2(self, v: np.ndarray) -> float:
        with np.errstate(over="ignore", invalid="ignore"):
            return float(np.sqrt(max(np.dot(self.grid.trapezoid_weights, v * v), 0.0)))


def nonlinear_residual(u, spec: ProblemSpec, grid: Grid, lam: float = 1.0) -> GridFunction:
    """Raw residual of the lambda-problem at ``u``.

    Collocation rows hold ``A u + lam u^k Du - lam f``; constraint rows hold
    the boundary-condition values of ``u``.
    """
    lam = _check_lambda(lam)
    v = _values(u, grid)
    A = assemble_operator(spec, grid)
    r = A @ v
    mask = collocation_mask(spec.l, grid)
    conv = lam * (v**spec.k * (derivative_matrix(1, grid) @ v) - forcing_values(spec, grid))
    r[mask] += conv[mask]
    return GridFunction(grid, r)


def picard_step(u, spec: ProblemSpec, grid: Grid, lam: float = 1.0) -> GridFunction:
    """One application of ``B_lam``: solve the linear problem with ``lam (f - u^k Du)``."""
    lam = _check_lambda(lam)
    v = _values(u, grid)
    f = forcing_values(spec, grid)
    rhs = lam * (f - v**spec.k * (derivative_matrix(1, grid) @ v))
    return GridFunction(grid, solve_constrained(spec, grid, rhs))


def solve_picard(
    spec: ProblemSpec,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_iter: int = PICARD_MAX_ITER,
    relaxation: float = 1.0,
    u0=None,
) -> SolveReport:
    """Iterate ``u <- u + omega (B(u) - u)`` from ``u0`` (zero by default).

    ``omega`` starts at ``relaxation`` and is halved (at most twice) when the
    defect grows on two consecutive iterations or turns non-finite; the
    offending iterate is discarded.  Non-convergence is reported, not raised.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not 0.0 < relaxation <= 1.0:
        raise ValueError(f"relaxation must lie in (0, 1], got {relaxation}")
    ws = _Workspace(spec, grid, 1.0)
    u = np.zeros(grid.size) if u0 is None else _values(u0, grid)
    omega = relaxation
    halvings = 0
    G = ws.defect(u)[0]
    d = float(np.max(np.abs(G)))
    defects, steps, ratios = [], [], []
    growth = 0
    converged = False
    message = ""
    it = 0
    for it in range(1, max_iter + 1):
        u_new = u - omega * G
        step = ws.l2(u_new - u)
        G_new = ws.defect(u_new)[0]
        d_new = float(np.max(np.abs(G_new)))
        finite = np.isfinite(d_new) and np.all(np.isfinite(u_new))
        growth = growth + 1 if (not finite or d_new > d) else 0
        if not finite or growth >= 2:
            if halvings < MAX_RELAXATION_HALVINGS:
                omega *= 0.5
                halvings += 1
                growth = 0
                log.info("picard: defect growing, relaxation halved to %g", omega)
                continue
            if not finite:
                message = "iterates became non-finite"
                break
        if steps and steps[-1] > 0:
            ratios.append(step / steps[-1])
        steps.append(step)
        defects.append(d_new)
        u, G, d = u_new, G_new, d_new
        if step <= tol and d <= tol:
            converged = True
            break
    if not converged and not message:
        message = f"no convergence in {max_iter} iterations (defect {d:.3e})"
    return SolveReport(
        solution=GridFunction(grid, u),
        method="picard",
        iterations=it,
        residual_history=np.array(defects if defects else [d]),
        lambda_path=np.array([1.0]),
        converged=converged,
        contraction_ratios=np.array(ratios),
        step_history=np.array(steps),
        path_l2_norms=np.array([ws.l2(u)]),
        message=message,
    )


def assemble_jacobian(u, spec: ProblemSpec, grid: Grid, lam: float = 1.0) -> BandedMatrix:
    """Jacobian of the raw residual at ``u``.

    Collocation rows gain ``lam (u^k D1 + k u^(k-1) (D1 u))``; the
    constraint rows are those of the linear operator.
    """
    lam = _check_lambda(lam)
    v = _values(u, grid)
    A = assemble_operator(spec, grid)
    D1 = derivative_matrix(1, grid)
    mask = collocation_mask(spec.l, grid).astype(float)
    k = spec.k
    conv = D1.scale_rows(lam * v**k * mask)
    diag = lam * k * v ** (k - 1) * (D1 @ v) * mask
    J = A + conv
    J.set_diagonal(0, J.diagonal(0) + diag)
    return J


def _newton(
    ws: _Workspace, tol: float, max_iter: int, u0: np.ndarray
) -> tuple[np.ndarray, bool, int, list[float], list[float], str]:
    spec, grid, lam = ws.spec, ws.grid, ws.lam
    u = u0.copy()
    G, r = ws.defect(u)
    d = float(np.max(np.abs(G)))
    defects, steps = [d], []
    for it in range(1, max_iter + 1):
        if not np.isfinite(d):
            return u, False, it - 1, defects, steps, "defect is non-finite"
        J = assemble_jacobian(u, spec, grid, lam)
        try:
            JLU = lu_factor(J)
        except SingularMatrixError as exc:
            raise SingularJacobianError(
                f"Jacobian singular at lambda={lam:g}, iteration {it}: {exc}; "
                "try continuation_solve to approach this lambda gradually",
                lam,
                it,
            ) from exc
        delta = -lu_solve(JLU, r)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            u_t = u + t * delta
            G_t, r_t = ws.defect(u_t)
            d_t = float(np.max(np.abs(G_t)))
            if np.isfinite(d_t) and (d_t <= d or d_t <= tol):
                break
            t *= 0.5
        else:
            if d <= tol:
                return u, True, it - 1, defects, steps, ""
            return u, False, it, defects, steps, (
                f"line search failed after {MAX_HALVINGS} halvings (defect {d:.3e})"
            )
        step = ws.l2(t * delta)
        u, r, d = u_t, r_t, d_t
        defects.append(d)
        steps.append(step)
        if d <= tol and step <= tol:
            return u, True, it, defects, steps, ""
    return u, False, max_iter, defects, steps, (
        f"no convergence in {max_iter} iterations (defect {d:.3e})"
    )


def solve_newton(
    spec: ProblemSpec,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    u0=None,
    lam: float = 1.0,
) -> SolveReport:
    """Damped Newton from ``u0`` (zero by default) for the lambda-problem.

    Each step is halved, up to 30 times, until the defect does not increase.
    A singular Jacobian raises :class:`SingularJacobianError`.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    ws = _Workspace(spec, grid, lam)
    start = np.zeros(grid.size) if u0 is None else _values(u0, grid)
    u, ok, its, defects, steps, msg = _newton(ws, tol, max_iter, start)
    return SolveReport(
        solution=GridFunction(grid, u),
        method="newton",
        iterations=its,
        residual_history=np.array(defects),
        lambda_path=np.array([ws.lam]),
        converged=ok,
        step_history=np.array(steps),
        path_l2_norms=np.array([ws.l2(u)]),
        message=msg,
    )


def continuation_solve(
    spec: ProblemSpec,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    steps: int = CONTINUATION_STEPS,
    max_iter: int = NEWTON_MAX_ITER,
) -> SolveReport:
    """Newton along ``lam = 1/steps, 2/steps, ..., 1``, each stage warm-started.

    The first stage starts from the linear solution for ``lam_1 f``.  On a
    failing stage the report carries the last solution reached and the path
    up to it, with ``converged`` false.
    """
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be an integer >= 1, got {steps}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    lams = np.arange(1, int(steps) + 1) / int(steps)
    base = _Workspace(spec, grid, 1.0)
    u = lu_solve(base.lu, lams[0] * np.where(base.mask, base.f, 0.0))
    path, finals, norms = [], [], []
    total = 0
    converged = True
    message = ""
    for lam in lams:
        ws = _Workspace(spec, grid, lam)
        try:
            u_new, ok, its, defects, _, msg = _newton(ws, tol, max_iter, u)
        except SingularJacobianError as exc:
            ok, its, msg = False, exc.iteration, str(exc)
        total += its
        if not ok:
            converged = False
            message = f"stage lambda={lam:g} failed: {msg}"
            break
        u = u_new
        path.append(float(lam))
        finals.append(defects[-1])
        norms.append(ws.l2(u))
    if not path:
        finals = [float("nan")]
    return SolveReport(
        solution=GridFunction(grid, u),
        method="continuation",
        iterations=total,
        residual_history=np.array(finals),
        lambda_path=np.array(path),
        converged=converged,
        path_l2_norms=np.array(norms),
        message=message,
    )


def solve(spec: ProblemSpec, grid: Grid, method: str = "newton", tol: float = DEFAULT_TOL,
          max_iter: int | None = None) -> SolveReport:
    """Dispatch to one of the three solvers by name."""
    if method == "picard":
        return solve_picard(spec, grid, tol, max_iter or PICARD_MAX_ITER)
    if method == "newton":
        return solve_newton(spec, grid, tol, max_iter or NEWTON_MAX_ITER)
    if method == "continuation":
        return continuation_solve(spec, grid, tol, max_iter=max_iter or NEWTON_MAX_ITER)
    raise ValueError(f"unknown solver {method!r}; expected picard, newton or continuation")

