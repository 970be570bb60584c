"""A-priori estimate checks on computed solutions and continuous dependence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..grid import Grid, GridFunction, l2_norm, sup_norm, weighted_f2
from ..nonlinear import DEFAULT_TOL, solve, solve_picard
from ..operator import ProblemSpec, forcing_values
from ..stencils import apply_derivative, sobolev_norm
from .constants import ConstantsReport
from .formulas import ThresholdUndefined, c2_constant, gamma_l, lipschitz_constant

ESTIMATE_ALLOWANCE = 0.05
SUP_ALLOWANCE = 0.02
ZERO_RTOL = 1e-12


@dataclass
class CheckResult:
    """``passed`` means ``lhs <= (1 + tolerance) * rhs``.

    ``advisory`` marks checks whose right side uses a lower bound for an
    unknown constant, so a failure is not conclusive.
    """

    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    tolerance: float
    advisory: bool = False
    applicable: bool = True
    context: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if not self.applicable:
            return "N/A"
        if self.passed:
            return "PASS"
        return "ADVISORY" if self.advisory else "FAIL"

    def line(self) -> str:
        return f"{self.name} {self.lhs:.10g} {self.rhs:.10g} {self.margin:.10g} {self.status}"


def make_check(name: str, lhs: float, rhs: float, tolerance: float, advisory: bool = False,
               **context) -> CheckResult:
    return CheckResult(
        name=name,
        lhs=float(lhs),
        rhs=float(rhs),
        margin=float(rhs - lhs),
        passed=bool(lhs <= (1.0 + tolerance) * rhs),
        tolerance=tolerance,
        advisory=advisory,
        context=context,
    )


def _has_zero(v: np.ndarray) -> bool:
    scale = float(np.max(np.abs(v)))
    if scale == 0.0 or np.min(np.abs(v)) <= ZERO_RTOL * scale:
        return True
    # a sign change puts a zero of the interpolant between two nodes
    return bool(np.any(np.sign(v[:-1]) * np.sign(v[1:]) < 0))


def sup_bound_check(u: GridFunction, tolerance: float = SUP_ALLOWANCE) -> CheckResult:
    """``||u||_inf <= sqrt(2) ||u||**(1/2) ||Du||**(1/2)`` for ``u`` with a zero."""
    lhs = sup_norm(u)
    du = apply_derivative(1, u)
    rhs = math.sqrt(2.0) * math.sqrt(l2_norm(u)) * math.sqrt(l2_norm(du))
    res = make_check("sup_bound", lhs, rhs, tolerance, N=u.grid.N)
    if not _has_zero(np.asarray(u.values)):
        res.applicable = False
        res.passed = False
        res.context["reason"] = "u has no zero on the grid"
    return res


def _c_star(constants) -> float:
    c = constants.c_star_lower if isinstance(constants, ConstantsReport) else constants
    if c is None or not c > 0:
        raise ValueError(f"a positive c_star estimate is required, got {c}")
    return float(c)


def estimate_checks(
    u: GridFunction,
    spec: ProblemSpec,
    grid: Grid,
    constants,
    tolerance: float = ESTIMATE_ALLOWANCE,
    sup_tolerance: float = SUP_ALLOWANCE,
) -> list[CheckResult]:
    """Check a converged solution against every applicable a-priori bound.

    ``constants`` is a :class:`ConstantsReport` or a number used for
    ``c_star``.  The weighted ``H^l`` bounds are advisory because they rely
    on that estimate.
    """
    if u.grid != grid:
        raise ValueError(f"u lives on {u.grid}, expected {grid}")
    c_star = _c_star(constants)
    f = GridFunction(grid, forcing_values(spec, grid))
    f_l2 = l2_norm(f)
    wf2 = weighted_f2(f)
    ctx = dict(l=spec.l, k=spec.k, a=spec.a, L=spec.L, N=grid.N, c_star=c_star)
    results = [make_check("l2_bound", l2_norm(u), f_l2 / spec.a, tolerance, **ctx)]
    hl = sobolev_norm(u, spec.l)
    if spec.is_critical:
        try:
            g = gamma_l(spec.l, spec.a, c_star, f_l2)
        except ThresholdUndefined as exc:
            skipped = make_check("critical_hl_bound", hl, math.nan, tolerance, True, **ctx)
            skipped.applicable = False
            skipped.context["reason"] = str(exc)
            results.append(skipped)
        else:
            rhs = math.sqrt(wf2 / (2.0 * spec.a * g))
            results.append(make_check("critical_hl_bound", hl, rhs, tolerance, True,
                                      gamma_l=g, **ctx))
    else:
        c2 = c2_constant(spec.l, spec.k, spec.a, c_star, wf2)
        results.append(make_check("weighted_hl_bound", hl, c2 * math.sqrt(wf2), tolerance, True,
                                  C2=c2, **ctx))
    results.append(sup_bound_check(u, sup_tolerance))
    return [r for r in results if r.applicable]


@dataclass
class DependenceReport:
    """Ratios ``||u(f1 + s g) - u(f1)|| / ||s g||`` for ``s`` in ``scales``."""

    scales: np.ndarray
    ratios: np.ndarray
    variation: float
    contraction: float
    advisory_bound: float
    lipschitz_bound: float | None


def _nodal(f, spec: ProblemSpec, grid: Grid) -> np.ndarray:
    return forcing_values(spec.with_(forcing=f), grid)


def continuous_dependence(
    spec: ProblemSpec,
    f1,
    f2,
    grid: Grid,
    tol: float = DEFAULT_TOL,
    method: str = "newton",
    scales=(1.0, 0.5, 0.25),
    c_star: float | None = None,
) -> DependenceReport:
    """Solve with ``f1`` and with ``f1 + s (f2 - f1)`` for each scale ``s``.

    ``variation`` is ``(max - min) / max`` over the ratios.  ``advisory_bound``
    is ``1 / (a (1 - s_c))`` with ``s_c`` the Picard contraction factor
    measured at ``f1``.  ``lipschitz_bound`` evaluates the closed-form
    constant for ``l >= 2`` in the regular case when ``c_star`` is given.
    """
    v1 = _nodal(f1, spec, grid)
    g = _nodal(f2, spec, grid) - v1
    base_spec = spec.with_(forcing=v1)
    base = solve(base_spec, grid, method, tol)
    if not base.converged:
        raise RuntimeError(f"base solve failed: {base.message}")
    scales = np.asarray(scales, dtype=float)
    ratios = np.zeros(scales.size)
    gnorm = l2_norm(GridFunction(grid, g))
    if gnorm > 0:
        for n, s in enumerate(scales):
            rep = solve(spec.with_(forcing=v1 + s * g), grid, method, tol)
            if not rep.converged:
                raise RuntimeError(f"perturbed solve (scale {s:g}) failed: {rep.message}")
            diff = GridFunction(grid, rep.solution.values - base.solution.values)
            ratios[n] = l2_norm(diff) / (s * gnorm)
    variation = float((ratios.max() - ratios.min()) / ratios.max()) if ratios.max() > 0 else 0.0
    picard = solve_picard(base_spec, grid, tol)
    tail = picard.contraction_ratios[-3:]
    contraction = float(np.max(tail)) if tail.size else 0.0
    advisory = 1.0 / (spec.a * (1.0 - contraction)) if contraction < 1 else math.inf
    lip = None
    if c_star is not None and spec.l >= 2 and not spec.is_critical:
        m = math.sqrt(max(weighted_f2(GridFunction(grid, v1)),
                          weighted_f2(GridFunction(grid, v1 + g))))
        lip = lipschitz_constant(spec.l, spec.k, spec.a, c_star, m)
    return DependenceReport(scales, ratios, variation, contraction, advisory, lip)


__all__ = [
    "CheckResult",
    "DependenceReport",
    "continuous_dependence",
    "estimate_checks",
    "make_check",
    "sobolev_norm",
    "sup_bound_check",
]
