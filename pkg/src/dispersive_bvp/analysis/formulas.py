"""Closed-form constants and smallness thresholds for the stationary problem.

``c_star`` is the interpolation constant in
``||u||_inf <= c_star ||D^l u||**(1/(2l)) ||u||**(1 - 1/(2l))``; ``k1``/``k2``
are the constants of the derivative bound
``||D^i u||_p <= k1 ||D^(2l+1) u||**theta ||u||**(1-theta) + k2 ||u||``.
``wf2`` always denotes the weighted forcing size ``int (1 + x) f**2``; the
uniqueness thresholds bound its square root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

DEFAULT_SAFETY = 2.0


class ThresholdUndefined(ValueError):
    """A constant is undefined because a smallness condition fails."""


def _positive(**values: float) -> None:
    for name, v in values.items():
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be positive and finite, got {v}")


def _regular(l: int, k: int) -> None:
    if l < 1 or not 1 <= k < 4 * l:
        raise ValueError(f"regular-case formula needs 1 <= k < 4l (got l={l}, k={k})")


def beta(a: float) -> float:
    _positive(a=a)
    return min(a / 2.0, 1.0)


def c1_constant(l: int, k: int, c_star: float) -> float:
    """``(2k/(4l(2l-1)))**(k/(4l-k)) * ((4l-k)/(4l)) * (c_star**k/(k+2))**(4l/(4l-k))``."""
    _regular(l, k)
    _positive(c_star=c_star)
    q = 4 * l - k
    return (
        (2.0 * k / (4.0 * l * (2 * l - 1))) ** (k / q)
        * (q / (4.0 * l))
        * (c_star**k / (k + 2.0)) ** (4.0 * l / q)
    )


def c3_constant(l: int, k: int, a: float, c_star: float) -> float:
    """``c1 * a**(-(8l + (4l-2)k)/(4l-k))``."""
    _positive(a=a)
    q = 4 * l - k
    return c1_constant(l, k, c_star) * a ** (-(8.0 * l + (4 * l - 2) * k) / q)


def c2_constant(l: int, k: int, a: float, c_star: float, wf2: float) -> float:
    """Bound on ``||u||_{H^l} / sqrt(wf2)`` in the regular case."""
    if wf2 < 0 or not math.isfinite(wf2):
        raise ValueError(f"wf2 must be a finite nonnegative number, got {wf2}")
    q = 4 * l - k
    try:
        grow = c3_constant(l, k, a, c_star) * wf2 ** (2.0 * l * k / q)
    except OverflowError:
        # the bound is vacuous for such forcings
        return math.inf
    return math.sqrt((grow + 1.0 / (2.0 * a)) / beta(a))


def gamma_l(l: int, a: float, c_star: float, f_l2: float = 0.0) -> float:
    """``min(a/2, 3/2, (2l+1)/2 - (c_star ||f|| / a)**(4l) / (4l+2))``.

    Raises :class:`ThresholdUndefined` when the last entry is not positive,
    which happens exactly when ``||f||`` reaches the critical threshold.
    """
    _positive(a=a, c_star=c_star)
    if f_l2 < 0 or not math.isfinite(f_l2):
        raise ValueError(f"f_l2 must be a finite nonnegative number, got {f_l2}")
    third = (2 * l + 1) / 2.0 - (c_star * f_l2 / a) ** (4 * l) / (4 * l + 2.0)
    if third <= 0:
        raise ThresholdUndefined(
            f"gamma_l undefined: ||f|| = {f_l2:g} is not below the critical threshold "
            f"{critical_threshold(l, a, c_star):g}"
        )
    return min(a / 2.0, 1.5, third)


def critical_threshold(l: int, a: float, c_star: float) -> float:
    """Largest ``||f||`` for which the critical case ``k = 4l`` is covered."""
    _positive(a=a, c_star=c_star)
    r = 1.0 / (4 * l)
    return ((2 * l + 1) * (4 * l + 2)) ** r * a / (2.0**r * c_star)


def lipschitz_constant(l: int, k: int, a: float, c_star: float, m: float) -> float:
    """Continuous-dependence constant for ``l >= 2``, regular case.

    ``m`` is the larger ``sqrt(wf2)`` of the two forcings.  Returns ``inf``
    when the smallness condition fails.
    """
    _regular(l, k)
    c2 = c2_constant(l, k, a, c_star, m * m)
    denom = a - (2.0 ** ((k - 2) / 2.0) + 2.0 ** (1.5 * k)) * k * c2**k * m
    return 1.0 / denom if denom > 0 else math.inf


@dataclass(frozen=True)
class Threshold:
    """A bound on ``sqrt(wf2)``; ``safe = raw / safety``."""

    raw: float
    safe: float
    case: str
    terms: dict = field(default_factory=dict)
    safety: float = DEFAULT_SAFETY
    note: str = ""


def threshold_case(l: int, k: int) -> str:
    crit = "critical" if k == 4 * l else "regular"
    return f"{crit}_l1" if l == 1 else f"{crit}_l_ge_2"


def uniqueness_threshold(
    l: int,
    k: int,
    a: float,
    c_star: float,
    k1: float | None = None,
    k2: float | None = None,
    f_l2: float = 0.0,
    safety: float = DEFAULT_SAFETY,
) -> Threshold:
    """Smallness bound on ``sqrt(wf2)`` that guarantees a unique solution.

    The four cases are selected by ``(l, k)``.  The ``l = 1`` cases need the
    derivative-bound constants ``k1``, ``k2`` and also carry the cap
    ``sqrt(wf2) <= 1`` under which their bound was derived.  In the critical
    cases ``gamma_l`` is evaluated at ``f_l2``; when it is undefined the
    threshold is 0.
    """
    _positive(a=a, c_star=c_star)
    if safety < 1:
        raise ValueError(f"safety factor must be >= 1, got {safety}")
    if not 1 <= k <= 4 * l:
        raise ValueError(f"k must satisfy 1 ≤ k ≤ 4l (got k={k}, l={l})")
    case = threshold_case(l, k)
    if l == 1 and (k1 is None or k2 is None):
        raise ValueError(f"case {case} needs the derivative-bound constants k1 and k2")
    b = beta(a)
    terms: dict[str, float] = {}
    note = ""
    if k < 4 * l:
        c3 = c3_constant(l, k, a, c_star)
        terms["c3"] = c3
        terms["energy"] = (1.0 / (2.0 * a * c3)) ** ((4 * l - k) / (4.0 * l * k))
        if l >= 2:
            s = (2.0 ** ((k - 2) / 2.0) + 2.0 ** (1.5 * k)) * k
            terms["nonlinear"] = a ** (1.0 / k) * math.sqrt(a * b) / s ** (1.0 / k)
        else:
            k3 = k1 + k1 / (2.0 * a) + k2 / a
            k4 = (
                k
                * (2.0 ** ((k - 3) / 2.0) + 2.0 ** (1.5 * (k - 1)))
                * (0.5 * k1 * c_star**k * (a * b) ** (-k) + k3 * (a * b) ** (-(k - 1) / 2.0))
            )
            terms.update(k3=k3, k4=k4, nonlinear=(a / k4) ** (1.0 / k), unit_cap=1.0)
    else:
        terms["critical"] = critical_threshold(l, a, c_star)
        try:
            g = gamma_l(l, a, c_star, f_l2)
        except ThresholdUndefined as exc:
            return Threshold(0.0, 0.0, case, terms, safety, str(exc))
        terms["gamma_l"] = g
        if l >= 2:
            eta = l * (2.0 ** (2 * l + 1) + 2.0 ** (6 * l + 2)) * (2.0 * a * g) ** (-2 * l)
            terms.update(eta=eta, nonlinear=(a / eta) ** (1.0 / (4 * l)))
        else:
            k3 = k1 + k1 / (2.0 * a) + k2 / a
            k5 = (2.0**2.5 + 2.0**7.5) * (
                0.5 * k1 * c_star**4 * (2.0 * a * g) ** -4 + k3 * (2.0 * a * g) ** -1.5
            )
            terms.update(k3=k3, k5=k5, nonlinear=(a / k5) ** 0.25, unit_cap=1.0)
    bound_keys = ("energy", "critical", "nonlinear", "unit_cap")
    raw = min(v for key, v in terms.items() if key in bound_keys)
    return Threshold(raw, raw / safety, case, terms, safety, note)


@dataclass
class EstimateReport:
    """All constants for one parameter set; entries are ``None`` when not defined."""

    l: int
    k: int
    a: float
    c_star: float
    beta: float
    C1: float | None
    C2: float | None
    C3: float | None
    gamma_l: float | None
    thresholds: dict[str, Threshold]


def estimate_report(
    l: int,
    k: int,
    a: float,
    c_star: float,
    wf2: float = 0.0,
    f_l2: float = 0.0,
    k1: float | None = None,
    k2: float | None = None,
    safety: float = DEFAULT_SAFETY,
) -> EstimateReport:
    """Evaluate every constant that applies to ``(l, k)``."""
    C1 = C2 = C3 = g = None
    thresholds: dict[str, Threshold] = {}
    if k < 4 * l:
        C1 = c1_constant(l, k, c_star)
        C3 = c3_constant(l, k, a, c_star)
        C2 = c2_constant(l, k, a, c_star, wf2)
    else:
        crit = critical_threshold(l, a, c_star)
        thresholds["critical"] = Threshold(crit, crit / safety, "critical", {}, safety)
        try:
            g = gamma_l(l, a, c_star, f_l2)
        except ThresholdUndefined:
            g = None
    if l >= 2 or (k1 is not None and k2 is not None):
        thresholds["uniqueness"] = uniqueness_threshold(l, k, a, c_star, k1, k2, f_l2, safety)
    return EstimateReport(l, k, a, c_star, beta(a), C1, C2, C3, g, thresholds)
