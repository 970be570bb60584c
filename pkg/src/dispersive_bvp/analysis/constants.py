"""Numerical lower bounds for the interpolation constants.

Trial functions are polynomials, so their L2 norms (and those of their
derivatives) are computed exactly by Gauss-Legendre quadrature.  Sup norms
are maxima over a sampling grid and therefore never exceed the true sup.
Every ratio reported for ``c_star`` is thus a value attained by an actual
function and is a lower bound on the best constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import legendre as leg

from ..grid import Grid

DEFAULT_DEGREE = 12
DEFAULT_TRIALS = 200
DEFAULT_SAMPLES = 1024
ASCENT_SWEEPS = 120
MIN_STEP = 1e-4


@dataclass
class ConstantsReport:
    """Best ratios found; ``history[t]`` is the running maximum after trial ``t``."""

    l: int
    L: float
    c_star_lower: float | None
    k1_lower: float | None = None
    k2_lower: float | None = None
    trials: int = 0
    best_trial: dict = field(default_factory=dict)
    history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    i: int | None = None
    theta: float | None = None
    p: float | None = None


class _TrialSpace:
    """Weighted Legendre basis ``w(x) P_j(t(x))`` on ``[0, L]``, ``j <= degree``.

    Stores basis values on the sampling nodes and on Gauss nodes, plus the
    chosen derivative orders on Gauss nodes.
    """

    def __init__(self, L: float, degree: int, weight: Polynomial, orders, samples: np.ndarray,
                 quad_nodes: int):
        self.L = L
        t, wq = leg.leggauss(quad_nodes)
        self.xq = 0.5 * L * (t + 1.0)
        self.wq = 0.5 * L * wq
        self.samples = samples
        self.dim = degree + 1
        self.sample_values = self._table(weight, 0, samples)
        self.quad = {m: self._table(weight, m, self.xq) for m in orders}

    def _table(self, weight: Polynomial, m: int, x: np.ndarray) -> np.ndarray:
        tx = 2.0 * x / self.L - 1.0
        out = np.zeros((x.size, self.dim))
        for j in range(self.dim):
            c = np.zeros(j + 1)
            c[j] = 1.0
            total = np.zeros(x.size)
            # Leibniz rule; each t-derivative of P_j brings a factor 2/L
            for r in range(m + 1):
                dw = weight.deriv(r)(x)
                dp = leg.legval(tx, leg.legder(c, m - r)) * (2.0 / self.L) ** (m - r)
                total += comb(m, r) * dw * dp
            out[:, j] = total
        return out

    def l2(self, m: int, C: np.ndarray) -> np.ndarray:
        v = self.quad[m] @ C
        return np.sqrt(np.einsum("i,i...->...", self.wq, v * v))

    def sup(self, C: np.ndarray) -> np.ndarray:
        return np.max(np.abs(self.sample_values @ C), axis=0)


def _sample_nodes(L: float, grid: Grid | None) -> np.ndarray:
    if grid is None:
        return np.linspace(0.0, L, DEFAULT_SAMPLES + 1)
    if not np.isclose(grid.L, L):
        raise ValueError(f"sampling grid has length {grid.L}, expected {L}")
    return np.asarray(grid.nodes)


def _ascend(score, c: np.ndarray, sweeps: int = ASCENT_SWEEPS) -> tuple[np.ndarray, float]:
    """Coordinate ascent: evaluate all +/- single-coordinate moves at once,
    take the best improving one, halve the step when none improves."""
    c = c / np.linalg.norm(c)
    best = float(score(c[:, None])[0])
    step = 0.5
    d = c.size
    moves = np.hstack([np.eye(d), -np.eye(d)])
    for _ in range(sweeps):
        cand = c[:, None] + step * moves
        vals = score(cand)
        vals = np.where(np.isfinite(vals), vals, -np.inf)
        j = int(np.argmax(vals))
        if vals[j] > best:
            c = cand[:, j] / np.linalg.norm(cand[:, j])
            best = float(vals[j])
        else:
            step *= 0.5
            if step < MIN_STEP:
                break
    return c, best


def gn_ratio(sup_u: float, l2_u: float, l2_dlu: float, l: int) -> float:
    """``sup / (||D^l u||**(1/(2l)) ||u||**(1 - 1/(2l)))``; 0 for ``u = 0``."""
    r = 1.0 / (2 * l)
    den = l2_dlu**r * l2_u ** (1.0 - r)
    return sup_u / den if den > 0 else 0.0


def _sine_power_ratio(l: int, L: float, samples: np.ndarray) -> float:
    """Ratio for ``sin(pi x / L)**l``, an entire function, so high-order
    Gauss quadrature gives its L2 norms to rounding accuracy."""
    t, wq = leg.leggauss(200)
    x, wq = 0.5 * L * (t + 1.0), 0.5 * L * wq
    u = np.sin(np.pi * x / L) ** l
    du = _sine_power_derivative(l, L, x)
    sup = float(np.max(np.abs(np.sin(np.pi * samples / L) ** l)))
    return gn_ratio(sup, float(np.sqrt(wq @ u**2)), float(np.sqrt(wq @ du**2)), l)


def _sine_power_derivative(l: int, L: float, x: np.ndarray) -> np.ndarray:
    # sin**l as a polynomial in s = sin; D acts by chain rule with D s = w c,
    # D c = -w s, c = cos; track a polynomial in (s, c) as a dict
    w = np.pi / L
    terms = {(l, 0): 1.0}
    for _ in range(l):
        nxt: dict[tuple[int, int], float] = {}
        for (ps, pc), v in terms.items():
            if ps:
                key = (ps - 1, pc + 1)
                nxt[key] = nxt.get(key, 0.0) + v * ps * w
            if pc:
                key = (ps + 1, pc - 1)
                nxt[key] = nxt.get(key, 0.0) - v * pc * w
        terms = nxt
    s, c = np.sin(w * x), np.cos(w * x)
    return sum(v * s**ps * c**pc for (ps, pc), v in terms.items())


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def _random_coefficients(rng: np.random.Generator, dim: int) -> np.ndarray:
    # decaying scales favour smooth trials without excluding oscillatory ones
    return rng.standard_normal(dim) / (1.0 + np.arange(dim))


def estimate_c_star(
    l: int,
    L: float = 1.0,
    grid: Grid | None = None,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    degree: int = DEFAULT_DEGREE,
) -> ConstantsReport:
    """Largest interpolation ratio over ``(x/L)**l (1 - x/L)**l p(x)`` trials.

    Trial 0 is ``sin(pi x / L)**l``; the others start from random Legendre
    coefficients (deterministic per trial index) and are improved by
    coordinate ascent.  ``grid`` supplies the sup-norm sampling nodes.
    """
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    samples = _sample_nodes(L, grid)
    weight = Polynomial([0.0, 1.0 / L]) ** l * Polynomial([1.0, -1.0 / L]) ** l
    space = _TrialSpace(L, degree, weight, (0, l), samples, degree + 2 * l + 8)

    def score(C: np.ndarray) -> np.ndarray:
        r = 1.0 / (2 * l)
        den = space.l2(l, C) ** r * space.l2(0, C) ** (1.0 - r)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, space.sup(C) / den, 0.0)

    best = _sine_power_ratio(l, L, samples)
    best_trial = {"trial": 0, "kind": f"sin(pi x/L)**{l}", "ratio": best}
    history = [best]
    for t in range(1, trials):
        c0 = _random_coefficients(_trial_rng(seed, t), space.dim)
        c, val = _ascend(score, c0)
        if val > best:
            best = val
            best_trial = {"trial": t, "kind": "weighted polynomial", "ratio": val,
                          "coefficients": c.tolist()}
        history.append(best)
    return ConstantsReport(l, float(L), best, trials=trials, best_trial=best_trial,
                           history=np.array(history))


def derivative_exponent(l: int, i: int, theta: float) -> float:
    """``p`` from ``1/p = i - theta (2l+1) + 1/2``; ``inf`` when the right side is 0.

    Admissible ``theta`` lie in ``[i/(2l+1), min(1, (i + 1/2)/(2l+1))]`` so
    that ``2 <= p <= inf``; other values raise ``ValueError``.
    """
    if not 0 <= i < 2 * l + 1:
        raise ValueError(f"derivative order i must satisfy 0 <= i < {2 * l + 1}, got {i}")
    lo, hi = i / (2 * l + 1), min(1.0, (i + 0.5) / (2 * l + 1))
    if not lo - 1e-12 <= theta <= hi + 1e-12:
        raise ValueError(
            f"theta={theta} inadmissible for l={l}, i={i}: need {lo:g} <= theta <= {hi:g}"
        )
    inv = i - theta * (2 * l + 1) + 0.5
    return np.inf if abs(inv) < 1e-12 else 1.0 / inv


def estimate_k_constants(
    l: int,
    i: int,
    theta: float,
    L: float = 1.0,
    grid: Grid | None = None,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    degree: int = DEFAULT_DEGREE,
) -> ConstantsReport:
    """Largest ``||D^i u||_p / (||D^(2l+1) u||**theta ||u||**(1-theta) + ||u||)``.

    Any admissible pair ``(k1, k2)`` satisfies ``max(k1, k2) >=`` this
    ratio, so the value is reported as a joint lower bound in both fields.
    Trials are unconstrained polynomials of the given degree; ``u = 0`` is
    skipped.  For finite ``p`` the ``L^p`` norm uses 4x-oversampled Gauss
    quadrature, which is accurate but not exact.
    """
    p = derivative_exponent(l, i, theta)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    samples = _sample_nodes(L, grid)
    m = 2 * l + 1
    space = _TrialSpace(L, degree, Polynomial([1.0]), (0, i, m), samples, 4 * (degree + 2))
    d_samples = space._table(Polynomial([1.0]), i, samples)

    def numerator(C: np.ndarray) -> np.ndarray:
        if np.isinf(p):
            return np.max(np.abs(d_samples @ C), axis=0)
        v = np.abs(space.quad[i] @ C) ** p
        return np.einsum("i,i...->...", space.wq, v) ** (1.0 / p)

    def score(C: np.ndarray) -> np.ndarray:
        u = space.l2(0, C)
        den = space.l2(m, C) ** theta * u ** (1.0 - theta) + u
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, numerator(C) / den, 0.0)

    best = 0.0
    best_trial: dict = {}
    history = []
    for t in range(trials):
        c0 = _random_coefficients(_trial_rng(seed, t), space.dim)
        c, val = _ascend(score, c0)
        if val > best:
            best = val
            best_trial = {"trial": t, "kind": "polynomial", "ratio": val, "coefficients": c.tolist()}
        history.append(best)
    return ConstantsReport(l, float(L), None, k1_lower=best, k2_lower=best, trials=trials,
                           best_trial=best_trial, history=np.array(history), i=i,
                           theta=float(theta), p=float(p))
