"""Closed set of forcing functions and the manufactured polynomial solution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

KINDS = ("zero", "gauss", "sine", "poly", "manufactured")


@dataclass(frozen=True)
class ForcingDescriptor:
    """A forcing ``f(x)`` named by kind and numeric parameters.

    ``zero``
        f = 0.
    ``gauss amp x0 sigma``
        ``amp * exp(-(x - x0)**2 / (2 sigma**2))``.
    ``sine mode amp``
        ``amp * sin(mode * pi * x / L)``.
    ``poly c0 c1 ...``
        ``sum(c_i * x**i)``.
    ``manufactured [l]``
        The full operator (including the convective term) applied to
        ``x**l * (L - x)**(l + 1)``; needs the problem data to evaluate.
    """

    kind: str
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown forcing kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        n = len(self.params)
        expected = {"zero": (0,), "gauss": (3,), "sine": (2,), "manufactured": (0, 1)}
        if self.kind in expected and n not in expected[self.kind]:
            raise ValueError(f"forcing {self.kind!r} takes {expected[self.kind]} parameters, got {n}")
        if self.kind == "poly" and n == 0:
            raise ValueError("forcing 'poly' needs at least one coefficient")
        if self.kind == "gauss" and self.params[2] <= 0:
            raise ValueError(f"gauss width must be positive, got {self.params[2]}")
        if self.kind == "manufactured" and n == 1 and (
            self.params[0] < 1 or self.params[0] != int(self.params[0])
        ):
            raise ValueError(f"manufactured l must be a positive integer, got {self.params[0]}")

    @classmethod
    def parse(cls, text: str) -> ForcingDescriptor:
        parts = text.split()
        if not parts:
            raise ValueError("empty forcing descriptor")
        try:
            params = tuple(float(p) for p in parts[1:])
        except ValueError as exc:
            raise ValueError(f"malformed forcing parameters in {text!r}") from exc
        return cls(parts[0].lower(), params)

    def to_text(self) -> str:
        return " ".join([self.kind, *(repr(p) for p in self.params)])

    def evaluate(self, x, spec=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "gauss":
            amp, x0, sigma = p
            return amp * np.exp(-((x - x0) ** 2) / (2.0 * sigma**2))
        if self.kind == "sine":
            if spec is None:
                raise ValueError("sine forcing needs the interval length")
            mode, amp = p
            return amp * np.sin(mode * np.pi * x / spec.L)
        if self.kind == "poly":
            return Polynomial(p)(x)
        if spec is None:
            raise ValueError("manufactured forcing needs the problem data")
        if p and int(p[0]) != spec.l:
            raise ValueError(f"manufactured forcing built for l={int(p[0])} but problem has l={spec.l}")
        return manufactured_forcing(spec.L, spec.l, spec.k, spec.a, x)


def manufactured_solution(l: int, L: float) -> Polynomial:
    """``x**l * (L - x)**(l + 1)``, which meets the boundary conditions exactly."""
    return Polynomial([0.0, 1.0]) ** l * Polynomial([L, -1.0]) ** (l + 1)


def manufactured_forcing(L: float, l: int, k: int, a: float, x, nonlinear: bool = True) -> np.ndarray:
    """Exact operator applied to the manufactured solution, sampled at ``x``.

    The polynomial is differentiated exactly; the convective term is formed
    pointwise so that high powers are never expanded.
    """
    x = np.asarray(x, dtype=float)
    u = manufactured_solution(l, L)
    out = a * u(x)
    for j in range(1, l + 1):
        out = out + (-1) ** (j + 1) * u.deriv(2 * j + 1)(x)
    if nonlinear:
        out = out + u(x) ** k * u.deriv(1)(x)
    return out
