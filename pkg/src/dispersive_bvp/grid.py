"""Uniform grids on [0, L] and the discrete L2 functionals used throughout.

All pairings use the composite trapezoid rule, which is second order and
exact for piecewise-linear integrands.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

# five nodes is the narrowest grid any stencil in the package can use
MIN_INTERVALS = 4


@dataclass(frozen=True)
class Grid:
    """Uniform mesh with ``N`` intervals on ``[0, L]``."""

    L: float
    N: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"grid length must be positive, got L={self.L}")
        if int(self.N) != self.N or self.N < MIN_INTERVALS:
            raise ValueError(
                f"grid needs an integer N >= {MIN_INTERVALS} intervals, got N={self.N}"
            )
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", int(self.N))

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def size(self) -> int:
        return self.N + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(0.0, self.L, self.N + 1)
        x.flags.writeable = False
        return x

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.N + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        w.flags.writeable = False
        return w

    def require(self, min_intervals: int, what: str = "stencil") -> None:
        """Raise if the grid has fewer than ``min_intervals`` intervals."""
        if self.N < min_intervals:
            raise ValueError(
                f"grid too small for {what}: need N >= {min_intervals}, got N={self.N}"
            )


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values of a function on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError(
                f"grid function needs {self.grid.size} values, got shape {v.shape}"
            )
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: Grid) -> GridFunction:
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> GridFunction:
        return cls(grid, np.broadcast_to(fn(grid.nodes), (grid.size,)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def build_grid(L: float, N: int) -> Grid:
    return Grid(L, N)


def l2_inner(u: GridFunction, v: GridFunction) -> float:
    """Trapezoid approximation of the L2 pairing of ``u`` and ``v``."""
    if u.grid != v.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {v.grid}")
    return float(np.dot(u.grid.trapezoid_weights, u.values * v.values))


def l2_norm(u: GridFunction) -> float:
    return float(np.sqrt(max(l2_inner(u, u), 0.0)))


def weighted_f2(f: GridFunction) -> float:
    """Trapezoid approximation of the integral of ``(1 + x) f(x)**2``."""
    g = f.grid
    return float(np.dot(g.trapezoid_weights, (1.0 + g.nodes) * f.values**2))


def sup_norm(u: GridFunction) -> float:
    return float(np.max(np.abs(u.values)))
