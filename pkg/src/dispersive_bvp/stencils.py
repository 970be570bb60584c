"""Finite-difference weights, banded derivative matrices and boundary rows.

Every operator here is second-order accurate.  Interior rows are centred;
rows near an end use the same number of points shifted inward, never a
lower-order formula.  Boundary-condition rows use the narrowest one-sided
second-order formula (``m + 2`` points for a derivative of order ``m >= 1``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Literal, Sequence

import numpy as np

from .banded import BandedMatrix
from .grid import Grid, GridFunction

MOMENT_TOL = 1e-10


@dataclass(frozen=True)
class Stencil:
    """Weights of a derivative of order ``m`` on integer node offsets.

    The weights are per unit spacing; divide by ``dx**m`` at the use site.
    """

    m: int
    offsets: tuple[int, ...]
    weights: np.ndarray

    @property
    def width(self) -> int:
        return len(self.offsets)

    def moment_residual(self) -> float:
        """Largest normalized violation of the moment conditions."""
        o = np.asarray(self.offsets, dtype=float)
        worst = 0.0
        for p in range(self.width):
            terms = self.weights * o**p / factorial(p)
            target = 1.0 if p == self.m else 0.0
            scale = max(1.0, float(np.sum(np.abs(terms))))
            worst = max(worst, abs(float(np.sum(terms)) - target) / scale)
        return worst


def _fornberg(m: int, x: Sequence[float], z: float = 0.0) -> np.ndarray:
    # Fornberg (1988) recurrence; c[j, k] is the weight of x[j] for order k
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


@lru_cache(maxsize=None)
def _cached_weights(m: int, offsets: tuple[int, ...]) -> Stencil:
    w = _fornberg(m, [float(o) for o in offsets])
    w.flags.writeable = False
    st = Stencil(m, offsets, w)
    err = st.moment_residual()
    if err > MOMENT_TOL:
        raise ArithmeticError(
            f"weights for order {m} on {offsets} violate moment conditions by {err:.2e}"
        )
    return st


def fd_weights(m: int, offsets: Sequence[int]) -> Stencil:
    """Interpolatory weights for ``D^m`` at offset 0 on the given offsets."""
    offs = tuple(sorted(int(o) for o in offsets))
    if m < 0:
        raise ValueError(f"derivative order must be >= 0, got {m}")
    if len(set(offs)) != len(offs):
        raise ValueError(f"offsets must be distinct, got {list(offsets)}")
    if len(offs) < m + 1:
        raise ValueError(
            f"order {m} needs at least {m + 1} offsets, got {len(offs)}"
        )
    return _cached_weights(m, offs)


def stencil_width(m: int) -> int:
    """Points used by the second-order formula for ``D^m`` away from the ends."""
    if m == 0:
        return 1
    return m + 3 - (m % 2)


def row_stencil(m: int, i: int, N: int) -> tuple[int, Stencil]:
    """First column and stencil for ``D^m`` at node ``i`` of an ``N``-interval grid.

    Centred when it fits, otherwise shifted so that it stays on ``0..N``.
    """
    w = stencil_width(m)
    if w > N + 1:
        raise ValueError(f"grid too small for order-{m} stencil: need N >= {w - 1}, got N={N}")
    start = min(max(i - w // 2, 0), N + 1 - w)
    return start, fd_weights(m, range(start - i, start - i + w))


@lru_cache(maxsize=64)
def _derivative_matrix(m: int, grid: Grid) -> BandedMatrix:
    N = grid.N
    rows = [row_stencil(m, i, N) for i in range(N + 1)]
    kl = max(i - start for i, (start, _) in enumerate(rows))
    ku = max(start + st.width - 1 - i for i, (start, st) in enumerate(rows))
    D = BandedMatrix.zeros(N + 1, kl, ku)
    scale = grid.dx**-m
    for i, (start, st) in enumerate(rows):
        D.set_row(i, start, st.weights * scale)
    return D


def derivative_matrix(m: int, grid: Grid) -> BandedMatrix:
    """Banded second-order approximation of ``D^m`` on every node."""
    grid.require(stencil_width(m) - 1, f"order-{m} derivative stencil")
    if m == 0:
        return BandedMatrix.identity(grid.size)
    return _derivative_matrix(m, grid).copy()


def one_sided_stencil(m: int, end: Literal["left", "right"]) -> Stencil:
    """Narrowest second-order one-sided formula for ``D^m`` at an end node."""
    if m == 0:
        return fd_weights(0, [0])
    w = m + 2
    if end == "left":
        return fd_weights(m, range(0, w))
    if end == "right":
        return fd_weights(m, range(-w + 1, 1))
    raise ValueError(f"end must be 'left' or 'right', got {end!r}")


@dataclass(frozen=True)
class BoundaryRow:
    """One constraint ``sum(coeffs * u[start:start+len]) = rhs``."""

    row: int
    order: int
    end: str
    start: int
    coeffs: np.ndarray
    rhs: float = 0.0

    def dense(self, n: int) -> np.ndarray:
        r = np.zeros(n)
        r[self.start : self.start + self.coeffs.size] = self.coeffs
        return r

    def apply(self, u) -> float:
        v = np.asarray(u, dtype=float)
        return float(np.dot(self.coeffs, v[self.start : self.start + self.coeffs.size]))


def bc_rows(l: int, grid: Grid) -> list[BoundaryRow]:
    """Constraint rows for vanishing derivatives of order ``< l`` at both ends
    and of order ``l`` at the right end.

    Left conditions occupy rows ``0..l-1`` (row ``i`` carries order ``i``);
    right conditions occupy rows ``N-l..N`` (row ``N-t`` carries order ``t``).
    """
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    N = grid.N
    grid.require(2 * l + 2, f"boundary rows with l={l}")
    rows = []
    for i in range(l):
        st = one_sided_stencil(i, "left")
        rows.append(BoundaryRow(i, i, "left", 0, st.weights * grid.dx**-i))
    for t in range(l + 1):
        st = one_sided_stencil(t, "right")
        rows.append(
            BoundaryRow(N - t, t, "right", N + 1 - st.width, st.weights * grid.dx**-t)
        )
    return rows


def boundary_derivative(u: GridFunction, m: int, end: Literal["left", "right"]) -> float:
    """One-sided second-order value of ``D^m u`` at an end of the grid."""
    st = one_sided_stencil(m, end)
    g = u.grid
    if st.width > g.size:
        raise ValueError(f"grid too small for a one-sided order-{m} stencil (N={g.N})")
    v = u.values
    seg = v[: st.width] if end == "left" else v[g.size - st.width :]
    return float(np.dot(st.weights, seg)) * g.dx**-m


def apply_derivative(m: int, u: GridFunction) -> GridFunction:
    return GridFunction(u.grid, derivative_matrix(m, u.grid) @ u.values)


def sobolev_norm(u: GridFunction, m: int) -> float:
    """Discrete ``H^m`` norm: root of the summed squared L2 norms of ``D^j u``, ``j <= m``.

    High orders on fine grids are limited by roundoff (the stencil entries
    grow like ``dx**-j``), so treat large-``m`` values as diagnostics.
    """
    w = u.grid.trapezoid_weights
    total = float(np.dot(w, u.values**2))
    for j in range(1, m + 1):
        d = derivative_matrix(j, u.grid) @ u.values
        total += float(np.dot(w, d**2))
    return float(np.sqrt(total))
