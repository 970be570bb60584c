"""Banded matrices, pivoted banded LU, and a dense elimination oracle.

Storage follows the LAPACK general-band layout: ``data[ku + i - j, j]``
holds ``A[i, j]`` for ``-kl <= j - i <= ku``.  Factorization goes through
LAPACK ``?gbtrf``/``?gbtrs`` after row equilibration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

SINGULAR_RTOL = 1e-14


class SingularMatrixError(ArithmeticError):
    """Raised when a factorization meets a (numerically) zero pivot."""


class BandedMatrix:
    """Square matrix with ``kl`` sub- and ``ku`` super-diagonals."""

    def __init__(self, data: np.ndarray, kl: int, ku: int):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[0] != kl + ku + 1:
            raise ValueError(
                f"band storage must have kl+ku+1={kl + ku + 1} rows, got {data.shape}"
            )
        n = data.shape[1]
        if n < 1 or kl < 0 or ku < 0 or (n > 1 and (kl >= n or ku >= n)):
            raise ValueError(f"invalid bandwidths kl={kl}, ku={ku} for n={n}")
        self.data = data
        self.kl = int(kl)
        self.ku = int(ku)
        self.n = n
        # slots of the storage array that lie outside the matrix stay zero
        for d in range(1, ku + 1):
            self.data[ku - d, :d] = 0.0
        for d in range(1, kl + 1):
            self.data[ku + d, n - d :] = 0.0

    @classmethod
    def zeros(cls, n: int, kl: int, ku: int) -> BandedMatrix:
        return cls(np.zeros((kl + ku + 1, n)), kl, ku)

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> BandedMatrix:
        return cls(np.full((1, n), float(scale)), 0, 0)

    @classmethod
    def from_dense(cls, A, kl: int | None = None, ku: int | None = None) -> BandedMatrix:
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {A.shape}")
        n = A.shape[0]
        rows, cols = np.nonzero(A)
        if kl is None:
            kl = int(max(0, np.max(rows - cols, initial=0)))
        if ku is None:
            ku = int(max(0, np.max(cols - rows, initial=0)))
        out = cls.zeros(n, kl, ku)
        for d in range(-kl, ku + 1):
            out.set_diagonal(d, np.diagonal(A, d))
        return out

    def diagonal(self, d: int) -> np.ndarray:
        """Entries ``A[i, i + d]``."""
        if d > self.ku or d < -self.kl:
            return np.zeros(self.n - abs(d))
        return self.data[self.ku - d, max(0, d) : self.n + min(0, d)].copy()

    def set_diagonal(self, d: int, values) -> None:
        self.data[self.ku - d, max(0, d) : self.n + min(0, d)] = values

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for d in range(-self.kl, self.ku + 1):
            idx = np.arange(max(0, -d), self.n - max(0, d))
            A[idx, idx + d] = self.diagonal(d)
        return A

    def copy(self) -> BandedMatrix:
        return BandedMatrix(self.data.copy(), self.kl, self.ku)

    def widened(self, kl: int, ku: int) -> BandedMatrix:
        """Same matrix stored with at least the requested bandwidths."""
        kl, ku = max(kl, self.kl), max(ku, self.ku)
        out = BandedMatrix.zeros(self.n, kl, ku)
        out.data[ku - self.ku : ku + self.kl + 1] = self.data
        return out

    def row(self, i: int) -> np.ndarray:
        r = np.zeros(self.n)
        lo, hi = max(0, i - self.kl), min(self.n, i + self.ku + 1)
        j = np.arange(lo, hi)
        r[lo:hi] = self.data[self.ku + i - j, j]
        return r

    def set_row(self, i: int, start: int, coeffs) -> None:
        """Replace row ``i`` by ``coeffs`` placed at columns ``start...``."""
        coeffs = np.asarray(coeffs, dtype=float)
        stop = start + coeffs.size
        if start < i - self.kl or stop - 1 > i + self.ku or start < 0 or stop > self.n:
            raise ValueError(f"row {i} entries at columns {start}..{stop - 1} fall outside the band")
        lo, hi = max(0, i - self.kl), min(self.n, i + self.ku + 1)
        j = np.arange(lo, hi)
        self.data[self.ku + i - j, j] = 0.0
        j = np.arange(start, stop)
        self.data[self.ku + i - j, j] = coeffs

    def scale_rows(self, s) -> BandedMatrix:
        """Return ``diag(s) @ self``."""
        s = np.asarray(s, dtype=float)
        out = self.copy()
        for d in range(-self.kl, self.ku + 1):
            out.set_diagonal(d, self.diagonal(d) * s[max(0, -d) : self.n - max(0, d)])
        return out

    def __add__(self, other: BandedMatrix) -> BandedMatrix:
        if not isinstance(other, BandedMatrix):
            return NotImplemented
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")
        kl, ku = max(self.kl, other.kl), max(self.ku, other.ku)
        out = self.widened(kl, ku)
        out.data += other.widened(kl, ku).data
        return out

    def __mul__(self, c: float) -> BandedMatrix:
        return BandedMatrix(self.data * float(c), self.kl, self.ku)

    __rmul__ = __mul__

    def __neg__(self) -> BandedMatrix:
        return self * -1.0

    def __sub__(self, other: BandedMatrix) -> BandedMatrix:
        return self + (-other)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise ValueError(f"vector length {x.shape[0]} does not match n={self.n}")
        y = np.zeros(self.n)
        for d in range(-self.kl, self.ku + 1):
            rows = slice(max(0, -d), self.n - max(0, d))
            cols = slice(max(0, d), self.n + min(0, d))
            y[rows] += self.diagonal(d) * x[cols]
        return y

    def __matmul__(self, x) -> np.ndarray:
        return self.matvec(x)

    def abs_row_sums(self) -> np.ndarray:
        s = np.zeros(self.n)
        for d in range(-self.kl, self.ku + 1):
            s[max(0, -d) : self.n - max(0, d)] += np.abs(self.diagonal(d))
        return s

    def norm_inf(self) -> float:
        return float(np.max(self.abs_row_sums()))

    def __repr__(self) -> str:
        return f"BandedMatrix(n={self.n}, kl={self.kl}, ku={self.ku})"


@dataclass(frozen=True)
class BandedLU:
    """Row-equilibrated pivoted LU factors as produced by ``?gbtrf``.

    ``lu`` holds L and U in LAPACK band layout with ``kl + ku`` super-diagonals
    reserved for U (pivoting fill).  ``row_scale`` is the equilibration applied
    to the rows of A before factoring.
    """

    n: int
    kl: int
    ku: int
    lu: np.ndarray
    piv: np.ndarray
    row_scale: np.ndarray
    min_pivot: float


def lu_factor(A: BandedMatrix) -> BandedLU:
    """Factor ``A`` with partial pivoting.

    Raises :class:`SingularMatrixError` when a pivot of the equilibrated
    matrix falls below ``1e-14 * ||R A||_inf``.
    """
    rowsum = A.abs_row_sums()
    if not np.all(rowsum > 0.0):
        i = int(np.argmin(rowsum))
        raise SingularMatrixError(f"matrix row {i} is identically zero")
    scale = 1.0 / rowsum
    scaled = A.scale_rows(scale)
    kl, ku = A.kl, A.ku
    ab = np.zeros((2 * kl + ku + 1, A.n))
    ab[kl:] = scaled.data
    lu, piv, info = lapack.dgbtrf(ab, kl, ku)
    if info < 0:
        raise ValueError(f"dgbtrf rejected argument {-info}")
    udiag = np.abs(lu[kl + ku])
    norm = float(np.max(scaled.abs_row_sums()))
    min_pivot = float(np.min(udiag))
    if info > 0 or min_pivot <= SINGULAR_RTOL * norm:
        i = int(np.argmin(udiag))
        raise SingularMatrixError(
            f"matrix is singular to working precision (pivot {i}: {udiag[i]:.3e}, "
            f"||RA||_inf = {norm:.3e})"
        )
    return BandedLU(A.n, kl, ku, lu, piv, scale, min_pivot / norm)


def lu_solve(F: BandedLU, rhs) -> np.ndarray:
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != F.n:
        raise ValueError(f"right-hand side has length {b.shape[0]}, expected {F.n}")
    vector = b.ndim == 1
    b = (b.reshape(F.n, -1) * F.row_scale[:, None]).copy()
    x, info = lapack.dgbtrs(F.lu, F.kl, F.ku, b, F.piv)
    if info != 0:
        raise ValueError(f"dgbtrs failed with info={info}")
    return x[:, 0] if vector else x


def dense_solve_oracle(A, rhs) -> np.ndarray:
    """Gaussian elimination with partial pivoting on a dense copy.

    Test oracle only; quadratic memory and cubic time.
    """
    M = np.array(A.to_dense() if isinstance(A, BandedMatrix) else A, dtype=float)
    b = np.array(rhs, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n) or b.shape[0] != n:
        raise ValueError(f"shape mismatch: A {M.shape}, rhs {b.shape}")
    norm = float(np.max(np.abs(M).sum(axis=1))) if n else 0.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(M[k:, k])))
        if abs(M[p, k]) <= SINGULAR_RTOL * norm or norm == 0.0:
            raise SingularMatrixError(f"zero pivot in column {k}")
        if p != k:
            M[[k, p]] = M[[p, k]]
            b[[k, p]] = b[[p, k]]
        m = M[k + 1 :, k] / M[k, k]
        M[k + 1 :, k:] -= np.outer(m, M[k, k:])
        b[k + 1 :] -= m * b[k]
    x = np.zeros_like(b)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - M[k, k + 1 :] @ x[k + 1 :]) / M[k, k]
    return x
