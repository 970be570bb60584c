import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dispersive_bvp.banded import (
    BandedMatrix,
    SingularMatrixError,
    dense_solve_oracle,
    lu_factor,
    lu_solve,
)


def random_banded(rng, n, kl, ku, dominance=0.0):
    A = np.zeros((n, n))
    for d in range(-kl, ku + 1):
        idx = np.arange(max(0, -d), n - max(0, d))
        A[idx, idx + d] = rng.standard_normal(idx.size)
    A[np.diag_indices(n)] += dominance
    return A


def test_dense_round_trip(rng):
    A = random_banded(rng, 12, 2, 3)
    B = BandedMatrix.from_dense(A)
    assert (B.kl, B.ku) == (2, 3)
    assert np.array_equal(B.to_dense(), A)


def test_storage_layout_matches_lapack_convention():
    A = np.array([[1.0, 2.0, 0.0], [3.0, 4.0, 5.0], [0.0, 6.0, 7.0]])
    B = BandedMatrix.from_dense(A, 1, 1)
    # data[ku + i - j, j] = A[i, j]
    assert B.data[1 + 1 - 0, 0] == 3.0
    assert B.data[1 + 0 - 1, 1] == 2.0
    assert B.data[1, 2] == 7.0


def test_matvec_matches_dense(rng):
    A = random_banded(rng, 30, 3, 5)
    x = rng.standard_normal(30)
    assert np.allclose(BandedMatrix.from_dense(A) @ x, A @ x, rtol=1e-14, atol=1e-13)


def test_add_with_different_bandwidths(rng):
    A, C = random_banded(rng, 10, 1, 0), random_banded(rng, 10, 0, 3)
    S = BandedMatrix.from_dense(A) + BandedMatrix.from_dense(C)
    assert np.array_equal(S.to_dense(), A + C)
    assert np.array_equal((2.0 * BandedMatrix.from_dense(A)).to_dense(), 2.0 * A)


def test_set_row_outside_band_rejected():
    B = BandedMatrix.zeros(6, 1, 1)
    with pytest.raises(ValueError, match="outside the band"):
        B.set_row(2, 0, [1.0, 1.0, 1.0, 1.0])


def test_set_row_replaces_whole_row(rng):
    A = random_banded(rng, 8, 2, 2)
    B = BandedMatrix.from_dense(A)
    B.set_row(4, 3, [9.0, 8.0])
    row = np.zeros(8)
    row[3:5] = [9.0, 8.0]
    assert np.array_equal(B.to_dense()[4], row)


def test_identity_solve_is_exact():
    F = lu_factor(BandedMatrix.identity(5, 2.0))
    assert np.array_equal(lu_solve(F, np.arange(5.0)), np.arange(5.0) / 2.0)


def test_solve_needs_pivoting():
    # a zero leading diagonal entry forces a row interchange
    A = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    b = np.array([1.0, 2.0, 3.0])
    x = lu_solve(lu_factor(BandedMatrix.from_dense(A, 1, 1)), b)
    assert np.allclose(A @ x, b, atol=1e-15)


def test_singular_matrix_raises():
    A = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(SingularMatrixError):
        lu_factor(BandedMatrix.from_dense(A, 1, 1))
    with pytest.raises(SingularMatrixError):
        dense_solve_oracle(A, np.ones(3))


def test_zero_row_raises():
    with pytest.raises(SingularMatrixError, match="row 1"):
        lu_factor(BandedMatrix.from_dense(np.diag([1.0, 0.0, 1.0])))


def test_badly_scaled_rows_are_not_flagged():
    # rows differing by 1e12 in scale are fine after equilibration
    A = np.diag([1e-6, 1e6, 1.0]) + np.diag([1e-7, 1e5], 1)
    b = np.array([1.0, 2.0, 3.0])
    x = lu_solve(lu_factor(BandedMatrix.from_dense(A)), b)
    assert np.allclose(A @ x, b, rtol=1e-12)


def test_rhs_length_checked():
    F = lu_factor(BandedMatrix.identity(4))
    with pytest.raises(ValueError):
        lu_solve(F, np.ones(3))


def test_dense_oracle_against_numpy(rng):
    A = random_banded(rng, 25, 4, 4, dominance=0.5)
    b = rng.standard_normal(25)
    assert np.allclose(dense_solve_oracle(A, b), np.linalg.solve(A, b), rtol=1e-10)


@given(
    n=st.integers(2, 60),
    kl=st.integers(0, 6),
    ku=st.integers(0, 6),
    seed=st.integers(0, 2**31 - 1),
)
def test_banded_lu_matches_oracle(n, kl, ku, seed):
    kl, ku = min(kl, n - 1), min(ku, n - 1)
    rng = np.random.default_rng(seed)
    A = random_banded(rng, n, kl, ku)
    b = rng.standard_normal(n)
    if np.linalg.cond(A) > 1e8:
        return
    x = lu_solve(lu_factor(BandedMatrix.from_dense(A, kl, ku)), b)
    ref = dense_solve_oracle(A, b)
    assert np.max(np.abs(x - ref)) <= 1e-8 * max(1.0, np.max(np.abs(ref)))


def test_multiple_right_hand_sides(rng):
    A = random_banded(rng, 15, 2, 1, dominance=3.0)
    B = rng.standard_normal((15, 3))
    X = lu_solve(lu_factor(BandedMatrix.from_dense(A)), B)
    assert np.allclose(A @ X, B, atol=1e-12)
