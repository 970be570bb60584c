import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import dispersive_bvp.nonlinear as nl
from dispersive_bvp.banded import SingularMatrixError, lu_factor, lu_solve
from dispersive_bvp.forcing import ForcingDescriptor, manufactured_solution
from dispersive_bvp.grid import GridFunction, build_grid, l2_norm
from dispersive_bvp.nonlinear import (
    SingularJacobianError,
    assemble_jacobian,
    continuation_solve,
    nonlinear_residual,
    picard_step,
    solve_newton,
    solve_picard,
)
from dispersive_bvp.operator import (
    ProblemSpec,
    assemble_operator,
    collocation_mask,
    energy_identity_residual,
    forcing_values,
)

GAUSS = ForcingDescriptor("gauss", (0.1, 0.5, 0.1))


def gauss_spec(amp=0.1, l=1, k=2, a=1.0):
    return ProblemSpec(1.0, l, k, a, ForcingDescriptor("gauss", (amp, 0.5, 0.1)))


def test_residual_at_zero_is_minus_forcing():
    g = build_grid(1.0, 64)
    spec = gauss_spec()
    r = nonlinear_residual(GridFunction.zeros(g), spec, g).values
    mask = collocation_mask(1, g)
    assert np.array_equal(r[mask], -forcing_values(spec, g)[mask])
    assert np.all(r[~mask] == 0.0)
    assert np.all(nonlinear_residual(GridFunction.zeros(g), spec, g, lam=0.0).values == 0.0)


def test_residual_rejects_bad_lambda():
    g = build_grid(1.0, 32)
    with pytest.raises(ValueError):
        nonlinear_residual(GridFunction.zeros(g), gauss_spec(), g, lam=1.5)


@pytest.mark.parametrize("l,k", [(1, 2), (2, 3)])
def test_residual_of_manufactured_solution_is_second_order(l, k):
    res = []
    for N in (32, 64, 128):
        g = build_grid(1.0, N)
        spec = ProblemSpec(1.0, l, k, 1.0, ForcingDescriptor("manufactured"))
        u = GridFunction(g, manufactured_solution(l, 1.0)(g.nodes))
        r = nonlinear_residual(u, spec, g).values
        res.append(np.max(np.abs(r[collocation_mask(l, g)])))
    assert 3.5 < res[0] / res[1] < 4.5 and 3.5 < res[1] / res[2] < 4.5


def test_picard_step_at_zero_is_linear_solve():
    g = build_grid(1.0, 64)
    spec = gauss_spec()
    A = assemble_operator(spec, g)
    rhs = forcing_values(spec, g)
    rhs[~collocation_mask(1, g)] = 0.0
    ref = np.linalg.solve(A.to_dense(), rhs)
    assert np.allclose(picard_step(GridFunction.zeros(g), spec, g).values, ref, atol=1e-15)


def test_picard_zero_forcing():
    g = build_grid(1.0, 64)
    rep = solve_picard(ProblemSpec(1.0, 1, 1, 1.0), g)
    assert rep.converged and rep.iterations == 1
    assert np.all(rep.solution.values == 0.0)


def test_picard_gaussian_converges_and_is_a_fixed_point():
    g = build_grid(1.0, 128)
    spec = gauss_spec()
    rep = solve_picard(spec, g)
    assert rep.converged and rep.final_residual <= 1e-10
    w = picard_step(rep.solution, spec, g)
    assert np.max(np.abs(w.values - rep.solution.values)) <= 1e-10


def test_picard_contracts_for_small_forcing():
    g = build_grid(1.0, 128)
    rep = solve_picard(gauss_spec(amp=30.0), g)
    assert rep.converged
    assert rep.contraction_ratios.size >= 2
    assert np.all(rep.contraction_ratios[:-1] < 1.0)
    small = solve_picard(gauss_spec(amp=0.3), g)
    assert small.converged and np.all(small.contraction_ratios < 1.0)


def test_picard_divergence_is_reported_not_raised():
    g = build_grid(1.0, 128)
    converged = []
    for amp in (1.0, 100.0, 1000.0):
        rep = solve_picard(gauss_spec(amp=amp), g, max_iter=100)
        converged.append(rep.converged)
        if not rep.converged:
            assert rep.message
    assert converged[0] and not converged[-1]


def test_picard_rejects_bad_arguments():
    g = build_grid(1.0, 32)
    with pytest.raises(ValueError):
        solve_picard(gauss_spec(), g, tol=0.0)
    with pytest.raises(ValueError):
        solve_picard(gauss_spec(), g, relaxation=1.5)


@pytest.mark.parametrize("k", [1, 2, 4])
def test_jacobian_at_zero_is_linear_operator(k):
    g = build_grid(1.0, 40)
    spec = ProblemSpec(1.0, 1, k, 1.0)
    J = assemble_jacobian(GridFunction.zeros(g), spec, g, lam=0.7)
    assert np.array_equal(J.to_dense(), assemble_operator(spec, g).to_dense())


def test_jacobian_constraint_rows_unchanged(rng):
    g = build_grid(1.0, 40)
    spec = ProblemSpec(1.0, 2, 3, 1.0)
    u = GridFunction(g, rng.standard_normal(g.size))
    J = assemble_jacobian(u, spec, g).to_dense()
    A = assemble_operator(spec, g).to_dense()
    rows = ~collocation_mask(2, g)
    assert np.array_equal(J[rows], A[rows])


@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_jacobian_matches_columnwise_difference(k, seed):
    # central differences are exact to rounding for polynomial nonlinearities
    # of degree <= 2 in each coordinate direction; compare a few columns
    rng = np.random.default_rng(seed)
    g = build_grid(1.0, 24)
    spec = ProblemSpec(1.0, 1, k, 1.0, GAUSS)
    u = 0.5 * rng.standard_normal(g.size)
    J = assemble_jacobian(u, spec, g, 0.6).to_dense()
    eps = 1e-6
    for j in rng.choice(g.size, 4, replace=False):
        e = np.zeros(g.size)
        e[j] = eps
        col = (nonlinear_residual(u + e, spec, g, 0.6).values
               - nonlinear_residual(u - e, spec, g, 0.6).values) / (2 * eps)
        scale = np.max(np.abs(J[:, j]))
        assert np.allclose(col, J[:, j], atol=1e-6 * scale, rtol=1e-6)


def test_newton_zero_forcing():
    g = build_grid(1.0, 64)
    rep = solve_newton(ProblemSpec(1.0, 1, 1, 1.0), g)
    assert rep.converged and rep.iterations <= 1
    assert np.all(rep.solution.values == 0.0)


def test_newton_agrees_with_picard_and_converges_quadratically():
    g = build_grid(1.0, 128)
    spec = ProblemSpec(1.0, 1, 2, 1.0, ForcingDescriptor("gauss", (30.0, 0.5, 0.1)))
    p = solve_picard(spec, g)
    n = solve_newton(spec, g)
    assert p.converged and n.converged
    assert np.max(np.abs(p.solution.values - n.solution.values)) <= 1e-8
    r = n.residual_history
    big = r[r > 1e-13]
    ratios = big[1:] / big[:-1] ** 2
    assert np.all(ratios < 1e3), r


def test_newton_warm_start_saves_iterations():
    g = build_grid(1.0, 128)
    spec = gauss_spec(amp=30.0)
    cold = solve_newton(spec, g)
    u0 = picard_step(GridFunction.zeros(g), spec, g)
    warm = solve_newton(spec, g, u0=u0)
    assert warm.converged and warm.iterations < cold.iterations


def test_newton_singular_jacobian_suggests_continuation(monkeypatch):
    g = build_grid(1.0, 32)

    def boom(_):
        raise SingularMatrixError("forced")

    monkeypatch.setattr(nl, "lu_factor", boom)
    with pytest.raises(SingularJacobianError) as info:
        solve_newton(gauss_spec(), g)
    assert info.value.suggestion == "continuation"
    assert "continuation" in str(info.value)


def test_continuation_single_step_matches_newton_from_linear_start():
    g = build_grid(1.0, 128)
    spec = gauss_spec(amp=30.0)
    c = continuation_solve(spec, g, steps=1)
    n = solve_newton(spec, g, u0=picard_step(GridFunction.zeros(g), spec, g))
    assert c.converged and list(c.lambda_path) == [1.0]
    assert np.max(np.abs(c.solution.values - n.solution.values)) <= 1e-10


def test_continuation_path_bounded_by_forcing():
    g = build_grid(1.0, 128)
    spec = gauss_spec(amp=100.0, k=3)
    rep = continuation_solve(spec, g, steps=10)
    assert rep.converged
    assert np.all(np.diff(rep.lambda_path) > 0) and rep.lambda_path[-1] == 1.0
    f = l2_norm(GridFunction(g, forcing_values(spec, g)))
    assert np.all(rep.path_l2_norms <= 1.05 * rep.lambda_path * f / spec.a)


def test_continuation_failure_keeps_progress():
    g = build_grid(1.0, 128)
    rep = continuation_solve(gauss_spec(amp=3000.0), g, steps=4, max_iter=3)
    assert not rep.converged
    assert rep.final_lambda < 1.0
    assert "lambda" in rep.message


def test_continuation_rejects_bad_steps():
    with pytest.raises(ValueError):
        continuation_solve(gauss_spec(), build_grid(1.0, 32), steps=0)


def test_nonlinear_energy_identity_second_order():
    res = []
    for N in (64, 128, 256):
        g = build_grid(1.0, N)
        spec = ProblemSpec(1.0, 1, 2, 1.0, ForcingDescriptor("sine", (1, 1.0)))
        u = solve_newton(spec, g).solution
        F = GridFunction(g, forcing_values(spec, g))
        res.append(energy_identity_residual(u, spec, g, F))
    assert 3.0 < res[0] / res[1] < 5.0 and 3.0 < res[1] / res[2] < 5.0


def test_defect_equals_inverse_operator_applied_to_residual():
    g = build_grid(1.0, 64)
    spec = gauss_spec(amp=5.0)
    u = 0.01 * np.sin(np.pi * g.nodes)
    defect = u - picard_step(u, spec, g).values
    r = nonlinear_residual(u, spec, g).values
    A = assemble_operator(spec, g)
    assert np.allclose(lu_solve(lu_factor(A), r), defect, atol=1e-13)


def test_extended_precision_residual_matches_raw_residual():
    from dispersive_bvp.nonlinear import _Workspace

    g = build_grid(1.0, 64)
    spec = ProblemSpec(1.0, 2, 3, 1.0, ForcingDescriptor("gauss", (5.0, 0.5, 0.1)))
    u = np.sin(np.pi * g.nodes) ** 3
    ws = _Workspace(spec, g, 0.7)
    raw = nonlinear_residual(u, spec, g, 0.7).values
    r = ws.residual(u)
    # the double-precision residual carries rounding of size eps |A| |u|
    scale = np.max(ws.A.abs_row_sums()) * np.max(np.abs(u))
    assert np.max(np.abs(r - raw)) <= 1e-14 * scale
    G, r2 = ws.defect(u)
    assert np.array_equal(r, r2)
    assert np.max(np.abs(G - (u - picard_step(u, spec, g, 0.7).values))) < 1e-9


def test_high_order_large_forcing_reaches_tolerance():
    # order-7 operator with forcing ~1e6: a double-precision residual stalls
    # near 3e-9, above the default tolerance
    g = build_grid(1.0, 256)
    f = 1.2e6 * np.exp(-((g.nodes - 0.4) ** 2) / 0.02)
    spec = ProblemSpec(1.0, 3, 1, 1.0, f)
    rep = solve_newton(spec, g)
    assert rep.converged and rep.final_residual <= 1e-10
    assert np.max(np.abs(rep.solution.values)) > 0.3
