import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dispersive_bvp.grid import (
    Grid,
    GridFunction,
    build_grid,
    l2_inner,
    l2_norm,
    sup_norm,
    weighted_f2,
)


def test_nodes_and_spacing():
    g = build_grid(2.0, 8)
    assert g.dx == 0.25
    assert g.size == 9
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 2.0
    assert np.allclose(np.diff(g.nodes), 0.25)


@pytest.mark.parametrize("L,N", [(0.0, 8), (-1.0, 8), (float("inf"), 8), (1.0, 3), (1.0, 4.5)])
def test_invalid_grids_rejected(L, N):
    with pytest.raises(ValueError):
        Grid(L, N)


def test_nodes_are_read_only():
    g = build_grid(1.0, 4)
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0


def test_trapezoid_exact_for_linear_integrand():
    g = build_grid(3.0, 7)
    u = GridFunction(g, g.nodes)
    one = GridFunction(g, np.ones(g.size))
    assert l2_inner(u, one) == pytest.approx(4.5, rel=1e-14)


def test_l2_norm_of_sine_converges_at_second_order():
    errs = []
    for N in (16, 32, 64):
        g = build_grid(1.0, N)
        u = GridFunction.from_callable(g, lambda x: np.sin(np.pi * x) + x)
        # exact integral of (sin(pi x) + x)**2 on (0, 1)
        exact = 0.5 + 2.0 / np.pi + 1.0 / 3.0
        errs.append(abs(l2_norm(u) ** 2 - exact))
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_weighted_f2_constant_forcing():
    g = build_grid(1.0, 10)
    f = GridFunction(g, np.full(g.size, 2.0))
    # integral of (1 + x) * 4 over (0, 1); integrand is linear
    assert weighted_f2(f) == pytest.approx(6.0, rel=1e-14)


def test_grid_mismatch_rejected():
    a = GridFunction.zeros(build_grid(1.0, 8))
    b = GridFunction.zeros(build_grid(1.0, 16))
    with pytest.raises(ValueError, match="grid mismatch"):
        l2_inner(a, b)


def test_grid_function_shape_checked():
    with pytest.raises(ValueError):
        GridFunction(build_grid(1.0, 8), np.zeros(8))


def test_grid_function_copies_input():
    g = build_grid(1.0, 4)
    v = np.zeros(5)
    u = GridFunction(g, v)
    v[0] = 7.0
    assert u.values[0] == 0.0


@given(st.lists(st.floats(-1e3, 1e3), min_size=9, max_size=9), st.floats(-10, 10).filter(lambda c: c == 0 or abs(c) > 1e-100))
def test_norms_are_homogeneous(vals, c):
    g = build_grid(1.0, 8)
    u = GridFunction(g, vals)
    cu = GridFunction(g, c * np.asarray(vals))
    assert l2_norm(cu) == pytest.approx(abs(c) * l2_norm(u), rel=1e-12, abs=1e-300)
    assert sup_norm(cu) == pytest.approx(abs(c) * sup_norm(u), rel=1e-12, abs=1e-300)
