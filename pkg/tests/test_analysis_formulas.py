import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dispersive_bvp.analysis import (
    ThresholdUndefined,
    beta,
    c1_constant,
    c2_constant,
    c3_constant,
    critical_threshold,
    estimate_report,
    gamma_l,
    lipschitz_constant,
    uniqueness_threshold,
)

pos = st.floats(0.05, 20.0)


def test_c1_reference_value():
    ref = 0.5 ** (1 / 3) * 0.75 * (1 / 3) ** (4 / 3)
    assert c1_constant(1, 1, 1.0) == pytest.approx(ref, rel=1e-14)
    assert c1_constant(1, 1, 1.0) == pytest.approx(0.1376, abs=5e-5)


def test_c1_general_entry():
    # l=2, k=3, C*=1.3 written out term by term
    ref = (6 / 24) ** (3 / 5) * (5 / 8) * (1.3**3 / 5) ** (8 / 5)
    assert c1_constant(2, 3, 1.3) == pytest.approx(ref, rel=1e-14)


def test_c1_regular_case_only():
    with pytest.raises(ValueError):
        c1_constant(1, 4, 1.0)
    with pytest.raises(ValueError):
        c1_constant(2, 0, 1.0)


def test_c3_scaling():
    l, k, a = 2, 1, 3.0
    expo = -(8 * l + (4 * l - 2) * k) / (4 * l - k)
    assert c3_constant(l, k, a, 0.9) == pytest.approx(c1_constant(l, k, 0.9) * a**expo, rel=1e-14)


def test_beta_values():
    assert beta(2.0) == 1.0 and beta(1.0) == 0.5 and beta(10.0) == 1.0


@given(pos)
def test_c2_without_forcing(a):
    assert c2_constant(2, 3, a, 1.0, 0.0) == pytest.approx(
        (2 * a) ** -0.5 / math.sqrt(beta(a)), rel=1e-14
    )


@given(st.integers(1, 3), pos, st.floats(0.1, 3.0), st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_c2_nondecreasing_in_weighted_forcing(l, a, c, w1, w2):
    k = 1 + (l % 2)
    lo, hi = sorted((w1, w2))
    assert c2_constant(l, k, a, c, lo) <= c2_constant(l, k, a, c, hi)


@given(st.integers(1, 3), st.floats(0.1, 3.0), st.floats(0.1, 3.0))
def test_c1_nondecreasing_in_c_star(l, c1, c2):
    lo, hi = sorted((c1, c2))
    for k in range(1, 4 * l):
        assert c1_constant(l, k, lo) <= c1_constant(l, k, hi)


def test_gamma_zero_forcing():
    assert gamma_l(1, 4.0, 1.0, 0.0) == 1.5
    assert gamma_l(2, 1.0, 1.0, 0.0) == 0.5


@pytest.mark.parametrize("l", [1, 2, 3])
def test_gamma_undefined_at_critical_threshold(l):
    f = critical_threshold(l, 1.7, 0.8)
    with pytest.raises(ThresholdUndefined):
        gamma_l(l, 1.7, 0.8, f * (1 + 1e-12))
    assert gamma_l(l, 1.7, 0.8, 0.999 * f) > 0


@given(st.floats(0.05, 3.0), st.floats(0.2, 3.0), st.floats(0.0, 1.0))
def test_gamma_l1_specialisation(a, c, frac):
    f = frac * 0.999 * critical_threshold(1, a, c)
    special = min(a / 2, 1.5 - c**4 * f**4 / (6 * a**4))
    assert gamma_l(1, a, c, f) == pytest.approx(special, rel=1e-12)


@given(st.floats(0.01, 100.0), st.floats(0.01, 100.0))
def test_critical_threshold_l1_identity(a, c):
    assert critical_threshold(1, a, c) == pytest.approx(math.sqrt(3) * a / c, rel=1e-12)


def test_critical_threshold_values():
    assert critical_threshold(1, 1.0, 1.0) == pytest.approx(1.7320508, abs=1e-7)
    assert critical_threshold(2, 1.0, 1.0) == pytest.approx(5**0.25, rel=1e-14)
    assert critical_threshold(2, 3.0, 1.0) == pytest.approx(3 * 5**0.25, rel=1e-14)


def test_uniqueness_regular_l2_direct():
    l, k, a, c = 2, 1, 1.0, 1.0
    b = 0.5
    c3 = (2 / 16) ** (1 / 7) * (7 / 8) * (1 / 3) ** (8 / 7)
    first = (1 / (2 * a * c3)) ** (7 / 8)
    second = a * math.sqrt(a * b) / (2**-0.5 + 2**1.5)
    th = uniqueness_threshold(l, k, a, c)
    assert th.case == "regular_l_ge_2"
    assert th.raw == pytest.approx(min(first, second), rel=1e-13)
    assert th.safe == pytest.approx(th.raw / 2.0)


def test_uniqueness_critical_l2_direct():
    a, c = 1.5, 0.9
    g = min(a / 2, 1.5, 2.5)
    eta = 2 * (2**5 + 2**14) * (2 * a * g) ** -4
    ref = min(critical_threshold(2, a, c), (a / eta) ** (1 / 8))
    th = uniqueness_threshold(2, 8, a, c)
    assert th.case == "critical_l_ge_2"
    assert th.raw == pytest.approx(ref, rel=1e-13)


@given(st.integers(2, 4), st.floats(0.1, 10.0), st.floats(0.2, 3.0), st.floats(0.0, 0.99))
def test_critical_uniqueness_below_existence_threshold(l, a, c, frac):
    f = frac * critical_threshold(l, a, c)
    th = uniqueness_threshold(l, 4 * l, a, c, f_l2=f)
    assert th.raw <= critical_threshold(l, a, c)


def test_uniqueness_l1_direct():
    a, c, k1, k2 = 1.0, 0.9, 2.0, 2.0
    b = 0.5
    k3 = k1 + k1 / (2 * a) + k2 / a
    k = 2
    k4 = k * (2**-0.5 + 2**1.5) * (k1 / 2 * c**2 * (a * b) ** -2 + k3 * (a * b) ** -0.5)
    c3 = c3_constant(1, 2, a, c)
    ref = min((1 / (2 * a * c3)) ** (2 / 8), (a / k4) ** 0.5, 1.0)
    th = uniqueness_threshold(1, 2, a, c, k1, k2)
    assert th.case == "regular_l1" and th.raw == pytest.approx(ref, rel=1e-13)

    g = min(a / 2, 1.5)
    k5 = (2**2.5 + 2**7.5) * (k1 / 2 * c**4 * (2 * a * g) ** -4 + k3 * (2 * a * g) ** -1.5)
    ref = min(math.sqrt(3) * a / c, (a / k5) ** 0.25, 1.0)
    th = uniqueness_threshold(1, 4, a, c, k1, k2)
    assert th.case == "critical_l1" and th.raw == pytest.approx(ref, rel=1e-13)


def test_uniqueness_l1_needs_k_constants():
    with pytest.raises(ValueError, match="k1 and k2"):
        uniqueness_threshold(1, 1, 1.0, 1.0)


def test_uniqueness_zero_when_gamma_undefined():
    th = uniqueness_threshold(2, 8, 1.0, 1.0, f_l2=10.0)
    assert th.raw == 0.0 and "undefined" in th.note


def test_uniqueness_rejects_small_safety():
    with pytest.raises(ValueError):
        uniqueness_threshold(2, 1, 1.0, 1.0, safety=0.5)


def test_estimate_report_fields():
    reg = estimate_report(2, 3, 1.0, 1.0, wf2=0.01)
    assert reg.C1 > 0 and reg.C2 > 0 and reg.C3 > 0 and reg.gamma_l is None
    assert "uniqueness" in reg.thresholds
    crit = estimate_report(2, 8, 1.0, 1.0, f_l2=0.1)
    assert crit.C1 is None and crit.gamma_l > 0
    assert crit.thresholds["critical"].raw == pytest.approx(5**0.25)
    undefined = estimate_report(2, 8, 1.0, 1.0, f_l2=5.0)
    assert undefined.gamma_l is None


def test_lipschitz_constant():
    assert lipschitz_constant(2, 1, 1.0, 1.0, 0.0) == pytest.approx(1.0)
    assert lipschitz_constant(2, 1, 1.0, 1.0, 0.05) > 1.0
    assert lipschitz_constant(2, 1, 1.0, 1.0, 10.0) == math.inf


def test_c2_overflow_is_infinite():
    assert c2_constant(3, 11, 1.0, 1.0, 1e12) == math.inf
