import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from superrad.errors import DomainError, OutOfRangeError
from superrad.specfun import (
    JN_SCALED_CROSSOVER,
    bessel_jn,
    fn_coeff,
    j1_zero,
    jn_scaled,
    poisson_tail,
    tail_coefficient,
)


def mp_jn(n, x):
    with mpmath.workdps(40):
        return float(mpmath.besselj(n, x))


def test_bessel_trivial_values():
    assert bessel_jn(0, 0.0) == 1.0
    assert bessel_jn(1, 0.0) == 0.0


def test_bessel_at_first_j1_zero():
    assert bessel_jn(0, 3.8317060) == pytest.approx(-0.402759, abs=1e-6)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 17, 40])
def test_bessel_against_mpmath(n):
    xs = np.array([1e-3, 0.5, 3.0, 11.7, 42.0, 150.0])
    got = bessel_jn(n, xs)
    want = np.array([mp_jn(n, x) for x in xs])
    assert np.max(np.abs(got - want)) < 1e-14


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_bessel_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        bessel_jn(0, bad)
    with pytest.raises(DomainError):
        bessel_jn(1, np.array([0.0, bad]))


def test_bessel_rejects_bad_order():
    with pytest.raises(DomainError):
        bessel_jn(-1, 1.0)
    with pytest.raises(DomainError):
        bessel_jn(1.5, 1.0)


def test_jn_scaled_limits():
    assert jn_scaled(1, 0.0) == pytest.approx(1.0, abs=1e-15)
    for n in range(6):
        assert jn_scaled(n, 0.0) == pytest.approx(1.0 / math.factorial(n), rel=1e-15)


def test_jn_scaled_matches_j0():
    assert jn_scaled(0, 3.6705) == pytest.approx(bessel_jn(0, 2 * math.sqrt(3.6705)), abs=1e-15)
    assert jn_scaled(0, 3.6705) == pytest.approx(-0.402759, abs=1e-6)


def test_jn_scaled_rejects_negative():
    with pytest.raises(DomainError):
        jn_scaled(1, -1e-3)


def test_jn_scaled_continuous_at_crossover():
    for n in range(5):
        lo = jn_scaled(n, JN_SCALED_CROSSOVER * (1 - 1e-12))
        hi = jn_scaled(n, JN_SCALED_CROSSOVER * (1 + 1e-12))
        assert abs(lo - hi) <= 1e-14 * abs(hi)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(0, 12), u=st.floats(0.0, 400.0))
def test_jn_scaled_consistent_with_bessel(n, u):
    got = jn_scaled(n, u)
    if u == 0.0:
        assert got == pytest.approx(1.0 / math.factorial(n))
        return
    with mpmath.workdps(40):
        want = float(mpmath.besselj(n, 2 * mpmath.sqrt(u)) / mpmath.power(u, mpmath.mpf(n) / 2))
    assert abs(got - want) <= 1e-13 * max(1.0, abs(want))


def test_jn_scaled_small_argument_series():
    u = np.array([0.0, 1e-12, 1e-8, 5e-5])
    for n in range(4):
        with mpmath.workdps(40):
            want = [float(1 / mpmath.factorial(n)) if x == 0 else
                    float(mpmath.besselj(n, 2 * mpmath.sqrt(x)) / mpmath.power(x, mpmath.mpf(n) / 2))
                    for x in u]
        np.testing.assert_allclose(jn_scaled(n, u), want, rtol=1e-15)


def test_j1_zeros():
    assert j1_zero(1) == pytest.approx(3.8317060, abs=1e-7)
    assert j1_zero(2) == pytest.approx(7.0155867, abs=1e-7)
    for k in range(1, 51):
        assert j1_zero(k) == pytest.approx(float(mpmath.besseljzero(1, k)), abs=1e-12)


def test_j1_zeros_give_domain_widths():
    bt = [(j1_zero(k) / 2) ** 2 for k in (1, 2, 3)]
    assert [round(x, 2) for x in bt[:2]] == [3.67, 12.3]
    assert bt[2] == pytest.approx(25.87, abs=0.01)


def test_j1_zero_range():
    with pytest.raises(OutOfRangeError):
        j1_zero(51)
    with pytest.raises(OutOfRangeError):
        j1_zero(0)


@pytest.mark.parametrize("x", [0.0, 1e-6, 0.3, 1.0, 7.5, 40.0, 200.0, 1000.0])
def test_poisson_tail_against_mpmath(x):
    got = poisson_tail(299, x)
    n = np.arange(0, 300, 7)
    with mpmath.workdps(50):
        want = np.array([float(mpmath.gammainc(k + 1, 0, x, regularized=True)) for k in n])
    assert np.max(np.abs(got[n] - want)) < 1e-15
    mask = want > 1e-250
    if np.any(mask):
        assert np.max(np.abs(got[n][mask] / want[mask] - 1)) < 1e-12


def test_poisson_tail_is_complement_of_head():
    x = 3.3
    k = np.arange(0, 30)
    head = np.cumsum(np.exp(k * math.log(x) - x - special.gammaln(k + 1)))
    np.testing.assert_allclose(poisson_tail(29, x), 1 - head, atol=1e-15)


def test_poisson_tail_bounded_at_large_ratio():
    # b / gamma = 200: no negative entries and none above 1
    t = poisson_tail(400, 200.0)
    assert np.all(t >= 0) and np.all(t <= 1)
    assert np.all(np.diff(t) <= 0)


@settings(max_examples=100, deadline=None)
@given(x=st.floats(0.0, 500.0), n=st.integers(0, 400))
def test_tail_coefficient_in_unit_interval(x, n):
    v = tail_coefficient(n, x)
    assert 0.0 <= v <= 1.0


def test_fn_coeff_values():
    b, g, t = 2.0, 0.5, 3.0
    assert fn_coeff(0, b, g, t) == pytest.approx(1 - math.exp(-b / g), rel=1e-15)
    for n in range(5):
        assert fn_coeff(n, 0.0, g, t) == 0.0


def test_fn_coeff_ratio_decreases_to_zero():
    b, g, t = 3.0, 0.2, 4.0
    ratios = [fn_coeff(n, b, g, t) / (g * t) ** n for n in range(1, 80)]
    assert all(r2 < r1 for r1, r2 in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1e-30


def test_fn_coeff_requires_positive_gamma():
    with pytest.raises(DomainError):
        fn_coeff(1, 1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        fn_coeff(1, 1.0, -1.0, 1.0)
