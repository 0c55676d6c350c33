import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.stats import norm

from src.core.errors import DomainError
from src.core.stats import (
    binomial_half_size,
    inv_norm_quantile,
    wilson_interval,
    wilson_interval_approx,
    z_for,
)

probabilities = st.floats(min_value=1e-6, max_value=1 - 1e-6, allow_nan=False)


@pytest.mark.parametrize("t", [1e-6, 0.001, 0.02, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.975, 0.999, 1 - 1e-6])
def test_quantile_matches_scipy(t):
    assert inv_norm_quantile(t) == pytest.approx(norm.ppf(t), rel=1e-8, abs=1e-9)


def test_quantile_known_value():
    assert math.isclose(inv_norm_quantile(0.975), 1.959964, abs_tol=1e-6)
    assert inv_norm_quantile(0.5) == 0.0


@given(probabilities)
def test_quantile_antisymmetric(t):
    assert math.isclose(inv_norm_quantile(t), -inv_norm_quantile(1 - t), abs_tol=1e-8)


@given(probabilities, probabilities)
def test_quantile_monotone(a, b):
    assume(a < b)
    assert inv_norm_quantile(a) <= inv_norm_quantile(b) + 1e-8


@pytest.mark.parametrize("t", [0.0, 1.0, -0.1, 1.5])
def test_quantile_domain(t):
    with pytest.raises(DomainError):
        inv_norm_quantile(t)


def test_z_for_two_sided():
    assert math.isclose(z_for(0.95), 1.959964, abs_tol=1e-6)
    with pytest.raises(DomainError):
        z_for(1.0)


def test_wilson_reference_value():
    interval = wilson_interval(0.5, 0.95, 100)
    assert math.isclose(interval.lo, 0.4038, abs_tol=1e-4)
    assert math.isclose(interval.hi, 0.5962, abs_tol=1e-4)
    assert interval.level == 0.95


@given(
    st.floats(min_value=0, max_value=1, allow_nan=False),
    st.floats(min_value=0.01, max_value=0.99),
    st.integers(min_value=1, max_value=10_000),
)
def test_wilson_inside_unit_interval_and_contains_estimate(p_hat, c, n):
    interval = wilson_interval(p_hat, c, n)
    assert 0 <= interval.lo <= interval.hi <= 1
    assert interval.lo - 1e-12 <= p_hat <= interval.hi + 1e-12


@pytest.mark.parametrize("p_hat", [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95])
@pytest.mark.parametrize("n", [500, 2000])
def test_wilson_close_to_normal_interval_for_large_n(p_hat, n):
    exact = wilson_interval(p_hat, 0.95, n)
    approx = wilson_interval_approx(p_hat, 0.95, n)
    assert abs(exact.lo - approx.lo) <= 0.005
    assert abs(exact.hi - approx.hi) <= 0.005


def test_half_size_matches_interval():
    z = z_for(0.9)
    assert math.isclose(binomial_half_size(0.7, z, 200), wilson_interval(0.7, 0.9, 200).half_size)
    assert math.isclose(binomial_half_size(0.7, z, 200, approx=True), wilson_interval_approx(0.7, 0.9, 200).half_size)


def test_wilson_input_validation():
    with pytest.raises(DomainError):
        wilson_interval(1.2, 0.9, 10)
    with pytest.raises(DomainError):
        wilson_interval(0.5, 0.9, 0)


@given(
    st.floats(min_value=0, max_value=1, allow_nan=False),
    st.floats(min_value=0.01, max_value=0.99),
    st.integers(min_value=1, max_value=5_000),
    st.integers(min_value=1, max_value=5_000),
)
def test_wilson_half_size_shrinks_with_more_tasks(p_hat, c, n, extra):
    narrow = wilson_interval(p_hat, c, n + extra).half_size
    assert narrow <= wilson_interval(p_hat, c, n).half_size + 1e-12


@given(
    st.floats(min_value=0, max_value=1, allow_nan=False),
    st.floats(min_value=0.01, max_value=0.99),
    st.floats(min_value=0.01, max_value=0.99),
    st.integers(min_value=1, max_value=5_000),
)
def test_wilson_half_size_grows_with_confidence(p_hat, a, b, n):
    low, high = sorted((a, b))
    assert wilson_interval(p_hat, low, n).half_size <= wilson_interval(p_hat, high, n).half_size + 1e-12


@given(st.floats(min_value=0, max_value=1, allow_nan=False), st.integers(min_value=1, max_value=5_000))
def test_wilson_mirror_symmetry(p_hat, n):
    interval = wilson_interval(p_hat, 0.9, n)
    mirrored = wilson_interval(1 - p_hat, 0.9, n)
    assert math.isclose(interval.lo, 1 - mirrored.hi, abs_tol=1e-12)
    assert math.isclose(interval.hi, 1 - mirrored.lo, abs_tol=1e-12)
