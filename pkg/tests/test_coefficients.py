import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optfwer.coefficients import (
    CoefficientOverflow,
    batch_coeffs,
    error_coeffs,
    esp_all,
    net_benefits,
    power_coeff,
)

G3 = (2.0, 1.0, 0.5)
B3 = np.array([[6, 0, 0], [3, 4, 0], [1, 2, 4]], dtype=float)


def brute_b(g):
    """b[l, k-1] by explicit subset enumeration over the suffix."""
    K = len(g)
    b = np.zeros((K, K))
    for k in range(1, K + 1):
        prefix = math.prod(g[: k - 1])
        suffix = g[k:]
        for l in range(K):
            m = l - k + 1
            if m < 0 or m > len(suffix):
                continue
            e = sum(math.prod(S) for S in combinations(suffix, m))
            b[l, k - 1] = math.factorial(l) * math.factorial(K - l) * prefix * e
    return b


def test_esp_examples():
    assert esp_all([]) == [1.0]
    assert esp_all([2, 3, 4]) == [1, 9, 26, 24]
    assert esp_all([5.0, 0, 0, 0]) == [1, 5, 0, 0, 0]


@given(st.lists(st.floats(0, 10), max_size=8))
def test_esp_matches_subset_sums(xs):
    e = esp_all(xs)
    assert len(e) == len(xs) + 1
    for m, val in enumerate(e):
        ref = sum(math.prod(S) for S in combinations(xs, m))
        assert val == pytest.approx(ref, rel=1e-12, abs=1e-300)
        assert val >= 0


@given(st.lists(st.floats(0, 10), min_size=1, max_size=7), st.data())
def test_esp_non_decreasing_in_each_argument(xs, data):
    i = data.draw(st.integers(0, len(xs) - 1))
    bump = data.draw(st.floats(0, 5))
    ys = list(xs)
    ys[i] += bump
    for a, b in zip(esp_all(xs), esp_all(ys)):
        assert b >= a * (1 - 1e-12)


def test_power_coeff_examples():
    assert power_coeff(3, G3) == 2.0
    assert power_coeff(2, (1, 1)) == 1.0
    assert power_coeff(4, (1, 2, 3, 4)) == 144.0


def test_worked_example_k3():
    bundle = error_coeffs(3, G3)
    np.testing.assert_array_equal(bundle.b, B3)
    assert bundle.a == 2.0


def test_net_benefit_examples():
    bundle = error_coeffs(3, G3)
    np.testing.assert_allclose(net_benefits(bundle, (0, 0, 0)), (2, 2, 2))
    np.testing.assert_allclose(net_benefits(bundle, (1, 0, 0)), (-4, 2, 2))
    np.testing.assert_allclose(net_benefits(bundle, (1, 0.5, 0)), (-5.5, 0, 2))
    with pytest.raises(ValueError):
        net_benefits(bundle, (1, 0))


def test_all_zero_g():
    b = error_coeffs(5, [0.0] * 5).b
    assert b[0, 0] == math.factorial(5)
    b_rest = b.copy()
    b_rest[0, 0] = 0
    assert np.all(b_rest == 0)


g_lists = st.integers(2, 7).flatmap(lambda K: st.lists(st.floats(0.01, 20), min_size=K, max_size=K))


@given(g_lists)
def test_closed_form_matches_enumeration(g):
    b = error_coeffs(len(g), g).b
    ref = brute_b(g)
    np.testing.assert_allclose(b, ref, rtol=1e-12, atol=0)


@given(g_lists)
def test_zero_pattern_and_sign(g):
    K = len(g)
    b = error_coeffs(K, g).b
    assert b[0, 0] == math.factorial(K)
    for l in range(K):
        for k in range(1, K + 1):
            structural_zero = l < k - 1 or l - k + 1 > K - k
            assert (b[l, k - 1] == 0) == structural_zero
            assert b[l, k - 1] >= 0


@given(g_lists, st.data())
def test_net_benefits_decrease_in_mu(g, data):
    K = len(g)
    mu = np.array(data.draw(st.lists(st.floats(0, 10), min_size=K, max_size=K)))
    bump = np.array(data.draw(st.lists(st.floats(0, 10), min_size=K, max_size=K)))
    bundle = error_coeffs(K, g)
    assert np.all(net_benefits(bundle, mu + bump) <= net_benefits(bundle, mu) + 1e-9)


@given(st.integers(2, 8).flatmap(lambda K: st.lists(st.floats(1e-3, 1e3), min_size=K, max_size=K)))
def test_batch_path_agrees(g):
    g = sorted(g, reverse=True)
    K = len(g)
    bundle = error_coeffs(K, g)
    a, b = batch_coeffs(np.array([g]), scaled=False)
    assert a[0] == pytest.approx(bundle.a, rel=1e-12)
    np.testing.assert_allclose(b[0], bundle.b, rtol=1e-12)
    scale = math.prod(max(x, 1.0) for x in g)
    a_s, b_s = batch_coeffs(np.array([g]), scaled=True)
    assert a_s[0] * scale == pytest.approx(bundle.a, rel=1e-10)
    np.testing.assert_allclose(b_s[0] * scale, bundle.b, rtol=1e-10)


def test_scaled_coefficients_stay_finite_for_huge_g():
    g = np.array([[1e300, 1e250, 1e200, 1.0, 0.5]])
    a, b = batch_coeffs(g)
    assert np.all(np.isfinite(a)) and np.all(np.isfinite(b))


def test_k_limits():
    with pytest.raises(CoefficientOverflow):
        error_coeffs(21, [1.0] * 21)
    with pytest.raises(ValueError):
        power_coeff(1, [1.0])
    with pytest.raises(ValueError):
        error_coeffs(3, [1.0, 1.0])
