import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from alphatree.exact import cherry_variance_cubic, covariance_quartic
from alphatree.numerics import (
    bisect_root,
    gamma_ratio_asymptotic,
    gamma_ratio_loggamma,
    gamma_ratio_product,
    product_bound_constant,
)


def test_empty_product():
    assert gamma_ratio_product(4, 2, 1, 0.3, 4) == 1


def test_small_product_by_hand():
    # l=3, k=2, m=1, alpha=0.5: (1.5/2.5) * (2.5/3.5)
    assert gamma_ratio_product(3, 2, 1, 0.5, 5) == pytest.approx(1.5 / 3.5, rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 6),
    st.integers(0, 6),
    st.integers(1, 3),
    st.floats(0.01, 0.99),
    st.integers(0, 3000),
)
def test_product_matches_loggamma(l, k, m, alpha, extra):
    assume(l >= k and l - k + m * alpha > 0 and l - alpha > 0)
    n = l + extra
    exact = gamma_ratio_product(l, k, m, alpha, n)
    assert gamma_ratio_loggamma(l, k, m, alpha, n) == pytest.approx(exact, rel=1e-12)


def test_asymptotic_ratio_tends_to_one():
    for alpha in (0.1, 0.5, 0.9):
        n = 10**6
        ratio = gamma_ratio_product(3, 2, 1, alpha, n) / gamma_ratio_asymptotic(3, 2, 1, alpha, n)
        assert ratio == pytest.approx(1, abs=1e-4)


def test_bound_constant_is_finite():
    ns = [10, 100, 1000, 10**4, 10**5]
    for alpha in (0.0, 0.4, 0.8):
        k = product_bound_constant(4, 3, 2, alpha, ns)
        assert 0 < k < 10
        expo = -3 + 3 * alpha
        for n in ns:
            assert gamma_ratio_product(4, 3, 2, alpha, n) <= k * (n / 4) ** expo * (1 + 1e-12)


def test_product_errors():
    with pytest.raises(ValueError, match="i=2"):
        gamma_ratio_product(2, 2, 1, 0.0, 5)
    with pytest.raises(ValueError):
        gamma_ratio_product(2, 3, 1, 0.5, 5)
    with pytest.raises(ValueError):
        gamma_ratio_product(5, 1, 1, 0.5, 4)


def test_bisect_sqrt2():
    assert bisect_root(lambda x: x * x - 2, 1, 2, 1e-10) == pytest.approx(math.sqrt(2), abs=1e-10)


def test_bisect_endpoint_root():
    assert bisect_root(lambda x: x - 1, 1, 2) == 1


def test_bisect_polynomial_roots():
    assert bisect_root(cherry_variance_cubic, 0, 1, 1e-8) == pytest.approx(0.73396, abs=1e-5)
    assert bisect_root(covariance_quartic, 0, 1, 1e-8) == pytest.approx(0.86875, abs=1e-5)


def test_bisect_errors():
    with pytest.raises(ValueError, match="sign"):
        bisect_root(lambda x: x * x + 1, -1, 1)
    with pytest.raises(ValueError):
        bisect_root(lambda x: x, -1, 1, tol=0)
