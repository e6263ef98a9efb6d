"""Gamma-ratio products and root bracketing shared by the exact and limit code."""

import math

import mpmath
import numpy as np
from scipy import optimize


def _product_factors(l, k, m, alpha, n):
    i = np.arange(l, n, dtype=float)
    return i - k + m * alpha, i - alpha


def gamma_ratio_product(l, k, m, alpha, n):
    """Exact value of prod_{i=l}^{n-1} (i - k + m*alpha) / (i - alpha).

    An empty product (n == l) is 1. Raises ``ValueError`` naming the first
    index whose numerator or denominator is not strictly positive.
    """
    if not (l >= k >= 0 and m >= 1):
        raise ValueError(f"need l >= k >= 0 and m >= 1, got l={l}, k={k}, m={m}")
    if n < l:
        raise ValueError(f"need n >= l, got n={n}, l={l}")
    num, den = _product_factors(l, k, m, alpha, n)
    bad = np.flatnonzero((num <= 0) | (den <= 0))
    if bad.size:
        raise ValueError(f"non-positive factor at i={l + int(bad[0])}")
    return float(np.prod(num / den))


def gamma_ratio_loggamma(l, k, m, alpha, n):
    """Same product through the telescoped gamma identity, evaluated with log-gamma.

    The four log-gammas nearly cancel for large n, so they are taken at 30
    digits; float lgamma alone drifts past 1e-12 relative by n ~ 1000.
    """
    if l - k + m * alpha <= 0 or l - alpha <= 0:
        raise ValueError("gamma arguments must be positive")
    with mpmath.workdps(30):
        a = mpmath.mpf(alpha)
        return float(mpmath.exp(
            mpmath.loggamma(n - k + m * a)
            - mpmath.loggamma(l - k + m * a)
            + mpmath.loggamma(l - a)
            - mpmath.loggamma(n - a)
        ))


def gamma_ratio_asymptotic(l, k, m, alpha, n):
    """Leading-order approximation Gamma(l-alpha)/Gamma(l-k+m*alpha) * n^(-k+(m+1)alpha)."""
    lead = math.exp(math.lgamma(l - alpha) - math.lgamma(l - k + m * alpha))
    return lead * n ** (-k + (m + 1) * alpha)


def product_bound_constant(l, k, m, alpha, n_values):
    """Smallest K with |product| <= K (n/l)^(-k+(m+1)alpha) over ``n_values``."""
    expo = -k + (m + 1) * alpha
    ratios = [
        abs(gamma_ratio_product(l, k, m, alpha, n)) / (n / l) ** expo for n in n_values
    ]
    return max(ratios)


def bisect_root(f, lo, hi, tol=1e-10):
    """Root of ``f`` in [lo, hi] to absolute tolerance ``tol``.

    ``f(lo)`` and ``f(hi)`` must have opposite signs.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")
    return optimize.bisect(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
