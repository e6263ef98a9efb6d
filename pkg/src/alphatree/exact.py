"""Exact law and moments of (pitchforks, cherries) for Ford trees of fixed size.

Floating point is the default everywhere. ``joint_pmf(..., exact=True)`` runs
the same recursion over ``Fraction`` cells, and ``moment_trace`` accepts a
``precision`` (decimal digits, via mpmath) for checks that would otherwise
drown in the cancellation of E[C^2] - E[C]^2.
"""

import math
from contextlib import nullcontext
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from alphatree.errors import ValidationError
from alphatree.numerics import bisect_root, gamma_ratio_asymptotic
from alphatree.tree import check_alpha
from alphatree.urn import s_closed

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class JointPmf:
    """P(A_n = a, C_n = c) stored as ``table[a, c]``.

    The table spans 0 <= a <= n//3, 0 <= c <= n//2 and is zero off the
    support {c >= 1, a <= c, a + 2c <= n}. In exact mode it is an object
    array of ``Fraction``.
    """

    n: int
    alpha: object
    table: np.ndarray

    def prob(self, a, c):
        if 0 <= a < self.table.shape[0] and 0 <= c < self.table.shape[1]:
            return self.table[a, c]
        return 0

    def items(self):
        """Non-zero cells as ((a, c), p), ordered by c then a."""
        rows = []
        for c in range(self.table.shape[1]):
            for a in range(self.table.shape[0]):
                p = self.table[a, c]
                if p != 0:
                    rows.append(((a, c), p if self.table.dtype == object else float(p)))
        return rows

    def as_dict(self):
        return dict(self.items())

    def cherry_marginal(self):
        return self.table.sum(axis=0)

    def total(self):
        return self.table.sum()

    def expect(self, f):
        """E f(A, C) for a function vectorised over integer grids."""
        a, c = np.indices(self.table.shape)
        return (f(a, c) * self.table).sum()


def support_mask(n, shape):
    a, c = np.indices(shape)
    return (c >= 1) & (a <= c) & (a + 2 * c <= n)


def _level(prev, n, alpha, zero):
    """Table for n + 1 leaves from the table for n leaves."""
    m = n + 1
    shape = (m // 3 + 1, m // 2 + 1)
    p = np.full(shape, zero, dtype=prev.dtype)
    p[: prev.shape[0], : prev.shape[1]] = prev
    a, b = np.indices(shape)
    if prev.dtype == object:
        a = a.astype(object)
        b = b.astype(object)
    one = alpha * 0 + 1
    denom = n - alpha

    # source cells shifted into target coordinates, zero where out of range
    from_up = np.full(shape, zero, dtype=prev.dtype)  # (a+1, b-1)
    from_up[:-1, 1:] = p[1:, :-1]
    from_left = np.full(shape, zero, dtype=prev.dtype)  # (a-1, b)
    from_left[1:, :] = p[:-1, :]
    from_down = np.full(shape, zero, dtype=prev.dtype)  # (a, b-1)
    from_down[:, 1:] = p[:, :-1]

    out = (
        (2 * a + alpha * (n - a - b - 1)) * p
        + (one - alpha) * (a + 1) * from_up
        + (2 - alpha) * (b - a + 1) * from_left
        + (one - alpha) * (n - a - 2 * b + 2) * from_down
    ) / denom
    out[~support_mask(m, shape)] = zero
    return out


def joint_pmf(n, alpha, exact=False):
    """Joint law of (A_n, C_n) by forward recursion from P(A_3=1, C_3=1)=1."""
    check_alpha(alpha)
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if exact:
        alpha = Fraction(alpha)
        zero = Fraction(0)
        table = np.full((2, 2), zero, dtype=object)
        table[1, 1] = Fraction(1)
    else:
        alpha = float(alpha)
        zero = 0.0
        table = np.zeros((2, 2))
        table[1, 1] = 1.0
    for k in range(3, n):
        table = _level(table, k, alpha, zero)
    if not exact:
        drift = abs(table.sum() - 1)
        if drift > NORMALIZATION_TOL:
            raise ValidationError(f"pmf mass drifted by {drift:.3g} at n={n}")
    elif table.sum() != 1:
        raise ValidationError(f"exact pmf mass is {table.sum()} at n={n}")
    return JointPmf(n, alpha, table)


def cherry_pmf(n, alpha, exact=False):
    """P(C_n = k) for k = 0..n//2 from the univariate cherry recursion.

    The inflow term uses P(C_n = k-1) at the same n; that is the form the
    joint recursion marginalises to.
    """
    check_alpha(alpha)
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    alpha = Fraction(alpha) if exact else float(alpha)
    one = alpha * 0 + 1
    p = [0 * one, one]
    for m in range(3, n):
        q = []
        for k in range((m + 1) // 2 + 1):
            stay = p[k] if k < len(p) else 0 * one
            inflow = p[k - 1] if 1 <= k <= len(p) else 0 * one
            q.append(
                (((m - 1) * alpha + 2 * (one - alpha) * k) * stay
                 + (one - alpha) * (m - 2 * k + 2) * inflow)
                / (m - alpha)
            )
        p = q
    return np.array(p, dtype=object if exact else float)


@dataclass(frozen=True)
class MomentTrace:
    """Exact moments at one n; central moments are filled in at construction."""

    n: int
    alpha: object
    ec: object
    ea: object
    ec2: object
    eac: object
    ea2: object
    var_c: object = None
    cov_ac: object = None
    var_a: object = None
    corr: object = None

    @classmethod
    def build(cls, n, alpha, ec, ea, ec2, eac, ea2):
        var_c = ec2 - ec**2
        var_a = ea2 - ea**2
        cov = eac - ea * ec
        corr = None
        if var_a > 0 and var_c > 0:
            sqrt = mpmath.sqrt if isinstance(var_a, mpmath.mpf) else math.sqrt
            corr = cov / sqrt(var_a * var_c)
        return cls(n, alpha, ec, ea, ec2, eac, ea2, var_c, cov, var_a, corr)

    def row(self):
        return {
            "n": self.n,
            "alpha": float(self.alpha),
            "ec": float(self.ec),
            "ea": float(self.ea),
            "ec2": float(self.ec2),
            "eac": float(self.eac),
            "ea2": float(self.ea2),
            "var_c": float(self.var_c),
            "cov_ac": float(self.cov_ac),
            "var_a": float(self.var_a),
            "corr": None if self.corr is None else float(self.corr),
        }


def _coerce(alpha, precision):
    if precision is not None:
        return mpmath.mpf(alpha if not isinstance(alpha, Fraction) else
                          mpmath.mpf(alpha.numerator) / alpha.denominator)
    return alpha if isinstance(alpha, Fraction) else float(alpha)


def moment_trace(n_max, alpha, precision=None):
    """Raw first and second moments of (A_n, C_n) for n = 3..n_max.

    ``alpha`` as a ``Fraction`` gives exact arithmetic; ``precision`` (decimal
    digits) switches to mpmath.
    """
    check_alpha(alpha)
    if n_max < 3:
        raise ValueError(f"n_max must be >= 3, got {n_max}")
    if precision is None:
        return _moment_trace(n_max, _coerce(alpha, None))
    with mpmath.workdps(precision):
        return _moment_trace(n_max, _coerce(alpha, precision))


def _moment_trace(n_max, a):
    one = a * 0 + 1
    ec = ea = ec2 = eac = ea2 = one
    out = [MomentTrace.build(3, a, ec, ea, ec2, eac, ea2)]
    for n in range(3, n_max):
        d = n - a
        ec, ea, ec2, eac, ea2 = (
            ((n - 2 + a) * ec + n * (1 - a)) / d,
            ((n - 3 + a) * ea + (2 - a) * ec) / d,
            ((n - 4 + 3 * a) * ec2 + 2 * (n - 1) * (1 - a) * ec + n * (1 - a)) / d,
            ((n - 5 + 3 * a) * eac + (n - 1) * (1 - a) * ea + (2 - a) * ec2) / d,
            ((n - 6 + 3 * a) * ea2 + 2 * (2 - a) * eac + (2 - a) * ec - ea) / d,
        )
        if not all(map(_finite, (ec, ea, ec2, eac, ea2))):
            raise ValidationError(f"moment recursion overflowed at n={n + 1}")
        out.append(MomentTrace.build(n + 1, a, ec, ea, ec2, eac, ea2))
    return out


def _finite(x):
    if isinstance(x, float):
        return math.isfinite(x)
    if isinstance(x, mpmath.mpf):
        return mpmath.isfinite(x)
    return True


@dataclass(frozen=True)
class MeanClosedForm:
    n: int
    alpha: float
    mean_c: float
    mean_a: float
    x_n: float
    y_n: float


def mean_corrections(n, alpha):
    """(x_n, y_n): the parts of E[C_n], E[A_n] beyond the affine terms."""
    a = float(check_alpha(alpha))
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    base = a / (2 * (3 - 2 * a))
    i = np.arange(3, n, dtype=float)
    x = base * float(np.prod((i - 2 + a) / (i - a)))
    if n == 3:
        return x, 0.5
    j = np.arange(4, n, dtype=float)
    y = (a * (2 * n - 3 + a - n * a) / (2 * (3 - 2 * a) * (3 - a))
         * float(np.prod((j - 3 + a) / (j - a))))
    return x, y


def mean_closed_form(n, alpha):
    a = float(check_alpha(alpha))
    x, y = mean_corrections(n, a)
    const = a / (2 * (3 - 2 * a))
    mean_c = (1 - a) / (3 - 2 * a) * n + const + x
    mean_a = (1 - a) / (2 * (3 - 2 * a)) * n + const + y
    return MeanClosedForm(n, a, mean_c, mean_a, x, y)


def correction_asymptotics(n, alpha):
    """Leading-order forms of (x_n, y_n), both of order n^(-2(1-alpha))."""
    a = float(check_alpha(alpha))
    g = gamma_ratio_asymptotic(3, 2, 1, a, n)  # Gamma(3-a)/Gamma(1+a) n^(-2+2a)
    x = a / (2 * (3 - 2 * a)) * g
    return x, (2 - a) * x


def second_moment_coefficients(alpha):
    """Slopes and intercepts (c1, c0, d1, d0, e1, e0) of var C, cov, var A.

    ``Fraction`` and mpmath inputs keep their type.
    """
    a = check_alpha(alpha)
    if not isinstance(a, (Fraction, mpmath.mpf)):
        a = float(a)
    base = (1 - a) * (2 - a) / ((3 - 2 * a) ** 2 * (5 - 4 * a))
    c1 = base
    c0 = -a * base
    d1 = -(1 - 2 * a) * base / 2
    d0 = -a * base
    den = 4 * (3 - 2 * a) ** 2 * (5 - 4 * a) * (7 - 4 * a)
    e1 = (1 - a) * (69 - 135 * a + 96 * a**2 - 24 * a**3) / den
    e0 = 3 * a * (1 - a) * (1 - 2 * a) * (5 - 3 * a) / den
    return c1, c0, d1, d0, e1, e0


def second_moment_asymptotics(n, alpha):
    """Linear-plus-constant approximations of (var C_n, cov(A_n, C_n), var A_n)."""
    c1, c0, d1, d0, e1, e0 = second_moment_coefficients(alpha)
    return c1 * n + c0, d1 * n + d0, e1 * n + e0


def correlation_sign(n, alpha):
    """(sign, rho) of the exact correlation of A_n and C_n."""
    check_alpha(alpha)
    if alpha == 1:
        raise ValueError("correlation is undefined at alpha = 1 (comb model)")
    rho = moment_trace(n, alpha)[-1].corr
    if rho is None:
        raise ValueError(f"correlation is undefined at n={n}")
    return (rho > 0) - (rho < 0), rho


def cherry_variance_cubic(alpha):
    return 19 - 48 * alpha + 36 * alpha**2 - 8 * alpha**3


def covariance_quartic(alpha):
    return -24 * alpha**4 + 160 * alpha**3 - 370 * alpha**2 + 358 * alpha - 123


@dataclass(frozen=True)
class Extrema:
    a0: float
    a1: float
    sigma2_max: float
    cov_max: float


def limit_curve_extrema(tol=1e-12):
    """Maximisers of the limiting cherry variance and covariance over (0, 1)."""
    a0 = bisect_root(cherry_variance_cubic, 0.0, 1.0, tol)
    a1 = bisect_root(covariance_quartic, 0.0, 1.0, tol)
    return Extrema(a0, a1, float(s_closed(a0)[1, 1]), float(s_closed(a1)[0, 1]))


def ford_variance_recursion_check(n_max, alpha, precision=40):
    """Largest residual of the direct var(C_n) recursion along ``moment_trace``.

    The default runs at 40 digits because in float64 the subtraction
    E[C^2] - E[C]^2 alone loses about 1e-8 at n = 1000. Pass
    ``precision=None`` for plain floats.
    """
    if n_max < 4:
        raise ValueError(f"n_max must be >= 4, got {n_max}")
    with mpmath.workdps(precision) if precision else nullcontext():
        trace = moment_trace(n_max, alpha, precision=precision)
        a = trace[0].alpha
        worst = 0
        for cur, nxt in zip(trace, trace[1:]):
            n, mu, s2 = cur.n, cur.ec, cur.var_c
            d = n - a
            lhs = d * nxt.var_c - (n - 4 + 3 * a) * s2
            rhs = (-4 * (1 - a) ** 2 * mu**2 / d
                   + 2 * (1 - a) * ((1 - 2 * a) * n + a) * mu / d
                   + a * (1 - a) * n * (n - 1) / d)
            worst = max(worst, abs(lhs - rhs))
        return float(worst)
