"""Six-colour urn for Ford trees, its uniform transform and limiting covariances.

Ball colours are the edge colours of :mod:`alphatree.tree`; one draw is one
leaf insertion. Limits are stated per unit of urn time ``n`` (the tree then
has ``n + 2`` leaves), so the limiting proportion vector ``v`` sums to 2.
"""

from dataclasses import dataclass

import numba
import numpy as np

from alphatree._rng import nb_next_double, nb_stream_key
from alphatree.errors import ValidationError
from alphatree.tree import check_alpha

REPLACEMENT = np.array(
    [
        [0, 0, 0, 1, 0, 1],
        [2, -2, 1, 0, -1, 2],
        [-2, 4, -1, 0, 2, -1],
        [0, 2, 0, -1, 1, 0],
        [2, -2, 1, 0, -1, 2],
        [0, 0, 0, 1, 0, 1],
    ],
    dtype=np.int64,
)
REPLACEMENT.setflags(write=False)

# (A, C) = U @ Q
Q = np.array([[1, 1], [0, 1], [0, 0], [0, 0], [0, 0], [0, 0]], dtype=float) / 2

EIGEN_TOL = 1e-10
SIGMA_TOL = 1e-9


@dataclass(frozen=True)
class UrnState:
    counts: tuple
    time: int = 0

    def __post_init__(self):
        if len(self.counts) != 6:
            raise ValueError("urn state needs 6 colour counts")
        if min(self.counts) < 0:
            raise ValueError(f"negative ball count in {self.counts}")

    @property
    def n_leaves(self):
        return self.time + 2

    def check(self):
        """Raise ``ValidationError`` unless every bookkeeping identity holds."""
        u = self.counts
        if min(u) < 0:
            raise ValidationError(f"negative count in {u}")
        if sum(u) != 3 + 2 * self.time:
            raise ValidationError(f"ball total {sum(u)} != 3 + 2*{self.time}")
        if sum(u[:4]) != self.time + 2 or u[4] + u[5] != self.time + 1:
            raise ValidationError(f"pendant/internal split broken in {u}")
        if u[0] % 2 or (u[0] + u[1]) % 2:
            raise ValidationError(f"parity violated in {u}")
        return self


def initial_urn():
    return UrnState((0, 2, 0, 0, 1, 0), 0)


def selection_weights(urn, alpha):
    w = np.asarray(urn.counts, dtype=float)
    w[:4] *= 1 - alpha
    w[4:] *= alpha
    return w


def selection_distribution(urn, alpha):
    check_alpha(alpha)
    w = selection_weights(urn, alpha)
    return w / w.sum()


def select_color(urn, alpha, u):
    """Colour (1..6) picked by the uniform draw ``u``; mirrors the batch kernel."""
    w = selection_weights(urn, alpha)
    x = u * (urn.time + 2 - alpha)
    acc = 0.0
    last = 0
    for i in range(6):
        if w[i] > 0:
            acc += w[i]
            last = i
            if x < acc:
                return i + 1
    return last + 1


def apply_draw(urn, color):
    """Add row ``color`` of the replacement matrix and advance time."""
    counts = tuple(int(x) for x in np.add(urn.counts, REPLACEMENT[color - 1]))
    if min(counts) < 0:
        raise ValidationError(f"drawing colour {color} from {urn.counts} is not tenable")
    return UrnState(counts, urn.time + 1)


def urn_step(urn, alpha, rng):
    check_alpha(alpha)
    return apply_draw(urn, select_color(urn, alpha, rng.random()))


def urn_to_ac(urn):
    """(pitchforks, cherries) of the tree encoded by ``urn``."""
    u1, u2 = urn.counts[0], urn.counts[1]
    if u1 % 2 or (u1 + u2) % 2:
        raise ValidationError(f"parity violated in {urn.counts}")
    return u1 // 2, (u1 + u2) // 2


# uniform transform -----------------------------------------------------------


def t_alpha(alpha):
    a = float(check_alpha(alpha))
    return np.diag([1 - a] * 4 + [a] * 2)


def t_alpha_inv(alpha):
    a = float(check_alpha(alpha))
    if not 0 < a < 1:
        raise ValueError("T_alpha is singular at alpha in {0, 1}")
    return np.diag([a] * 4 + [1 - a] * 2) / (a * (1 - a))


def r_alpha(alpha):
    """Replacement matrix of the uniform urn U T_alpha; rows sum to 1."""
    ra = REPLACEMENT @ t_alpha(alpha)
    if np.abs(ra.sum(axis=1) - 1).max() > EIGEN_TOL:
        raise ValidationError("R_alpha rows do not sum to 1")
    return ra


def eigenvalues(alpha):
    a = float(alpha)
    return np.array([1.0, 0.0, 0.0, 0.0, -2 * (1 - a), -(3 - 2 * a)])


@dataclass(frozen=True)
class EigenSystem:
    V: np.ndarray
    V_inv: np.ndarray
    Lambda: np.ndarray

    def residuals(self, alpha):
        """(max|V R_a V^-1 - diag(Lambda)|, max|V V^-1 - I|)."""
        diag = np.abs(self.V @ r_alpha(alpha) @ self.V_inv - np.diag(self.Lambda)).max()
        ident = np.abs(self.V @ self.V_inv - np.eye(6)).max()
        return diag, ident


def eigensystem(alpha, check=True):
    """Closed-form left/right eigenvectors of R_alpha for alpha in (0, 1)."""
    a = float(check_alpha(alpha))
    if not 0 < a < 1:
        raise ValueError("eigensystem is defined for alpha in (0, 1)")
    b = 1 - a
    v_inv = np.array(
        [
            [1, 1 / b, 0, 0, 1, 1 - a],
            [1, 0, 1 / b, 0, 1, 3 - a],
            [1, -2 / b, 0, 3 / b, -(2 - a) / b, -5 + a],
            [1, 0, 0, 1 / b, -(2 - a) / b, -3 + a],
            [1, 0, -2 / a, 1 / a, 1, 3 - a],
            [1, 0, 0, -1 / a, 1, 1 - a],
        ]
    )
    # entry (2, 2) is -2 b^3; with +2 b^3 V would not invert V_inv
    v = np.array(
        [
            [2 * b * b, 2 * b * b, b * b, (1 + a) * b, a * b, a * (5 - 3 * a)],
            [2 * b * (1 + a - a * a), -2 * b**3, -(2 - a) * b * b, (2 - a) * b * b,
             -a * b * b, -a * b * (5 - 3 * a)],
            [2 * a * b * b, 2 * a * (2 - a) * b, a * b * b, -a * b * b,
             -a * (3 - a) * b, -3 * a * b * b],
            [2 * a * (2 - a) * b, 2 * a * b * b, a * (2 - a) * b, -a * (2 - a) * b,
             a * a * b, -3 * a * (2 - a) * b],
            [2 * (2 - a) * b, -2 * b * b, (2 - a) * b, -(4 - a) * b, -a * b, a * b],
            [-2 * b, 2 * b, -b, b, a, -a],
        ]
    ) / (2 * (3 - 2 * a))
    es = EigenSystem(v, v_inv, eigenvalues(a))
    if check:
        diag, ident = es.residuals(a)
        if max(diag, ident) > EIGEN_TOL:
            raise ValidationError(f"eigensystem residuals {diag:.3g}, {ident:.3g} at alpha={a}")
    return es


# limits ----------------------------------------------------------------------

_PHI_COEFFS = (
    (8, -32, 45, -23),
    (40, -164, 221, -97),
    (56, -248, 367, -181),
    (8, -40, 37, 13),
    (40, -112, -31, 181),
    (8, 4, -71, 71),
)


def phi(alpha):
    """The six cubic polynomials entering the limiting covariance."""
    return np.array([np.polyval(c, float(alpha)) for c in _PHI_COEFFS])


def limit_v(alpha):
    """Almost-sure limit of U_n / n."""
    a = float(check_alpha(alpha))
    return np.array([2 * (1 - a), 2 * (1 - a), 1 - a, 1 + a, 1 - a, 5 - 3 * a]) / (2 * (3 - 2 * a))


def limit_v_tilde(alpha):
    """Principal left eigenvector of R_alpha, normalised to sum 1."""
    a = float(check_alpha(alpha))
    b = 1 - a
    return np.array([2 * b * b, 2 * b * b, b * b, 1 - a * a, a * b, a * (5 - 3 * a)]) / (2 * (3 - 2 * a))


def _phi_pattern(p):
    p1, p2, p3, p4, p5, p6 = p
    return np.array(
        [
            [-12 * p1, 4 * p2, -6 * p1, -2 * p4, 2 * p2, -2 * p2],
            [4 * p2, -4 * p3, 2 * p2, -2 * p6, -2 * p3, 2 * p3],
            [-6 * p1, 2 * p2, -3 * p1, -p4, p2, -p2],
            [-2 * p4, -2 * p6, -p4, p5, -p6, p6],
            [2 * p2, -2 * p3, p2, -p6, -p3, p3],
            [-2 * p2, 2 * p3, -p2, p6, p3, -p3],
        ]
    )


def _cov_scale(a):
    return (1 - a) / (4 * (3 - 2 * a) ** 2 * (5 - 4 * a) * (7 - 4 * a))


def sigma_closed(alpha):
    """Limiting covariance of (U_n - n v)/sqrt(n), closed form in alpha."""
    a = float(check_alpha(alpha))
    return _cov_scale(a) * _phi_pattern(phi(a))


def sigma_tilde_closed(alpha):
    """Limiting covariance of the transformed urn U_n T_alpha."""
    a = float(check_alpha(alpha))
    t = np.array([1 - a] * 4 + [a] * 2)
    return np.outer(t, t) * sigma_closed(a)


def sigma_tilde_spectral(alpha, es=None):
    """Uniform-urn covariance as the eigen-sum over non-principal eigenpairs."""
    a = float(alpha)
    es = es or eigensystem(a)
    lam = es.Lambda
    v1 = es.V[0]
    out = np.zeros((6, 6))
    for i in range(1, 6):
        for j in range(1, 6):
            li, lj = lam[i], lam[j]
            if li == 0 or lj == 0:
                continue
            ui, uj = es.V_inv[:, i], es.V_inv[:, j]
            weight = lam[0] * li * lj * (ui @ (v1 * uj)) / (lam[0] - li - lj)
            out += weight * np.outer(es.V[i], es.V[j])
    return out


def sigma_spectral(alpha):
    t_inv = t_alpha_inv(alpha)
    return t_inv @ sigma_tilde_spectral(alpha) @ t_inv


def s_closed(alpha):
    """Limiting covariance of ((A_n, C_n) - n(nu, mu))/sqrt(n)."""
    a = float(check_alpha(alpha))
    lead = (1 - a) / ((3 - 2 * a) ** 2 * (5 - 4 * a))
    tau2 = (-24 * a**3 + 96 * a**2 - 135 * a + 69) / (4 * (7 - 4 * a))
    rho = -(2 - a) * (1 - 2 * a) / 2
    return lead * np.array([[tau2, rho], [rho, 2 - a]])


def nu_mu(alpha):
    a = float(check_alpha(alpha))
    nu = (1 - a) / (2 * (3 - 2 * a))
    return nu, 2 * nu


@dataclass(frozen=True)
class LimitSummary:
    alpha: float
    v: np.ndarray
    v_tilde: np.ndarray
    Sigma: np.ndarray
    Sigma_tilde: np.ndarray
    S: np.ndarray
    phi: np.ndarray
    nu: float
    mu: float

    @property
    def tau2(self):
        return float(self.S[0, 0])

    @property
    def rho(self):
        return float(self.S[0, 1])

    @property
    def sigma2(self):
        return float(self.S[1, 1])

    def to_json(self):
        return {
            "alpha": self.alpha,
            "v": [float(x) for x in self.v],
            "sigma": [float(x) for x in self.Sigma.ravel()],
            "S": [float(x) for x in self.S.ravel()],
            "phi": [float(x) for x in self.phi],
            "nu": self.nu,
            "mu": self.mu,
        }


def limit_summary(alpha, check=True):
    """All limiting quantities at ``alpha``.

    With ``check`` and alpha in (0, 1), Sigma is also rebuilt from the
    eigen-sum of the uniform urn and compared entrywise with the closed form.
    """
    a = float(check_alpha(alpha))
    sigma = sigma_closed(a)
    s = s_closed(a)
    v = limit_v(a)
    v_tilde = limit_v_tilde(a)
    nu, mu = nu_mu(a)
    if check:
        _check_limits(a, v, v_tilde, sigma, s, nu, mu)
    return LimitSummary(a, v, v_tilde, sigma, sigma_tilde_closed(a), s, phi(a), nu, mu)


def _check_limits(a, v, v_tilde, sigma, s, nu, mu):
    def fail(what, err):
        raise ValidationError(f"{what} mismatch {err:.3g} at alpha={a}")

    err = np.abs(Q.T @ sigma @ Q - s).max()
    if err > EIGEN_TOL:
        fail("Q^T Sigma Q vs S", err)
    err = np.abs(v @ Q - (nu, mu)).max()
    if err > EIGEN_TOL:
        fail("v Q vs (nu, mu)", err)
    if 0 < a < 1:
        err = np.abs(v_tilde @ t_alpha_inv(a) - v).max()
        if err > EIGEN_TOL:
            fail("v_tilde T^-1 vs v", err)
        err = np.abs(sigma_spectral(a) - sigma).max()
        if err > SIGMA_TOL:
            fail("spectral vs closed-form Sigma", err)


# batch kernels ---------------------------------------------------------------

_R_FLAT = np.ascontiguousarray(REPLACEMENT)


@numba.njit(cache=True, nogil=True, inline="always")
def _draw(u, alpha, t, w):
    x = u * (t + 2 - alpha)
    acc = 0.0
    last = 0
    for i in range(6):
        if w[i] > 0:
            acc += w[i]
            last = i
            if x < acc:
                return i
    return last


@numba.njit(cache=True, nogil=True)
def _simulate_urn(steps, alpha, seed, first, count, rmat):
    state = np.empty(1, np.uint64)
    u = np.empty(6, np.int64)
    w = np.empty(6, np.float64)
    out_a = np.empty(count, np.int64)
    out_c = np.empty(count, np.int64)
    for tr in range(count):
        state[0] = nb_stream_key(seed, first + tr)
        u[:] = 0
        u[1] = 2
        u[4] = 1
        for t in range(steps):
            for i in range(4):
                w[i] = (1.0 - alpha) * u[i]
            w[4] = alpha * u[4]
            w[5] = alpha * u[5]
            k = _draw(nb_next_double(state), alpha, t, w)
            for j in range(6):
                u[j] += rmat[k, j]
        out_a[tr] = u[0] // 2
        out_c[tr] = (u[0] + u[1]) // 2
    return out_a, out_c


@numba.njit(cache=True, nogil=True)
def _urn_trajectory(checkpoints, alpha, seed, rmat):
    state = np.empty(1, np.uint64)
    state[0] = nb_stream_key(seed, 0)
    u = np.zeros(6, np.int64)
    u[1] = 2
    u[4] = 1
    w = np.empty(6, np.float64)
    out = np.empty((checkpoints.size, 6), np.int64)
    t = 0
    minimum = 0
    for ci in range(checkpoints.size):
        while t < checkpoints[ci]:
            for i in range(4):
                w[i] = (1.0 - alpha) * u[i]
            w[4] = alpha * u[4]
            w[5] = alpha * u[5]
            k = _draw(nb_next_double(state), alpha, t, w)
            for j in range(6):
                u[j] += rmat[k, j]
                if u[j] < minimum:
                    minimum = u[j]
            t += 1
        out[ci, :] = u
    return out, minimum


def simulate_urn_counts(n, alpha, seed, first, count):
    """(a, c) arrays for a block of urn-engine trials ending at ``n`` leaves."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    check_alpha(alpha)
    return _simulate_urn(
        int(n) - 2, float(alpha), np.uint64(seed & ((1 << 64) - 1)), int(first), int(count), _R_FLAT
    )


def urn_trajectory(checkpoints, alpha, seed):
    """Urn counts at the given (increasing) times along one trajectory."""
    check_alpha(alpha)
    cps = np.asarray(checkpoints, dtype=np.int64)
    if cps.size == 0 or np.any(np.diff(cps) < 0) or cps[0] < 0:
        raise ValueError("checkpoints must be non-negative and increasing")
    out, minimum = _urn_trajectory(cps, float(alpha), np.uint64(seed & ((1 << 64) - 1)), _R_FLAT)
    if minimum < 0:
        raise ValidationError("urn trajectory produced a negative count")
    return out
