from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from alphatree._rng import SplitMix64
from alphatree.errors import ValidationError
from alphatree.tree import (
    classify_edges,
    count_stats,
    edge_colors,
    edge_weight,
    initial_tree,
    simulate_ford,
)
from alphatree.urn import (
    REPLACEMENT,
    UrnState,
    apply_draw,
    eigensystem,
    eigenvalues,
    initial_urn,
    limit_summary,
    limit_v,
    nu_mu,
    r_alpha,
    s_closed,
    select_color,
    selection_distribution,
    sigma_closed,
    sigma_spectral,
    sigma_tilde_closed,
    sigma_tilde_spectral,
    simulate_urn_counts,
    t_alpha,
    t_alpha_inv,
    urn_step,
    urn_to_ac,
    urn_trajectory,
)

GRID = np.round(np.arange(0.05, 0.96, 0.05), 2)
alphas = st.floats(0.0, 1.0)


def run_urn(steps, alpha, seed=0, index=0):
    rng = SplitMix64(seed, index)
    u = initial_urn()
    for _ in range(steps):
        u = urn_step(u, alpha, rng)
    return u


def test_replacement_is_balanced():
    assert (REPLACEMENT.sum(axis=1) == 2).all()


def test_initial_urn():
    u = initial_urn().check()
    assert u.counts == (0, 2, 0, 0, 1, 0)
    assert urn_to_ac(u) == (0, 1)


def test_state_validation():
    with pytest.raises(ValueError):
        UrnState((0, 1, 2))
    with pytest.raises(ValueError):
        UrnState((0, -1, 0, 0, 1, 0))
    with pytest.raises(ValidationError):
        UrnState((1, 2, 0, 0, 1, 0), 0).check()
    with pytest.raises(ValidationError):
        urn_to_ac(UrnState((1, 1, 0, 0, 1, 0)))


def test_untenable_draw():
    with pytest.raises(ValidationError):
        apply_draw(initial_urn(), 3)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 300), alphas, st.integers(0, 2**64 - 1))
def test_urn_invariants(steps, alpha, seed):
    u = run_urn(steps, alpha, seed).check()
    assert u.time == steps
    a, c = urn_to_ac(u)
    assert 1 <= c and a <= c and a + 2 * c <= steps + 2


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), alphas, st.integers(0, 2**32))
def test_tree_colours_form_valid_urn(n, alpha, seed):
    tree = simulate_ford(n, alpha, SplitMix64(seed))
    u = UrnState(classify_edges(tree), n - 2).check()
    assert urn_to_ac(u) == count_stats(tree)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30), alphas, st.integers(0, 2**32))
def test_colour_law_matches_edge_weights(n, alpha, seed):
    tree = simulate_ford(n, alpha, SplitMix64(seed))
    u = UrnState(classify_edges(tree), n - 2)
    weights = np.zeros(6)
    for e, col in edge_colors(tree).items():
        weights[col - 1] += edge_weight(tree, e, alpha)
    if weights.sum() > 0:
        assert np.allclose(selection_distribution(u, alpha), weights / weights.sum())


def test_select_color_skips_empty_colours():
    u = initial_urn()
    draws = {select_color(u, 0.3, k / 1000) for k in range(1000)}
    assert draws == {2, 5}


@pytest.mark.parametrize("n,alpha", [(3, 0.2), (20, 0.0), (50, 0.45), (80, 1.0)])
def test_kernel_matches_python(n, alpha):
    a, c = simulate_urn_counts(n, alpha, 9, 3, 30)
    for t in range(30):
        assert urn_to_ac(run_urn(n - 2, alpha, 9, 3 + t)) == (a[t], c[t])


def test_trajectory_matches_stepwise():
    out = urn_trajectory([0, 5, 50, 200], 0.4, 12)
    for row, t in zip(out, (0, 5, 50, 200)):
        assert tuple(row) == run_urn(t, 0.4, 12).counts


def test_trajectory_rejects_bad_checkpoints():
    with pytest.raises(ValueError):
        urn_trajectory([5, 3], 0.5, 0)
    with pytest.raises(ValueError):
        urn_trajectory([], 0.5, 0)


# transform and spectrum -------------------------------------------------------


def test_t_alpha():
    assert np.allclose(t_alpha(0.25).diagonal(), [0.75] * 4 + [0.25] * 2)
    assert np.allclose(t_alpha(0.3) @ t_alpha_inv(0.3), np.eye(6))
    for a in (0.0, 1.0):
        with pytest.raises(ValueError):
            t_alpha_inv(a)


@pytest.mark.parametrize("alpha", GRID)
def test_r_alpha_row_sums(alpha):
    assert np.allclose(r_alpha(alpha).sum(axis=1), 1)


@pytest.mark.parametrize("alpha", GRID)
def test_eigensystem(alpha):
    es = eigensystem(alpha)
    assert max(es.residuals(alpha)) <= 1e-10
    assert np.allclose(np.sort(es.Lambda), np.sort(eigenvalues(alpha)))
    assert np.allclose(np.sort(np.linalg.eigvals(r_alpha(alpha)).real), np.sort(eigenvalues(alpha)))


def test_eigenvalues_symbolic():
    # independent route: characteristic polynomial of R T_alpha in sympy
    a = sp.Rational(3, 10)
    t = sp.diag(*([1 - a] * 4 + [a] * 2))
    ra = sp.Matrix(REPLACEMENT.tolist()) * t
    roots = sorted(float(r) for r, k in sp.roots(ra.charpoly().as_expr()).items() for _ in range(k))
    assert np.allclose(roots, sorted(eigenvalues(0.3)))


def test_principal_eigenvector():
    for a in GRID:
        es = eigensystem(a)
        lead = np.argmax(es.Lambda)
        assert es.Lambda[lead] == 1
        # the matching row of V is a left eigenvector
        assert np.allclose(es.V[lead] @ r_alpha(alpha=a), es.V[lead])


# limits ----------------------------------------------------------------------


def test_limit_vectors():
    for a in (0.0, 0.3, 0.5, 0.8, 1.0):
        v = limit_v(a)
        assert v.sum() == pytest.approx(2)
        assert v[:4].sum() == pytest.approx(1)
        assert v[4] + v[5] == pytest.approx(1)
    assert np.allclose(limit_v(1.0), [0, 0, 0, 1, 0, 1])


def test_nu_mu():
    assert nu_mu(0) == pytest.approx((1 / 6, 1 / 3))
    assert nu_mu(0.5) == pytest.approx((1 / 8, 1 / 4))
    assert nu_mu(1) == (0, 0)


def test_special_limit_covariances():
    assert np.allclose(s_closed(0), np.array([[69 / 28, -1], [-1, 2]]) / 45, atol=1e-15)
    assert np.allclose(s_closed(0.5), np.array([[3, 0], [0, 4]]) / 64, atol=1e-15)
    assert not s_closed(1).any()


@pytest.mark.parametrize("alpha", GRID)
def test_sigma_routes_agree(alpha):
    assert np.abs(sigma_spectral(alpha) - sigma_closed(alpha)).max() <= 1e-9
    assert np.abs(sigma_tilde_spectral(alpha) - sigma_tilde_closed(alpha)).max() <= 1e-9


@settings(max_examples=50, deadline=None)
@given(alphas)
def test_sigma_is_covariance(alpha):
    s = sigma_closed(alpha)
    assert np.allclose(s, s.T)
    assert np.linalg.eigvalsh(s).min() >= -1e-12
    # ball total is deterministic, so Sigma annihilates the all-ones vector
    assert np.allclose(s @ np.ones(6), 0, atol=1e-12)


def test_limit_summary_fields():
    lim = limit_summary(0.5)
    assert lim.tau2 == pytest.approx(3 / 64)
    assert lim.rho == pytest.approx(0, abs=1e-15)
    assert lim.sigma2 == pytest.approx(1 / 16)
    js = lim.to_json()
    assert len(js["sigma"]) == 36 and len(js["S"]) == 4 and len(js["v"]) == 6


def test_limit_summary_endpoints():
    for a in (0.0, 1.0, Fraction(1, 2)):
        limit_summary(a)


def test_first_two_draws():
    u1 = apply_draw(initial_urn(), 2)
    assert u1.counts == (2, 0, 1, 0, 0, 2)
    assert urn_to_ac(u1) == (1, 1)
    u2 = apply_draw(u1, 3)
    assert u2.counts == (0, 4, 0, 0, 2, 1)
    assert urn_to_ac(u2) == (0, 2)


def test_tree_colours_of_small_shapes():
    pitchfork = initial_tree().subdivide(2)
    assert classify_edges(pitchfork) == (2, 0, 1, 0, 0, 2)
    # hanging a leaf on the pitchfork's lone pendant edge gives the balanced 4-leaf tree
    lone = [e for e, c in edge_colors(pitchfork).items() if c == 3][0]
    assert classify_edges(pitchfork.subdivide(lone)) == (0, 4, 0, 0, 2, 1)
