import json
from fractions import Fraction

import numpy as np
import pytest

import oracles
from alphatree.exact import joint_pmf
from alphatree.montecarlo import (
    EmpiricalSummary,
    TrialConfig,
    clt_check,
    compare_exact,
    proportion_convergence,
    run_campaign,
    simulate_pairs,
    summarize,
    two_sample_chi2,
)
from alphatree.urn import limit_summary

ENGINES = ("tree", "urn")


def test_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(10, 0.5, 0)
    with pytest.raises(ValueError):
        TrialConfig(1, 0.5, 10)
    with pytest.raises(ValueError):
        TrialConfig(10, 1.5, 10)
    with pytest.raises(ValueError):
        TrialConfig(10, 0.5, 10, engine="gpu")


@pytest.mark.parametrize("engine", ENGINES)
def test_three_leaves(engine):
    s = run_campaign(TrialConfig(3, 0.37, 1000, seed=4, engine=engine))
    assert s.counts == {(1, 1): 1000}


@pytest.mark.parametrize("engine", ENGINES)
def test_comb(engine):
    s = run_campaign(TrialConfig(100, 1.0, 100, seed=4, engine=engine))
    assert s.counts == {(1, 1): 100}
    assert s.var_a == s.var_c == s.cov == 0


@pytest.mark.parametrize("engine", ENGINES)
def test_four_leaves_uniform(engine):
    s = run_campaign(TrialConfig(4, 0.5, 10**6, seed=21, engine=engine))
    assert abs(s.counts[(0, 2)] / s.trials - 0.2) <= 0.0012


@pytest.mark.parametrize("engine", ENGINES)
def test_four_leaves_yule_means(engine):
    s = run_campaign(TrialConfig(4, 0.0, 10**6, seed=5, engine=engine))
    rep = compare_exact(s, joint_pmf(4, 0.0))
    assert abs(rep.z_scores["a"]) < 4 and abs(rep.z_scores["c"]) < 4


@pytest.mark.parametrize("engine", ENGINES)
@pytest.mark.parametrize("n,alpha", [(6, 0.25), (8, 0.75), (7, 0.5)])
def test_agrees_with_oracle(engine, n, alpha):
    s = run_campaign(TrialConfig(n, alpha, 10**5, seed=n, engine=engine))
    law = oracles.joint_law(n, Fraction(alpha))
    rep = compare_exact(s, joint_pmf(n, alpha))
    assert set(s.counts) <= set(law)
    assert rep.p_value > 1e-3
    assert max(abs(z) for z in rep.z_scores.values()) < 4.5


def test_perfect_agreement():
    counts = {(1, 1): 2000, (0, 2): 1000}
    s = EmpiricalSummary(4, 0.0, counts)
    rep = compare_exact(s, joint_pmf(4, 0.0))
    assert rep.tv_distance == pytest.approx(0, abs=1e-15)
    assert rep.chi2_stat == pytest.approx(0, abs=1e-9)
    assert all(abs(z) < 1e-9 for z in rep.z_scores.values())


def test_compare_mismatch():
    s = run_campaign(TrialConfig(5, 0.5, 10))
    with pytest.raises(ValueError):
        compare_exact(s, joint_pmf(6, 0.5))
    with pytest.raises(ValueError):
        two_sample_chi2(s, run_campaign(TrialConfig(5, 0.4, 10)))


def test_engines_agree_n50():
    t = run_campaign(TrialConfig(50, 0.3, 10**5, seed=1, engine="tree"))
    u = run_campaign(TrialConfig(50, 0.3, 10**5, seed=2, engine="urn"))
    assert two_sample_chi2(t, u).p_value > 1e-3


@pytest.mark.parametrize("engine", ENGINES)
def test_deterministic_across_schedules(engine):
    cfg = TrialConfig(40, 0.45, 5000, seed=99, engine=engine)
    base = simulate_pairs(cfg)
    for workers, block in ((1, 1), (3, 7), (4, 1000), (2, 5000)):
        assert np.array_equal(simulate_pairs(cfg, workers=workers, block=block), base)
    assert run_campaign(cfg, workers=3, block=64) == run_campaign(cfg)


def test_seeds_differ():
    a = simulate_pairs(TrialConfig(40, 0.45, 200, seed=1))
    b = simulate_pairs(TrialConfig(40, 0.45, 200, seed=2))
    assert not np.array_equal(a, b)


def test_summary_statistics():
    pairs = simulate_pairs(TrialConfig(30, 0.6, 3000, seed=8))
    s = summarize(30, 0.6, pairs)
    assert s.trials == 3000
    assert s.mean_a == pytest.approx(pairs[:, 0].mean(), rel=1e-14)
    assert s.var_c == pytest.approx(pairs[:, 1].var(ddof=1), rel=1e-12)
    assert s.cov == pytest.approx(np.cov(pairs.T)[0, 1], rel=1e-12)


def test_merge_is_additive():
    pairs = simulate_pairs(TrialConfig(25, 0.2, 2000, seed=3))
    whole = summarize(25, 0.2, pairs)
    parts = [summarize(25, 0.2, pairs[i : i + 600]) for i in range(0, 2000, 600)]
    merged = parts[0]
    for p in parts[1:]:
        merged = merged.merge(p)
    assert merged == whole
    assert parts[1].merge(parts[0]) == parts[0].merge(parts[1])
    with pytest.raises(ValueError):
        whole.merge(summarize(26, 0.2, pairs))


def test_summary_json():
    s = run_campaign(TrialConfig(12, 0.5, 500, seed=2))
    js = json.loads(json.dumps(s.to_json()))
    assert js["trials"] == 500
    assert sum(k for _, _, k in js["counts"]) == 500


def test_oracle_convergence_rate():
    # mean TV distance to the exact law shrinks like trials^(-1/2)
    n, alpha = 6, 0.25
    pmf = joint_pmf(n, alpha)
    sizes = [10**3, 10**4, 10**5]
    tv = []
    for trials in sizes:
        runs = [
            compare_exact(run_campaign(TrialConfig(n, alpha, trials, seed=s, engine="urn")), pmf)
            for s in range(12)
        ]
        tv.append(np.mean([r.tv_distance for r in runs]))
    slope = np.polyfit(np.log(sizes), np.log(tv), 1)[0]
    assert -0.65 < slope < -0.35


# limit theorems --------------------------------------------------------------


def test_clt_singular_at_one():
    with pytest.raises(ValueError):
        clt_check(TrialConfig(100, 1.0, 10))


def test_clt_yule_variances():
    rep = clt_check(TrialConfig(2000, 0.0, 10**5, seed=31, engine="urn"))
    assert all(abs(v - 1) < 0.05 for v in rep.whitened_var)
    assert all(abs(m) < 0.1 for m in rep.mean_shift)


def test_clt_coverage_half():
    rep = clt_check(TrialConfig(2000, 0.5, 10**5, seed=32, engine="urn"))
    assert abs(rep.coverage[0.9] - 0.9) <= 0.01
    assert all(abs(s) < 0.1 for s in rep.skewness)


def test_proportions_converge():
    rep = proportion_convergence(TrialConfig(10**6 + 2, 0.5, 1, seed=3, engine="urn"))
    assert rep.final_max_deviation < 0.01
    assert rep.times[-1] == 10**6


def test_internal_proportions_sum_to_one():
    rep = proportion_convergence(TrialConfig(10**6 + 2, 0.3, 1, seed=4, engine="urn"))
    assert rep.proportions[-1][4:].sum() == pytest.approx(1, abs=1e-5)


def test_comb_proportions():
    rep = proportion_convergence(TrialConfig(10**4 + 2, 1.0, 1, engine="urn"), limit_summary(1.0))
    assert np.allclose(rep.v, [0, 0, 0, 1, 0, 1])
    assert np.abs(rep.proportions[-1] - rep.v).max() < 1e-3


def test_proportions_need_urn():
    with pytest.raises(ValueError):
        proportion_convergence(TrialConfig(100, 0.5, 1, engine="tree"))
