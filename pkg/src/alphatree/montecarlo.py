"""Simulation campaigns and their statistical comparison with the exact and limit laws.

Trial ``i`` of a campaign always draws from the stream keyed by
``(seed, i)``, so a campaign gives identical results for any block size or
worker count. Summaries keep only the (a, c) occurrence table, which is a
sufficient statistic for everything reported and merges by addition.
"""

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from alphatree.tree import check_alpha, simulate_counts
from alphatree.urn import limit_summary, simulate_urn_counts, urn_trajectory

ENGINES = {"tree": simulate_counts, "urn": simulate_urn_counts}
MIN_EXPECTED = 5.0
DEFAULT_BLOCK = 8192


@dataclass(frozen=True)
class TrialConfig:
    n: int
    alpha: float
    trials: int
    seed: int = 0
    engine: str = "tree"

    def __post_init__(self):
        check_alpha(self.alpha)
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {sorted(ENGINES)}, got {self.engine!r}")


@dataclass
class EmpiricalSummary:
    n: int
    alpha: float
    counts: dict
    pairs: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def trials(self):
        return sum(self.counts.values())

    def _moment(self, f):
        return sum(k * f(a, c) for (a, c), k in self.counts.items())

    def _mean(self, f):
        return float(Fraction(self._moment(f), self.trials))

    def _cov(self, f, g):
        n = self.trials
        if n < 2:
            return 0.0
        sf, sg = self._moment(f), self._moment(g)
        sfg = self._moment(lambda a, c: f(a, c) * g(a, c))
        return float(Fraction(n * sfg - sf * sg, n * (n - 1)))

    @property
    def mean_a(self):
        return self._mean(lambda a, c: a)

    @property
    def mean_c(self):
        return self._mean(lambda a, c: c)

    @property
    def var_a(self):
        return self._cov(lambda a, c: a, lambda a, c: a)

    @property
    def var_c(self):
        return self._cov(lambda a, c: c, lambda a, c: c)

    @property
    def cov(self):
        return self._cov(lambda a, c: a, lambda a, c: c)

    def frequencies(self):
        t = self.trials
        return {cell: k / t for cell, k in self.counts.items()}

    def merge(self, other):
        if (self.n, self.alpha) != (other.n, other.alpha):
            raise ValueError("cannot merge summaries of different (n, alpha)")
        merged = Counter(self.counts)
        merged.update(other.counts)
        return EmpiricalSummary(self.n, self.alpha, dict(sorted(merged.items())))

    def to_json(self):
        return {
            "n": self.n,
            "alpha": float(self.alpha),
            "trials": self.trials,
            "mean_a": self.mean_a,
            "mean_c": self.mean_c,
            "var_a": self.var_a,
            "var_c": self.var_c,
            "cov": self.cov,
            "counts": [[a, c, k] for (a, c), k in sorted(self.counts.items(), key=_cell_order)],
        }


def _cell_order(item):
    (a, c), _ = item
    return c, a


def simulate_pairs(cfg, workers=1, block=DEFAULT_BLOCK):
    """Per-trial (a, c) as an int array of shape (trials, 2), in trial order."""
    kernel = ENGINES[cfg.engine]
    starts = range(0, cfg.trials, block)

    def run(first):
        return kernel(cfg.n, cfg.alpha, cfg.seed, first, min(block, cfg.trials - first))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    a = np.concatenate([p[0] for p in parts])
    c = np.concatenate([p[1] for p in parts])
    return np.column_stack([a, c])


def summarize(n, alpha, pairs, keep_pairs=False):
    cells, k = np.unique(pairs, axis=0, return_counts=True)
    counts = {(int(a), int(c)): int(m) for (a, c), m in zip(cells, k)}
    return EmpiricalSummary(n, alpha, counts, pairs if keep_pairs else None)


def run_campaign(cfg, workers=1, block=DEFAULT_BLOCK, keep_pairs=False):
    pairs = simulate_pairs(cfg, workers=workers, block=block)
    return summarize(cfg.n, cfg.alpha, pairs, keep_pairs)


# comparisons -----------------------------------------------------------------


@dataclass(frozen=True)
class ExactComparison:
    tv_distance: float
    chi2_stat: float
    dof: int
    p_value: float
    z_scores: dict


MOMENT_FUNCTIONS = {
    "a": lambda a, c: a,
    "c": lambda a, c: c,
    "a2": lambda a, c: a * a,
    "ac": lambda a, c: a * c,
    "c2": lambda a, c: c * c,
}


def _pooled_chi2(observed, expected):
    """Chi-square over cells with expected >= MIN_EXPECTED, the rest pooled."""
    observed = np.asarray(observed, float)
    expected = np.asarray(expected, float)
    keep = expected >= MIN_EXPECTED
    obs = list(observed[keep])
    exp = list(expected[keep])
    po, pe = observed[~keep].sum(), expected[~keep].sum()
    if pe > 0:
        obs.append(po)
        exp.append(pe)
    elif po > 0:
        return float("inf"), max(len(obs) - 1, 0), 0.0
    obs, exp = np.array(obs), np.array(exp)
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = len(obs) - 1
    p = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return stat, dof, p


def compare_exact(summary, pmf):
    """Goodness of fit of an empirical summary against the exact joint law."""
    if summary.n != pmf.n or float(summary.alpha) != float(pmf.alpha):
        raise ValueError(
            f"summary (n={summary.n}, alpha={summary.alpha}) does not match "
            f"pmf (n={pmf.n}, alpha={pmf.alpha})"
        )
    exact = {cell: float(p) for cell, p in pmf.items()}
    total = summary.trials
    freq = summary.frequencies()
    cells = sorted(set(exact) | set(freq))
    tv = 0.5 * sum(abs(freq.get(x, 0.0) - exact.get(x, 0.0)) for x in cells)
    observed = [summary.counts.get(x, 0) for x in cells]
    expected = [total * exact.get(x, 0.0) for x in cells]
    stat, dof, p = _pooled_chi2(observed, expected)

    z = {}
    for name, f in MOMENT_FUNCTIONS.items():
        m = sum(p_ * f(*x) for x, p_ in exact.items())
        var = sum(p_ * f(*x) ** 2 for x, p_ in exact.items()) - m * m
        sample = summary._moment(f) / total
        if var <= 1e-15 * max(1.0, m * m):
            z[name] = 0.0 if abs(sample - m) <= 1e-12 * max(1.0, abs(m)) else float("inf")
        else:
            z[name] = (sample - m) / np.sqrt(var / total)
    return ExactComparison(tv, stat, dof, p, z)


@dataclass(frozen=True)
class TwoSampleResult:
    chi2_stat: float
    dof: int
    p_value: float


def two_sample_chi2(first, second):
    """Homogeneity test of two empirical (a, c) laws, sparse cells pooled."""
    if (first.n, float(first.alpha)) != (second.n, float(second.alpha)):
        raise ValueError("summaries describe different (n, alpha)")
    cells = sorted(set(first.counts) | set(second.counts))
    table = np.array(
        [[s.counts.get(x, 0) for x in cells] for s in (first, second)], dtype=float
    )
    rows = table.sum(axis=1, keepdims=True)
    expected = rows * table.sum(axis=0) / table.sum()
    keep = expected.min(axis=0) >= MIN_EXPECTED
    pooled = table[:, ~keep].sum(axis=1, keepdims=True)
    table = np.hstack([table[:, keep], pooled]) if pooled.sum() > 0 else table[:, keep]
    if table.shape[1] < 2:
        return TwoSampleResult(0.0, 0, 1.0)
    stat, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return TwoSampleResult(float(stat), int(dof), float(p))


# limit theorems --------------------------------------------------------------


@dataclass(frozen=True)
class CLTReport:
    n: int
    alpha: float
    trials: int
    coverage: dict
    whitened_var: tuple
    skewness: tuple
    excess_kurtosis: tuple
    mean_shift: tuple


def whiten(pairs, n, limits):
    """((a, c) - n(nu, mu)) / sqrt(n), multiplied by S^(-1/2)."""
    s = np.asarray(limits.S, float)
    w, vecs = np.linalg.eigh(s)
    if w.min() <= 1e-14 * max(1.0, abs(w).max()):
        raise ValueError(f"limiting covariance S is singular at alpha={limits.alpha}")
    inv_sqrt = vecs @ np.diag(w**-0.5) @ vecs.T
    centred = (np.asarray(pairs, float) - n * np.array([limits.nu, limits.mu])) / np.sqrt(n)
    return centred @ inv_sqrt


def clt_check(cfg, limits=None, levels=(0.5, 0.9, 0.95, 0.99), workers=1, pairs=None):
    """Whitened simulated (a, c) against the bivariate normal limit."""
    if float(cfg.alpha) == 1.0:
        raise ValueError("limiting covariance S is singular at alpha=1")
    limits = limits or limit_summary(cfg.alpha)
    if pairs is None:
        pairs = simulate_pairs(cfg, workers=workers)
    z = whiten(pairs, cfg.n, limits)
    r2 = (z**2).sum(axis=1)
    coverage = {lv: float(np.mean(r2 <= stats.chi2.ppf(lv, 2))) for lv in levels}
    return CLTReport(
        n=cfg.n,
        alpha=float(cfg.alpha),
        trials=len(z),
        coverage=coverage,
        whitened_var=tuple(float(x) for x in z.var(axis=0, ddof=1)),
        skewness=tuple(float(x) for x in stats.skew(z, axis=0)),
        excess_kurtosis=tuple(float(x) for x in stats.kurtosis(z, axis=0)),
        mean_shift=tuple(float(x) for x in z.mean(axis=0)),
    )


@dataclass(frozen=True)
class ProportionReport:
    alpha: float
    times: tuple
    proportions: np.ndarray
    v: np.ndarray
    final_max_deviation: float


def proportion_convergence(cfg, limits=None, n_checkpoints=8):
    """U_t / t along one urn trajectory of t = cfg.n - 2 steps, versus the limit v."""
    if cfg.engine != "urn":
        raise ValueError("proportion_convergence needs engine='urn'")
    steps = cfg.n - 2
    if steps < 1:
        raise ValueError("need at least one urn step")
    limits = limits or limit_summary(cfg.alpha, check=False)
    times = np.unique(np.geomspace(1, steps, n_checkpoints).round().astype(np.int64))
    counts = urn_trajectory(times, cfg.alpha, cfg.seed)
    props = counts / times[:, None]
    dev = float(np.abs(props[-1] - limits.v).max())
    return ProportionReport(float(cfg.alpha), tuple(int(t) for t in times), props, limits.v, dev)
