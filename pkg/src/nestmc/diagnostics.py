"""Statistical test batteries for engine output.

All tests here need an analytic log-measure oracle t(beta) = ln mu(A(beta)),
so they apply only to test families.  On an exact sampler, consecutive
t-spacings are Exp(1), run counts are Poisson, and pooled increments over
disjoint t-intervals are independent Poissons.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .engine import PooledProcess, RunTrace
from .errors import OracleUnavailableError

__all__ = [
    "SpacingReport",
    "GofReport",
    "IncrementReport",
    "spacing_diagnostic",
    "poisson_count_test",
    "increment_independence_test",
    "sup_deviation",
]

LOW_POWER_N = 10


@dataclass(frozen=True)
class SpacingReport:
    n_spacings: int
    ks_statistic: float
    p_value: float
    significance: float
    passed: bool
    low_power: bool

    def to_dict(self):
        return {
            "n_spacings": self.n_spacings,
            "ks_statistic": self.ks_statistic,
            "p_value": self.p_value,
            "significance": self.significance,
            "passed": self.passed,
            "low_power": self.low_power,
        }


@dataclass(frozen=True)
class GofReport:
    statistic: float
    dof: int
    p_value: float
    significance: float
    passed: bool

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "significance": self.significance,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class IncrementReport:
    per_interval: tuple
    max_abs_lag1_corr: float
    passed: bool

    def to_dict(self):
        return {
            "per_interval": [r.to_dict() for r in self.per_interval],
            "max_abs_lag1_corr": self.max_abs_lag1_corr,
            "passed": self.passed,
        }


def _log_measure_of(family, log_measure):
    if log_measure is not None:
        return log_measure
    if family is None or not family.has_log_measure:
        raise OracleUnavailableError("spacing diagnostic needs a log-measure oracle")
    return family.log_measure


def spacing_diagnostic(
    run_or_pool,
    family=None,
    log_measure=None,
    significance: float = 0.001,
) -> SpacingReport:
    """Kolmogorov-Smirnov check of t-spacings against Exp(1).

    For a single trace the raw t-gaps (including the terminal one, which is
    memoryless across the center) are Exp(1).  For a pool of k runs the
    interior gaps scaled by k are Exp(1); the gap censored at the center is
    excluded.
    """
    t = _log_measure_of(family, log_measure)
    if isinstance(run_or_pool, RunTrace):
        ts = np.array([t(b) for b in run_or_pool.betas])
        rate = 1.0
    elif isinstance(run_or_pool, PooledProcess):
        pool = run_or_pool
        ts = np.array([t(pool.beta_shell)] + [t(b) for b in pool.points])
        rate = float(pool.k)
    else:
        raise TypeError("expected a RunTrace or PooledProcess")

    spacings = -np.diff(ts) * rate
    n = spacings.size
    if n == 0:
        return SpacingReport(0, float("nan"), float("nan"), significance, False, True)
    res = stats.kstest(spacings, "expon")
    passed = bool(res.pvalue > significance)
    return SpacingReport(
        n, float(res.statistic), float(res.pvalue), significance, passed, n < LOW_POWER_N
    )


def _binned_poisson_expected(counts, lam):
    """Observed/expected cell counts with tail cells merged to expected >= 5."""
    counts = np.asarray(counts)
    m = counts.size
    hi = int(max(counts.max(), np.ceil(lam + 10 * np.sqrt(lam + 1))))
    support = np.arange(hi + 1)
    pmf = stats.poisson.pmf(support, lam)
    pmf[-1] += stats.poisson.sf(hi, lam)
    expected = m * pmf
    observed = np.bincount(counts, minlength=hi + 1).astype(float)

    # Merge from both ends until every cell expects at least 5.
    cells_obs, cells_exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5.0:
            cells_obs.append(acc_o)
            cells_exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0:
        if cells_exp:
            cells_obs[-1] += acc_o
            cells_exp[-1] += acc_e
        else:
            cells_obs.append(acc_o)
            cells_exp.append(acc_e)
    return np.array(cells_obs), np.array(cells_exp)


def poisson_count_test(counts, lam: float, significance: float = 0.001) -> GofReport:
    """Chi-square goodness of fit of integer counts against Poisson(lam)."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    obs, exp = _binned_poisson_expected(counts, lam)
    dof = max(len(obs) - 1, 1)
    statistic = float(np.sum((obs - exp) ** 2 / exp))
    p = float(stats.chi2.sf(statistic, dof))
    return GofReport(statistic, dof, p, significance, bool(p > significance))


def increment_independence_test(
    pools,
    family=None,
    log_measure=None,
    n_intervals: int = 4,
    significance: float = 0.001,
    corr_threshold: float = None,
) -> IncrementReport:
    """Check pooled increments over disjoint t-intervals.

    Each pool contributes one count per interval; counts in an interval of
    t-length L are Poisson(k*L) and neighbouring increments should be
    uncorrelated.  The default correlation threshold is 4/sqrt(#pools), four
    null standard errors of a sample correlation.
    """
    t = _log_measure_of(family, log_measure)
    pools = list(pools)
    if not pools:
        raise ValueError("need at least one pool")
    k = pools[0].k
    span = t(pools[0].beta_shell) - t(pools[0].beta_center)
    edges = np.linspace(0.0, span, n_intervals + 1)
    length = span / n_intervals

    incs = np.empty((len(pools), n_intervals))
    for i, pool in enumerate(pools):
        ts = t(pool.beta_shell) - np.array([t(b) for b in pool.points])
        hist, _ = np.histogram(ts, bins=edges)
        incs[i] = hist

    reports = tuple(
        poisson_count_test(incs[:, j].astype(int), k * length, significance)
        for j in range(n_intervals)
    )
    if corr_threshold is None:
        corr_threshold = 4.0 / np.sqrt(len(pools))
    if n_intervals > 1 and len(pools) > 2:
        corrs = [
            abs(float(np.corrcoef(incs[:, j], incs[:, j + 1])[0, 1]))
            for j in range(n_intervals - 1)
        ]
        max_corr = max(corrs)
    else:
        max_corr = 0.0
    passed = bool(all(r.passed for r in reports) and max_corr < corr_threshold)
    return IncrementReport(reports, max_corr, passed)


def sup_deviation(pool: PooledProcess, family=None, log_measure=None) -> float:
    """sup over t in [0, lambda] of |N_P(t)/k - t|, in oracle t-coordinates."""
    t = _log_measure_of(family, log_measure)
    k = pool.k
    span = t(pool.beta_shell) - t(pool.beta_center)
    ts = t(pool.beta_shell) - np.array([t(b) for b in pool.points])
    ts = np.sort(ts)
    n = ts.size
    if n == 0:
        return span
    idx = np.arange(1, n + 1)
    up = np.max(idx / k - ts)           # just after each jump
    down = np.max(ts - (idx - 1) / k)   # just before each jump
    end = abs(span - n / k)             # right endpoint
    return float(max(up, down, end, 0.0))
