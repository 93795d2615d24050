"""Core shrink-until-center engine.

One run repeatedly resamples the measure restricted to the current set and
shrinks to the smallest set containing the sample, stopping once the sample
lands in the center.  The number of strictly-interior steps is Poisson with
mean ln(mu(B)/mu(B')); pooling k runs gives a rate-k Poisson point process on
the log-measure interval, which everything downstream builds on.
"""

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from .errors import CorruptSamplerError, DegenerateIntervalError, RunawayRunError
from .families import NestedFamily

__all__ = [
    "RunTrace",
    "PooledProcess",
    "LogRatioEstimate",
    "ConfidenceInterval",
    "rng_stream",
    "single_run",
    "run_batch",
    "pool_runs",
    "estimate_log_ratio",
    "normal_ci",
    "exact_poisson_ci",
]

DEFAULT_MAX_STEPS = 1_000_000


def rng_stream(seed, *key) -> np.random.Generator:
    """Derive an independent generator from a master seed and an index key.

    Stream (seed, key) is reproducible regardless of how many other streams
    exist or in which order they are consumed, which keeps parallel batches
    deterministic.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


@dataclass(frozen=True)
class RunTrace:
    """The descending beta sequence of one run.

    ``betas[0]`` is the shell parameter, the last entry is the terminating
    draw at or below the center, and ``count`` is the number of strictly
    interior steps (the run's Poisson output).
    """

    betas: tuple
    beta_shell: float
    beta_center: float

    @property
    def count(self) -> int:
        return len(self.betas) - 2

    def interior_betas(self) -> np.ndarray:
        """Betas strictly inside (beta_center, beta_shell): the pooled points."""
        return np.asarray(self.betas[1:-1], dtype=float)

    def to_dict(self, run_index: int) -> dict:
        return {
            "schema": "nestmc/trace-v1",
            "run_index": int(run_index),
            "betas": [float(b) for b in self.betas[1:]],
            "count": self.count,
        }


@dataclass(frozen=True)
class PooledProcess:
    """Multiset of interior betas from k runs, sorted descending."""

    k: int
    beta_shell: float
    beta_center: float
    points: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return int(self.points.size)

    def to_dict(self) -> dict:
        return {
            "schema": "nestmc/pool-v1",
            "k": int(self.k),
            "beta_shell": float(self.beta_shell),
            "beta_center": float(self.beta_center),
            "points": [float(b) for b in self.points],
        }


@dataclass(frozen=True)
class LogRatioEstimate:
    """Point estimate N/k of ln(mu(B)/mu(B')) with its plug-in variance N/k^2."""

    estimate: float
    k: int
    N: int
    variance_estimate: float


@dataclass(frozen=True)
class ConfidenceInterval:
    log_lower: float
    log_upper: float
    alpha: float
    method: str

    @property
    def lower(self) -> float:
        return float(np.exp(self.log_lower))

    @property
    def upper(self) -> float:
        return float(np.exp(self.log_upper))


def single_run(
    family: NestedFamily,
    rng: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> RunTrace:
    """One shrink-until-center run.

    Raises :class:`CorruptSamplerError` on a non-shrinking step and
    :class:`RunawayRunError` if the center is not reached in ``max_steps``.
    """
    beta = family.beta_shell
    center = family.beta_center
    betas = [beta]
    for _ in range(max_steps):
        _, beta_next = family.draw(beta, rng)
        if beta_next >= beta:
            raise CorruptSamplerError(
                f"sampler returned beta_next={beta_next!r} >= beta={beta!r}"
            )
        betas.append(beta_next)
        if beta_next <= center:
            return RunTrace(tuple(betas), family.beta_shell, center)
        beta = beta_next
    raise RunawayRunError(f"center not reached within {max_steps} steps")


def run_batch(
    family: NestedFamily,
    k: int,
    seed,
    n_jobs: int = 1,
    max_steps: int = DEFAULT_MAX_STEPS,
    stream_key: tuple = (),
) -> list:
    """Execute k independent runs.

    Each run ``j`` owns the RNG stream ``(seed, *stream_key, j)``, so the
    result is independent of ``n_jobs`` and of completion order.
    ``stream_key`` separates the streams of multi-phase callers.
    """
    if k < 1:
        raise ValueError("k must be at least 1")

    def _one(j):
        return single_run(family, rng_stream(seed, *stream_key, j), max_steps)

    if n_jobs == 1:
        return [_one(j) for j in range(k)]
    out = Parallel(n_jobs=n_jobs)(delayed(_one)(j) for j in range(k))
    return list(out)


def pool_runs(traces, family: NestedFamily = None) -> PooledProcess:
    """Merge run traces into the rate-k pooled point process.

    Terminal sub-center betas are dropped; only points strictly inside
    (beta_center, beta_shell) are retained.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace to pool")
    shell = traces[0].beta_shell
    center = traces[0].beta_center
    for t in traces:
        if t.beta_shell != shell or t.beta_center != center:
            raise ValueError("all traces must come from the same family")
    if family is not None and (
        family.beta_shell != shell or family.beta_center != center
    ):
        raise ValueError("traces do not match the given family")
    pts = np.concatenate([t.interior_betas() for t in traces])
    pts = np.sort(pts)[::-1]
    return PooledProcess(k=len(traces), beta_shell=shell, beta_center=center, points=pts)


def estimate_log_ratio(pool: PooledProcess) -> LogRatioEstimate:
    est = pool.N / pool.k
    return LogRatioEstimate(
        estimate=est, k=pool.k, N=pool.N, variance_estimate=est / pool.k
    )


def normal_ci(pool: PooledProcess, alpha: float) -> ConfidenceInterval:
    """Normal-approximation interval for the log-ratio.

    Centered at N/k with half-width z_{1-alpha/2} * sqrt(N)/k (the plug-in
    standard deviation of N/k).  Undefined at N = 0; use
    :func:`exact_poisson_ci` there.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if pool.N == 0:
        raise DegenerateIntervalError(
            "normal interval undefined at N = 0; use exact_poisson_ci"
        )
    center = pool.N / pool.k
    half = stats.norm.ppf(1.0 - alpha / 2.0) * np.sqrt(pool.N) / pool.k
    return ConfidenceInterval(center - half, center + half, alpha, "normal")


def exact_poisson_ci(pool: PooledProcess, alpha: float) -> ConfidenceInterval:
    """Garwood-style inversion of the Poisson tails, valid for all N >= 0."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    n, k = pool.N, pool.k
    lower = 0.0 if n == 0 else stats.gamma.ppf(alpha / 2.0, n) / k
    upper = stats.gamma.ppf(1.0 - alpha / 2.0, n + 1) / k
    return ConfidenceInterval(float(lower), float(upper), alpha, "exact-poisson")
