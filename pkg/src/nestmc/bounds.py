"""Poisson tail bound and the two-phase (epsilon, delta) approximation scheme.

The tail bound: for N ~ Poisson(k * lam) and eps_tilde / lam <= 2.3,

    Pr(|N/k - lam| >= eps_tilde) <= 2 exp(-(k eps_tilde^2 / (2 lam)) (1 - eps_tilde/lam)).

Phase I sizes a rough pooled estimate of lam; Phase II rescales the run count
from it.  The final estimate exp(N2/k2) is within a multiplicative factor
1 + epsilon of the true ratio with probability at least 1 - delta, provided
the ratio is at least e.  For smaller ratios, acceptance-rejection at the
shell is both simpler and cheaper.
"""

import math
from dataclasses import dataclass

from . import engine
from .families import NestedFamily

__all__ = [
    "RasConfig",
    "RasResult",
    "ArResult",
    "poisson_tail_bound",
    "phase1_k",
    "phase2_k",
    "run_ras",
    "ar_ratio_estimate",
    "AR_CONSTANT",
]

# Tail-bound validity cutoff for eps_tilde / lam.
TAIL_BOUND_CUTOFF = 2.3

# Sample-size constant for acceptance-rejection: a Bernoulli relative-error
# Chernoff bound needs n >= 3 ln(2/delta) / (eps^2 p), and the small-ratio
# regime guarantees hit probability p > 1/e, giving C = 3e.
AR_CONSTANT = 3.0 * math.e


@dataclass(frozen=True)
class RasConfig:
    """Relative-error target and failure probability for the two-phase scheme."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.epsilon_a >= 1.0:
            raise ValueError(
                "ln(1 + epsilon) must be below 1 (epsilon < e - 1 required)"
            )

    @property
    def epsilon_a(self) -> float:
        """Additive log-scale error target ln(1 + epsilon)."""
        return math.log1p(self.epsilon)


@dataclass(frozen=True)
class RasResult:
    estimate: float
    k1: int
    N1: int
    k2: int
    N2: int
    total_samples: int
    phase1_failed: bool

    def to_dict(self):
        return {
            "schema": "nestmc/ras-v1",
            "estimate": self.estimate,
            "k1": self.k1,
            "N1": self.N1,
            "k2": self.k2,
            "N2": self.N2,
            "total_samples": self.total_samples,
            "phase1_failed": self.phase1_failed,
        }


@dataclass(frozen=True)
class ArResult:
    estimate: float  # inf when no hits landed in the center
    p_hat: float
    hits: int
    n_samples: int

    @property
    def zero_hits(self) -> bool:
        return self.hits == 0

    def to_dict(self):
        return {
            "schema": "nestmc/ar-v1",
            "estimate": self.estimate,
            "p_hat": self.p_hat,
            "hits": self.hits,
            "n_samples": self.n_samples,
        }


def poisson_tail_bound(eps_tilde: float, lam: float, k: int) -> float:
    """Upper bound on Pr(|N/k - lam| >= eps_tilde), clamped to [0, 1]."""
    if eps_tilde <= 0:
        raise ValueError("eps_tilde must be positive")
    if lam <= 0:
        raise ValueError("lam must be positive")
    if k < 1:
        raise ValueError("k must be a positive integer")
    ratio = eps_tilde / lam
    if ratio > TAIL_BOUND_CUTOFF:
        raise ValueError(
            f"bound invalid for eps_tilde/lam = {ratio:.4g} > {TAIL_BOUND_CUTOFF}"
        )
    raw = 2.0 * math.exp(-(k * eps_tilde**2 / (2.0 * lam)) * (1.0 - ratio))
    return min(raw, 1.0)


def phase1_k(config: RasConfig) -> int:
    """Phase I run count: ceil(2 eps_a^-2 (1 - eps_a)^-1 ln(2/delta))."""
    ea = config.epsilon_a
    return math.ceil(2.0 * ea**-2 * (1.0 - ea) ** -1 * math.log(2.0 / config.delta))


def phase2_k(n1: int, config: RasConfig) -> int:
    """Phase II run count ceil(N1 / (1 - eps_a)); zero when Phase I saw nothing."""
    if n1 < 0:
        raise ValueError("n1 must be nonnegative")
    return math.ceil(n1 / (1.0 - config.epsilon_a))


def run_ras(
    family: NestedFamily,
    config: RasConfig,
    seed,
    n_jobs: int = 1,
    max_steps: int = engine.DEFAULT_MAX_STEPS,
) -> RasResult:
    """Two-phase scheme.  Assumes mu(B)/mu(B') >= e (asserted via family
    metadata where available, never verified at runtime).

    A Phase I pooled count of zero is reported as ``phase1_failed`` with the
    degenerate estimate 1.0 rather than raising: the caller chose a family
    whose ratio is far below the scheme's validity regime.
    """
    k1 = phase1_k(config)
    traces1 = engine.run_batch(
        family, k1, seed, n_jobs=n_jobs, max_steps=max_steps, stream_key=(0,)
    )
    n1 = engine.pool_runs(traces1, family).N
    samples1 = sum(t.count + 1 for t in traces1)
    k2 = phase2_k(n1, config)
    if k2 == 0:
        return RasResult(1.0, k1, n1, 0, 0, samples1, True)
    traces2 = engine.run_batch(
        family, k2, seed, n_jobs=n_jobs, max_steps=max_steps, stream_key=(1,)
    )
    n2 = engine.pool_runs(traces2, family).N
    samples2 = sum(t.count + 1 for t in traces2)
    return RasResult(
        math.exp(n2 / k2), k1, n1, k2, n2, samples1 + samples2, False
    )


def ar_sample_size(epsilon: float, delta: float, c: float = AR_CONSTANT) -> int:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return math.ceil(c * epsilon**-2 * math.log(2.0 / delta))


def ar_ratio_estimate(
    family: NestedFamily,
    epsilon: float,
    delta: float,
    seed,
    c: float = AR_CONSTANT,
) -> ArResult:
    """Acceptance-rejection fallback for ratios below e.

    Draws from the measure restricted to the shell and counts hits in the
    center (a draw lands in the center exactly when its infimum parameter is
    at most beta_center).  The ratio estimate is 1/p_hat.
    """
    n = ar_sample_size(epsilon, delta, c)
    rng = engine.rng_stream(seed, 2)
    hits = 0
    shell = family.beta_shell
    center = family.beta_center
    for _ in range(n):
        _, beta_next = family.draw(shell, rng)
        if beta_next <= center:
            hits += 1
    p_hat = hits / n
    estimate = math.inf if hits == 0 else 1.0 / p_hat
    return ArResult(estimate, p_hat, hits, n)
