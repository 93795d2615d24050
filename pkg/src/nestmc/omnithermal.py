"""All-parameter (omnithermal) step-function approximation.

From a pooled process, the counting function N_P(t) = #{b in P : b >= beta_shell - t}
yields exp(N_P(beta_shell - beta)/k) as a simultaneous estimate of
mu(B)/mu(A(beta)) for every beta in [beta_center, beta_shell].  Anchoring at a
known center measure turns this into a partition-function curve, usable as
the normalizer inside one-dimensional evidence integrals.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .engine import PooledProcess

__all__ = [
    "StepFunction",
    "PartitionCurve",
    "OmniPlan",
    "counting_process",
    "omnithermal_estimate",
    "sup_deviation_bound",
    "plan_runs",
    "anchored_partition_curve",
    "evidence_integral",
    "curve_to_csv",
]

# Validity cutoff for eps_tilde/lam in the sup-deviation bound; the Taylor
# expansion behind it holds up to this constant.
SUP_BOUND_CUTOFF = 2.31858

# Sample-size planner validity range for the relative-error target.
PLAN_EPSILON_MAX = 0.3


class StepFunction:
    """Right-continuous counting process N_P(t), t = beta_shell - beta.

    Immutable after construction; a jump counts at its own location
    (the counting definition uses ">=").
    """

    def __init__(self, pool: PooledProcess):
        self._k = pool.k
        self._shell = pool.beta_shell
        self._center = pool.beta_center
        # Jump locations in ascending t.
        self._jumps = np.sort(self._shell - pool.points)
        self._n = int(self._jumps.size)

    @property
    def k(self) -> int:
        return self._k

    @property
    def beta_shell(self) -> float:
        return self._shell

    @property
    def beta_center(self) -> float:
        return self._center

    @property
    def total_count(self) -> int:
        return self._n

    @property
    def t_span(self) -> float:
        return self._shell - self._center

    def count_at(self, t):
        """N_P(t); vectorized over t."""
        return np.searchsorted(self._jumps, t, side="right")

    def log_ratio_at(self, beta):
        """N_P(beta_shell - beta)/k: log of the shell-to-A(beta) ratio estimate."""
        beta = np.asarray(beta, dtype=float)
        if np.any(beta < self._center) or np.any(beta > self._shell):
            raise ValueError("beta outside [beta_center, beta_shell]")
        return self.count_at(self._shell - beta) / self._k

    def ratio_at(self, beta):
        return np.exp(self.log_ratio_at(beta))

    def __call__(self, beta):
        return self.ratio_at(beta)


def counting_process(pool: PooledProcess) -> StepFunction:
    return StepFunction(pool)


def omnithermal_estimate(pool_or_step, beta: float) -> float:
    """exp(N_P(beta_shell - beta)/k): estimate of mu(B)/mu(A(beta))."""
    sf = pool_or_step if isinstance(pool_or_step, StepFunction) else StepFunction(pool_or_step)
    return float(sf.ratio_at(beta))


def sup_deviation_bound(eps_tilde: float, lam: float, k: int) -> float:
    """Bound on Pr(sup_t |N_P(t)/k - t| >= eps_tilde) over t in [0, lam].

    Same arithmetic as the pointwise Poisson tail bound, valid up to
    eps_tilde/lam <= 2.31858.
    """
    if eps_tilde <= 0:
        raise ValueError("eps_tilde must be positive")
    if lam <= 0:
        raise ValueError("lam must be positive")
    if k < 1:
        raise ValueError("k must be a positive integer")
    ratio = eps_tilde / lam
    if ratio > SUP_BOUND_CUTOFF:
        raise ValueError(
            f"bound invalid for eps_tilde/lam = {ratio:.4g} > {SUP_BOUND_CUTOFF}"
        )
    raw = 2.0 * math.exp(-(k * eps_tilde**2 / (2.0 * lam)) * (1.0 - ratio))
    return min(raw, 1.0)


@dataclass(frozen=True)
class OmniPlan:
    epsilon: float
    delta: float
    lambda_upper: float
    k_required: int

    def to_dict(self):
        return {
            "schema": "nestmc/plan-v1",
            "epsilon": self.epsilon,
            "delta": self.delta,
            "lambda_upper": self.lambda_upper,
            "k_required": self.k_required,
        }


def plan_runs(epsilon: float, delta: float, lambda_upper: float) -> OmniPlan:
    """Runs needed for an (epsilon, delta) omnithermal approximation:
    k = ceil(2 lam (3/eps + 1/eps^2) ln(2/delta)), valid for eps in (0, 0.3)."""
    if not 0.0 < epsilon < PLAN_EPSILON_MAX:
        raise ValueError(f"epsilon must lie in (0, {PLAN_EPSILON_MAX})")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if lambda_upper <= 1.0:
        raise ValueError("lambda_upper must exceed 1")
    k = math.ceil(
        2.0 * lambda_upper * (3.0 / epsilon + epsilon**-2) * math.log(2.0 / delta)
    )
    return OmniPlan(epsilon, delta, lambda_upper, k)


class PartitionCurve:
    """Anchored curve Z_hat(beta) = exp(log_center_measure + N/k - N_P(beta_shell - beta)/k).

    Exact at the center by construction; at the shell it reproduces the
    pooled point estimate of mu(B).
    """

    def __init__(self, step: StepFunction, log_center_measure: float):
        self._step = step
        self._log_center = float(log_center_measure)

    @property
    def step_function(self) -> StepFunction:
        return self._step

    @property
    def log_center_measure(self) -> float:
        return self._log_center

    def log_value(self, beta):
        s = self._step
        return self._log_center + s.total_count / s.k - s.log_ratio_at(beta)

    def value(self, beta):
        return np.exp(self.log_value(beta))

    def __call__(self, beta):
        return self.value(beta)


def anchored_partition_curve(pool_or_step, log_center_measure: float) -> PartitionCurve:
    sf = pool_or_step if isinstance(pool_or_step, StepFunction) else StepFunction(pool_or_step)
    return PartitionCurve(sf, log_center_measure)


def evidence_integral(
    curve: PartitionCurve,
    prior,
    observed_h: float,
    b_max: float,
    step: float,
) -> dict:
    """Composite-trapezoid integral of prior(b) * exp(-b * observed_h) / Z_hat(b)
    over [0, b_max].

    The likelihood exponent carries the Gibbs sign convention: larger
    observed energy means smaller likelihood at high b.
    """
    sf = curve.step_function
    if b_max > sf.beta_shell or b_max < sf.beta_center:
        raise ValueError("b_max outside the curve domain")
    if step <= 0:
        raise ValueError("quadrature step must be positive")
    n = max(int(math.ceil(b_max / step)), 1)
    grid = np.linspace(0.0, b_max, n + 1)
    integrand = prior(grid) * np.exp(-grid * observed_h - curve.log_value(grid))
    value = float(np.trapezoid(integrand, grid))
    return {"value": value, "n_points": int(grid.size), "step": float(grid[1] - grid[0])}


def curve_to_csv(obj, path) -> None:
    """Staircase export at the breakpoints (plus both endpoints).

    Columns: beta, t, N_P, estimate, ln_estimate.  For an anchored curve the
    estimate columns hold Z_hat; for a bare step function they hold the
    shell-to-A(beta) ratio estimate.
    """
    if isinstance(obj, PartitionCurve):
        sf = obj.step_function
        log_at = obj.log_value
    else:
        sf = obj
        log_at = sf.log_ratio_at
    betas = np.concatenate(
        ([sf.beta_shell], sf.beta_shell - sf._jumps, [sf.beta_center])
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "t", "N_P", "estimate", "ln_estimate"])
        for b in betas:
            t = sf.beta_shell - b
            ln_est = float(np.asarray(log_at(b)))
            writer.writerow(
                [
                    repr(float(b)),
                    repr(float(t)),
                    int(sf.count_at(t)),
                    repr(float(math.exp(ln_est))),
                    repr(ln_est),
                ]
            )
