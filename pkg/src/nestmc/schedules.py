"""Well-balanced cooling schedules from pooled order statistics.

Taking every k-th order statistic of a rate-k pooled process makes each full
rung's log-measure ratio Gamma(k, 1/k) distributed: mean 1, sd 1/sqrt(k),
i.e. consecutive measures shrink by close to a factor of e.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .engine import PooledProcess
from .errors import OracleUnavailableError

__all__ = ["CoolingSchedule", "ScheduleQuality", "build_schedule", "schedule_quality", "schedule_to_csv"]


@dataclass(frozen=True)
class CoolingSchedule:
    """Strictly descending parameter sequence pinned to shell and center."""

    alphas: np.ndarray = field(repr=False)
    k_used: int

    def __len__(self):
        return len(self.alphas)


@dataclass(frozen=True)
class ScheduleQuality:
    """Per-rung log-measure gaps.  Full rungs contain exactly k pooled points;
    the final (censored) rung to the center is excluded from the summary."""

    gaps: np.ndarray
    full_rung_gaps: np.ndarray
    mean: float
    sd: float


def build_schedule(pool: PooledProcess, k: int) -> CoolingSchedule:
    """Every k-th descending order statistic, endpoints pinned.

    Trailing remainder points (N mod k) are absorbed into the final rung so
    every interior rung spans exactly k points.  With k > N the schedule
    degenerates to the endpoints alone.
    """
    if k <= 0:
        raise ValueError("k must be a positive integer")
    pts = pool.points  # already sorted descending
    picks = pts[k - 1 :: k] if pts.size >= k else np.empty(0)
    alphas = [pool.beta_shell]
    for a in picks:
        if pool.beta_center < a < pool.beta_shell and a != alphas[-1]:
            alphas.append(float(a))
    if alphas[-1] != pool.beta_center:
        alphas.append(pool.beta_center)
    return CoolingSchedule(np.array(alphas), k_used=k)


def schedule_quality(schedule: CoolingSchedule, log_measure) -> ScheduleQuality:
    """Log-measure gap per rung plus mean/sd over the full rungs."""
    if log_measure is None:
        raise OracleUnavailableError("schedule quality needs a log-measure oracle")
    ts = np.array([log_measure(a) for a in schedule.alphas])
    gaps = -np.diff(ts)
    full = gaps[:-1] if gaps.size > 1 else np.empty(0)
    mean = float(np.mean(full)) if full.size else float("nan")
    sd = float(np.std(full, ddof=1)) if full.size > 1 else float("nan")
    return ScheduleQuality(gaps, full, mean, sd)


def schedule_to_csv(schedule: CoolingSchedule, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "alpha"])
        for i, a in enumerate(schedule.alphas):
            writer.writerow([i, repr(float(a))])
