"""Scikit-learn-style front ends.

Thin estimator classes over the functional core so the algorithms compose
with the usual ``get_params``/``set_params`` tooling.  ``fit`` takes a
:class:`~nestmc.families.NestedFamily` instead of a data matrix: the family
*is* the data source here.
"""

import math

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import bounds, engine, omnithermal, schedules

__all__ = [
    "RatioEstimator",
    "TwoPhaseRatioEstimator",
    "OmnithermalApproximator",
    "CoolingScheduleBuilder",
]


def _check_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted; call fit(family)")


class RatioEstimator(BaseEstimator):
    """Pooled-run estimator of ln(mu(B)/mu(B')) and the ratio itself."""

    def __init__(self, k=100, random_state=0, n_jobs=1, max_steps=engine.DEFAULT_MAX_STEPS):
        self.k = k
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.max_steps = max_steps

    def fit(self, family, y=None):
        self.traces_ = engine.run_batch(
            family, self.k, self.random_state, n_jobs=self.n_jobs, max_steps=self.max_steps
        )
        self.pool_ = engine.pool_runs(self.traces_, family)
        self.result_ = engine.estimate_log_ratio(self.pool_)
        self.log_ratio_ = self.result_.estimate
        self.ratio_ = math.exp(self.log_ratio_)
        return self

    def confidence_interval(self, alpha=0.05, method="normal"):
        _check_fitted(self, "pool_")
        if method == "normal":
            return engine.normal_ci(self.pool_, alpha)
        if method == "exact":
            return engine.exact_poisson_ci(self.pool_, alpha)
        raise ValueError(f"unknown method {method!r}")


class TwoPhaseRatioEstimator(BaseEstimator):
    """(epsilon, delta) relative-error estimator of the ratio mu(B)/mu(B').

    Valid for ratios of at least e; smaller ratios belong to
    :func:`nestmc.bounds.ar_ratio_estimate`.
    """

    def __init__(self, epsilon=0.3, delta=0.1, random_state=0, n_jobs=1):
        self.epsilon = epsilon
        self.delta = delta
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, family, y=None):
        config = bounds.RasConfig(self.epsilon, self.delta)
        self.result_ = bounds.run_ras(
            family, config, self.random_state, n_jobs=self.n_jobs
        )
        self.ratio_ = self.result_.estimate
        return self

    def predict(self):
        _check_fitted(self, "result_")
        return self.ratio_


class OmnithermalApproximator(BaseEstimator):
    """Step-function estimate of mu(B)/mu(A(beta)) for all beta at once."""

    def __init__(self, k=100, random_state=0, n_jobs=1):
        self.k = k
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, family, y=None):
        traces = engine.run_batch(family, self.k, self.random_state, n_jobs=self.n_jobs)
        self.pool_ = engine.pool_runs(traces, family)
        self.step_function_ = omnithermal.counting_process(self.pool_)
        return self

    def predict(self, betas):
        """Ratio estimates mu(B)/mu(A(beta)) at the query betas."""
        _check_fitted(self, "step_function_")
        return self.step_function_.ratio_at(betas)

    def partition_curve(self, log_center_measure):
        _check_fitted(self, "step_function_")
        return omnithermal.anchored_partition_curve(
            self.step_function_, log_center_measure
        )


class CoolingScheduleBuilder(BaseEstimator):
    """Well-balanced cooling schedule from pooled order statistics."""

    def __init__(self, k=100, rung_size=None, random_state=0, n_jobs=1):
        self.k = k
        self.rung_size = rung_size  # defaults to k: one rung per e-fold
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, family, y=None):
        traces = engine.run_batch(family, self.k, self.random_state, n_jobs=self.n_jobs)
        self.pool_ = engine.pool_runs(traces, family)
        rung = self.rung_size if self.rung_size is not None else self.k
        self.schedule_ = schedules.build_schedule(self.pool_, rung)
        self.alphas_ = self.schedule_.alphas
        return self
