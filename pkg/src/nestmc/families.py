"""Nested-set families consumed by the shrinking-run engine.

A family is a monotone collection of sets ``A(beta)`` between a *center*
``A(beta_center)`` and a *shell* ``A(beta_shell)``, together with the ability
to sample the underlying measure restricted to ``A(beta)`` and report the
smallest set containing the sampled point.
"""

from abc import ABC, abstractmethod

import numpy as np

from .errors import OracleUnavailableError

__all__ = ["NestedFamily", "ExpIntervalFamily", "open_unit_uniform"]


def open_unit_uniform(rng: np.random.Generator) -> float:
    """Uniform draw from the open interval (0, 1).

    Both endpoints are excluded so that log transforms and strict-shrink
    arguments hold with probability 1 rather than almost surely.
    """
    while True:
        u = rng.random()
        if 0.0 < u < 1.0:
            return u


class NestedFamily(ABC):
    """Monotone family {A(beta)} with a conditional sampler.

    Subclasses set ``beta_shell`` and ``beta_center`` (with
    ``beta_center < beta_shell``) and implement :meth:`draw`.  Instances must
    be immutable after construction so they can be shared read-only across
    concurrent runs; all randomness flows through the ``rng`` argument.
    """

    beta_shell: float
    beta_center: float

    @abstractmethod
    def draw(self, beta: float, rng: np.random.Generator):
        """Sample the measure restricted to A(beta).

        Returns ``(point, beta_next)`` where ``beta_next`` is the infimum of
        all ``b`` with ``point in A(b)``.  For an exact sampler,
        ``beta_next < beta`` with probability 1.
        """

    def log_measure(self, beta: float) -> float:
        """Analytic oracle for ln mu(A(beta)), where available.

        Only test families carry this; the default raises.
        """
        raise OracleUnavailableError(
            f"{type(self).__name__} has no analytic log-measure oracle"
        )

    @property
    def has_log_measure(self) -> bool:
        try:
            self.log_measure(self.beta_shell)
        except OracleUnavailableError:
            return False
        return True

    @property
    def lambda_at_least_one(self) -> bool:
        """Metadata flag: the caller asserts ln(mu(B)/mu(B')) >= 1.

        Cannot be verified at runtime in general; the two-phase scheme
        relies on it.  Subclasses with an oracle override this.
        """
        return False

    def log_ratio_span(self) -> float:
        """ln(mu(B)/mu(B')) from the oracle, where available."""
        return self.log_measure(self.beta_shell) - self.log_measure(self.beta_center)


class ExpIntervalFamily(NestedFamily):
    """A(beta) = [0, e^beta] with Lebesgue measure: the analytic test family.

    ``ln mu(A(beta)) = beta`` exactly, so the log-ratio is
    ``beta_shell - beta_center`` and every distributional claim about the
    engine can be checked in closed form.
    """

    def __init__(self, beta_shell: float = 0.0, beta_center: float = -1.0):
        if not beta_center < beta_shell:
            if beta_center == beta_shell:
                # Degenerate center-equals-shell family is allowed: every
                # first draw already lies in the center.
                pass
            else:
                raise ValueError("beta_center must not exceed beta_shell")
        self.beta_shell = float(beta_shell)
        self.beta_center = float(beta_center)

    def draw(self, beta, rng):
        u = open_unit_uniform(rng)
        beta_next = beta + np.log(u)
        point = float(np.exp(beta_next))
        return point, beta_next

    def log_measure(self, beta):
        return float(beta)

    @property
    def lambda_at_least_one(self):
        return (self.beta_shell - self.beta_center) >= 1.0
