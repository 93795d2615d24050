"""Exception types shared across the package."""


class NestmcError(Exception):
    """Base class for all package-specific errors."""


class CorruptSamplerError(NestmcError):
    """A conditional sampler produced a non-shrinking step (beta_next >= beta)."""


class RunawayRunError(NestmcError):
    """A single run exceeded its iteration cap without reaching the center."""


class DegenerateIntervalError(NestmcError):
    """Normal-approximation interval requested with zero counts.

    Use :func:`nestmc.engine.exact_poisson_ci` instead, which is defined at N = 0.
    """


class OracleUnavailableError(NestmcError):
    """An analytic log-measure oracle was required but the family has none."""


class EnumerationCapError(NestmcError):
    """Exact enumeration requested on a graph above the vertex cap."""
