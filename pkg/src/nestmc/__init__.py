"""Monte Carlo estimation of measure ratios via randomly shrinking nested sets.

A single run resamples a monotone family of sets from its shell down to its
center; the number of interior steps is Poisson with mean
ln(mu(B)/mu(B')).  Pooled runs give point estimates, confidence intervals,
an (epsilon, delta) two-phase scheme, well-balanced cooling schedules, and a
step-function approximation valid at every parameter value simultaneously.
"""

from .bounds import (
    ArResult,
    RasConfig,
    RasResult,
    ar_ratio_estimate,
    phase1_k,
    phase2_k,
    poisson_tail_bound,
    run_ras,
)
from .diagnostics import (
    increment_independence_test,
    poisson_count_test,
    spacing_diagnostic,
    sup_deviation,
)
from .engine import (
    ConfidenceInterval,
    LogRatioEstimate,
    PooledProcess,
    RunTrace,
    estimate_log_ratio,
    exact_poisson_ci,
    normal_ci,
    pool_runs,
    rng_stream,
    run_batch,
    single_run,
)
from .errors import (
    CorruptSamplerError,
    DegenerateIntervalError,
    EnumerationCapError,
    NestmcError,
    OracleUnavailableError,
    RunawayRunError,
)
from .estimators import (
    CoolingScheduleBuilder,
    OmnithermalApproximator,
    RatioEstimator,
    TwoPhaseRatioEstimator,
)
from .families import ExpIntervalFamily, NestedFamily
from .ising import (
    GibbsFamily,
    LatticeGraph,
    brute_force_log_z,
    brute_force_z,
    exact_gibbs_sample,
    expected_run_cost,
    hamiltonian,
)
from .l1ball import (
    CenterEstimate,
    EvidenceEstimate,
    ExpL1BallFamily,
    beta_of_point,
    center_estimate,
    evidence_estimate,
    l1_ball_volume,
    sample_restricted,
)
from .omnithermal import (
    OmniPlan,
    PartitionCurve,
    StepFunction,
    anchored_partition_curve,
    counting_process,
    curve_to_csv,
    evidence_integral,
    omnithermal_estimate,
    plan_runs,
    sup_deviation_bound,
)
from .schedules import CoolingSchedule, build_schedule, schedule_quality, schedule_to_csv

__version__ = "0.1.0"
