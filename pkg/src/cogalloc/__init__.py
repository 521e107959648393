"""cogalloc: joint sensing design, user selection, and transmission-time
allocation for a price-based opportunistic cognitive radio network.

The library is organized around five layers:

- :mod:`cogalloc.sensing` — closed-form local/fused detection statistics.
- :mod:`cogalloc.economics` — rates, utilities, time bounds, frame budget.
- :mod:`cogalloc.allocator` — case classification, water-filling,
  elimination/exchange user selection at a fixed design.
- :mod:`cogalloc.optimizer` — the outer design grid search, the
  exhaustive oracle, the non-joint baseline, and the quasiconcavity probe.
- :mod:`cogalloc.simkit` — multi-frame Monte-Carlo traffic/delay simulation.

``cogalloc.cli`` exposes the same functionality as subcommands.
"""

from .allocator import (
    AllocationResult,
    CaseLabel,
    classify_case,
    exchange_search,
    greedy_topup,
    reduce_feasible_set,
    select_and_allocate,
    waterfill_allocate,
)
from .economics import (
    NEVER_PROFITABLE,
    SecondaryUser,
    SystemParams,
    TimeBounds,
    default_system_params,
    effective_rate,
    effective_time,
    fc_utility,
    rate_idle,
    rate_interfered,
    rate_interfered_quadrature,
    su_utility,
    time_bounds,
    time_lower_bound,
    time_upper_bound,
)
from .optimizer import (
    DesignGrid,
    HessianProbeConfig,
    NonJointOutcome,
    OptimizationOutcome,
    count_negative_utility,
    exhaustive_oracle,
    joint_optimize,
    nonjoint_baseline,
    quasiconcavity_probe,
)
from .sensing import (
    SensingDesign,
    SensingGeometry,
    global_pd,
    global_pfa,
    local_pd,
    min_active_users,
    q_function,
    q_inverse,
    threshold_from_pfa,
)
from .simkit import (
    DelayStats,
    FrameTrace,
    StreamFactory,
    TrafficModel,
    UserProfile,
    jain_index,
    monte_carlo_average,
    run_episode,
    sample_exponential_gain,
    sample_pareto_idle,
    step_frame,
)
from .units import db_to_linear, dbm_to_watts

__version__ = "0.1.0"

__all__ = [
    "AllocationResult",
    "CaseLabel",
    "DelayStats",
    "DesignGrid",
    "FrameTrace",
    "HessianProbeConfig",
    "NEVER_PROFITABLE",
    "NonJointOutcome",
    "OptimizationOutcome",
    "SecondaryUser",
    "SensingDesign",
    "SensingGeometry",
    "StreamFactory",
    "SystemParams",
    "TimeBounds",
    "TrafficModel",
    "UserProfile",
    "classify_case",
    "count_negative_utility",
    "db_to_linear",
    "dbm_to_watts",
    "default_system_params",
    "effective_rate",
    "effective_time",
    "exchange_search",
    "exhaustive_oracle",
    "fc_utility",
    "global_pd",
    "global_pfa",
    "greedy_topup",
    "jain_index",
    "joint_optimize",
    "local_pd",
    "min_active_users",
    "monte_carlo_average",
    "nonjoint_baseline",
    "q_function",
    "q_inverse",
    "quasiconcavity_probe",
    "rate_idle",
    "rate_interfered",
    "rate_interfered_quadrature",
    "reduce_feasible_set",
    "run_episode",
    "sample_exponential_gain",
    "sample_pareto_idle",
    "select_and_allocate",
    "step_frame",
    "su_utility",
    "threshold_from_pfa",
    "time_bounds",
    "time_lower_bound",
    "time_upper_bound",
    "waterfill_allocate",
]
