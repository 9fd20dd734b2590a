"""Equilibria, deviation models, and inefficiency bounds for nonatomic
congestion games.

The package models games where a continuum of players routes demand over
enumerated strategies (paths in a network, bases of a matroid, or arbitrary
resource subsets).  It computes equilibrium flows, verifies approximate and
bounded-deviation equilibria for populations with heterogeneous
sensitivities, evaluates closed-form bounds on how much such relaxed
equilibria can cost relative to exact ones, and generates the instance
families for which those bounds are tight or unbounded.
"""

from .bounds import (
    BoundValue,
    DensityFn,
    abel_sum_bound,
    braess_sup,
    discretize_density,
    dr_bound_continuous,
    dr_bound_discrete,
    matroid_dr_bound,
    matroid_sr_lower,
    sr_bound_continuous,
    sr_bound_discrete,
    stability_upper,
)
from .core import (
    Commodity,
    DeviationProfile,
    Flow,
    GameInstance,
    NetworkAnnotation,
    Resource,
    SensitivityProfile,
    path_latency,
    social_cost,
    strategy_latencies,
    validate_instance,
)
from .equilibria import (
    EquilibriumCertificate,
    RatioReport,
    ViolationRecord,
    beckmann_potential,
    compute_nash_flow,
    deviations_from_approx,
    empirical_ratio,
    heterogeneous_parallel_equilibrium,
    relative_duality_gap,
    verify_approx_nash,
    verify_deviated_nash,
    verify_deviation_implies_approx,
    worst_approx_search,
)
from .errors import (
    ConvergenceError,
    InputError,
    InvariantError,
    RefusalError,
    WardropError,
)
from .graphs import (
    AlternatingPath,
    SPTree,
    braess_strategies,
    build_braess_graph,
    compute_alternating_path,
    enumerate_st_paths,
    find_z_dominant_path,
    gen_braess_subcritical,
    gen_braess_supercritical,
    gen_parallel_sr,
    gen_random_sp,
    gen_two_arc_dr,
    is_series_parallel,
)
from .jsonio import (
    dumps_canonical,
    flow_from_obj,
    flow_to_obj,
    instance_from_obj,
    instance_to_obj,
    read_flow,
    read_instance,
    write_flow,
    write_instance,
)
from .latency import DeviationFn, LatencyFn
from .matroid import (
    ExchangeClaimsReport,
    UniformMatroidGame,
    check_matroid_exchange_claims,
    gen_matroid_unbounded,
    matroid_nash_flow,
    verify_matroid_deviated,
)
from .tolerances import TAU_ABS, TAU_REL_DEFAULT, tau_rel

__version__ = "0.1.0"

__all__ = [
    "AlternatingPath",
    "BoundValue",
    "Commodity",
    "ConvergenceError",
    "DensityFn",
    "DeviationFn",
    "DeviationProfile",
    "EquilibriumCertificate",
    "ExchangeClaimsReport",
    "Flow",
    "GameInstance",
    "InputError",
    "InvariantError",
    "LatencyFn",
    "NetworkAnnotation",
    "RatioReport",
    "RefusalError",
    "Resource",
    "SPTree",
    "SensitivityProfile",
    "TAU_ABS",
    "TAU_REL_DEFAULT",
    "UniformMatroidGame",
    "ViolationRecord",
    "WardropError",
    "abel_sum_bound",
    "beckmann_potential",
    "braess_strategies",
    "braess_sup",
    "build_braess_graph",
    "check_matroid_exchange_claims",
    "compute_alternating_path",
    "compute_nash_flow",
    "deviations_from_approx",
    "discretize_density",
    "dr_bound_continuous",
    "dr_bound_discrete",
    "dumps_canonical",
    "empirical_ratio",
    "enumerate_st_paths",
    "find_z_dominant_path",
    "flow_from_obj",
    "flow_to_obj",
    "gen_braess_subcritical",
    "gen_braess_supercritical",
    "gen_matroid_unbounded",
    "gen_parallel_sr",
    "gen_random_sp",
    "gen_two_arc_dr",
    "heterogeneous_parallel_equilibrium",
    "instance_from_obj",
    "instance_to_obj",
    "is_series_parallel",
    "matroid_dr_bound",
    "matroid_nash_flow",
    "matroid_sr_lower",
    "path_latency",
    "read_flow",
    "read_instance",
    "relative_duality_gap",
    "social_cost",
    "sr_bound_continuous",
    "sr_bound_discrete",
    "stability_upper",
    "strategy_latencies",
    "tau_rel",
    "validate_instance",
    "verify_approx_nash",
    "verify_deviated_nash",
    "verify_deviation_implies_approx",
    "verify_matroid_deviated",
    "worst_approx_search",
]
