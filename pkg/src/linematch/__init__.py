"""Online metric bipartite matching on a line: engine, analysis, verification."""

from .core import (
    Instance,
    InstanceError,
    Scalar,
    format_scalar,
    load_instance,
    matching_cost,
    parse_scalar,
    save_instance,
    validate_instance,
)
from .engine import OnlineMatcher, RunTrace, run_online, t_net_cost
from .offline import (
    exact_min_cost_matching,
    interval_decomposition_cost,
    optimal_cost,
    optimal_line_matching,
)

__all__ = [
    "Instance",
    "InstanceError",
    "OnlineMatcher",
    "RunTrace",
    "Scalar",
    "exact_min_cost_matching",
    "format_scalar",
    "interval_decomposition_cost",
    "load_instance",
    "matching_cost",
    "optimal_cost",
    "optimal_line_matching",
    "parse_scalar",
    "run_online",
    "save_instance",
    "t_net_cost",
    "validate_instance",
]
