"""Capacity analysis and simulation of queue networks with waiting-time erasures."""

from .capacity import (
    CapacityReport,
    RouteContribution,
    SojournLaw,
    hypoexp_expectation,
    jackson_capacity,
    laplace_exp_waiting,
    parallel_capacity,
    route_survival,
    single_queue_capacity,
    tandem_capacity,
)
from .errors import (
    FeedForwardError,
    InfeasibleError,
    InstabilityError,
    InsufficientDataError,
    QjnError,
    SingularTrafficError,
    SpecDomainError,
    SpecSchemaError,
    SpecSyntaxError,
    ToleranceError,
)
from .model import (
    DESTINATION,
    CallableErasure,
    ErasureModel,
    ExponentialErasure,
    NetworkSpec,
    NetworkType,
    Node,
    Route,
    Source,
    TableErasure,
    TrafficSolution,
    ValidationReport,
    enumerate_routes,
    is_feed_forward,
    parse_network,
    solve_traffic,
    spec_to_document,
    topological_order,
    validate,
    with_entry_split,
    with_erasure,
    with_node_mu,
    with_source_rate,
)
from .optimize import (
    Optimum,
    maximize_scalar,
    optimal_homogeneous_parallel,
    optimal_parallel_split,
    optimal_tandem_rate,
    series_invariance_check,
)
from .sim import (
    QubitRecord,
    RngPolicy,
    SimEstimate,
    SourceEstimate,
    Trace,
    departure_diagnostics,
    estimate_capacity,
    merge_estimates,
    simulate,
    write_trace_csv,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityReport",
    "RouteContribution",
    "SojournLaw",
    "hypoexp_expectation",
    "jackson_capacity",
    "laplace_exp_waiting",
    "parallel_capacity",
    "route_survival",
    "single_queue_capacity",
    "tandem_capacity",
    "FeedForwardError",
    "InfeasibleError",
    "InstabilityError",
    "InsufficientDataError",
    "QjnError",
    "SingularTrafficError",
    "SpecDomainError",
    "SpecSchemaError",
    "SpecSyntaxError",
    "ToleranceError",
    "DESTINATION",
    "CallableErasure",
    "ErasureModel",
    "ExponentialErasure",
    "NetworkSpec",
    "NetworkType",
    "Node",
    "Route",
    "Source",
    "TableErasure",
    "TrafficSolution",
    "ValidationReport",
    "enumerate_routes",
    "is_feed_forward",
    "parse_network",
    "solve_traffic",
    "spec_to_document",
    "topological_order",
    "validate",
    "with_entry_split",
    "with_erasure",
    "with_node_mu",
    "with_source_rate",
    "Optimum",
    "maximize_scalar",
    "optimal_homogeneous_parallel",
    "optimal_parallel_split",
    "optimal_tandem_rate",
    "series_invariance_check",
    "QubitRecord",
    "RngPolicy",
    "SimEstimate",
    "SourceEstimate",
    "Trace",
    "departure_diagnostics",
    "estimate_capacity",
    "merge_estimates",
    "simulate",
    "write_trace_csv",
    "__version__",
]
