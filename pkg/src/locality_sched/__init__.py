"""Discrete-time simulation of data-locality-aware routing and scheduling.

Covers the capacity-region LP, JSQ-MaxWeight (two- and three-level),
Pandas, weighted-workload routing with priority scheduling, the
generalized c-mu rule, an LP-split baseline and FIFO.
"""
from .capacity import (
    ArrivalVector,
    Decomposition,
    ServiceModel,
    is_in_capacity_region,
    max_stable_scaling,
    solve_capacity_lp,
)
from .config import ExperimentConfig, parse_config
from .experiment import capacity_report, run_sweep
from .metrics import MetricsBundle, lyapunov_value, stability_estimate
from .policies import Layout, make_policy
from .simulation import Simulation, run_simulation, sample_service_completion
from .topology import (
    ClusterTopology,
    LocalityClass,
    TaskType,
    classify_locality,
    enumerate_task_types,
    validate_topology,
)

__all__ = [
    "ArrivalVector",
    "ClusterTopology",
    "Decomposition",
    "ExperimentConfig",
    "Layout",
    "LocalityClass",
    "MetricsBundle",
    "ServiceModel",
    "Simulation",
    "TaskType",
    "capacity_report",
    "classify_locality",
    "enumerate_task_types",
    "is_in_capacity_region",
    "lyapunov_value",
    "make_policy",
    "max_stable_scaling",
    "parse_config",
    "run_simulation",
    "run_sweep",
    "sample_service_completion",
    "solve_capacity_lp",
    "stability_estimate",
    "validate_topology",
]
