"""Percolation cluster isoperimetry and random walk experiments."""

from ._cpl import (
    Config,
    ContractViolation,
    ParameterError,
    SolverError,
    StageError,
    UsageError,
    ball_component,
    chemical_distance,
    edge_boundary,
    estimate_corrector,
    format_spec,
    heuristic_profile,
    largest_component,
    return_probability,
    run_experiment,
    sample,
    simulate_walk,
    spec_keys,
)

__all__ = [
    "Config",
    "ContractViolation",
    "ParameterError",
    "SolverError",
    "StageError",
    "UsageError",
    "ball_component",
    "chemical_distance",
    "edge_boundary",
    "estimate_corrector",
    "format_spec",
    "heuristic_profile",
    "largest_component",
    "return_probability",
    "run_experiment",
    "sample",
    "simulate_walk",
    "spec_keys",
]
