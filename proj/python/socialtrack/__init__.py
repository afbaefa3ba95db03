"""Distributed tracking of a dynamic state over social networks."""

from ._core import (
    CommMatrix,
    EstimatorSpec,
    Graph,
    InstabilityError,
    ModelParams,
    NumericalError,
    SocialTrackError,
    ValidationError,
    connectivity_ratio,
    kalman_steady_state,
    msd_bound_reference,
    msd_closed_form,
    msd_limit_named,
    optimal_alpha_for_stability,
    optimal_edge_search,
    optimize_alpha,
    parse_scenario,
    run_subcommand,
    run_trials,
    stability_radius,
    steady_state_sigma,
    subcommands,
    unbiasedness_bound,
    verify_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
