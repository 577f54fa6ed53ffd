"""Gaussian free field extremes on regular trees and random regular graphs.

Thin wrapper over the compiled core. All randomness flows from explicit
(seed, stream) pairs, so every result here is reproducible bit for bit.
"""

from ._core import (
    Graph,
    GffxError,
    bivariate_bound,
    comparison_sum_tree,
    complete_graph_k4,
    default_config,
    extract_points,
    generate_graph,
    green_matrix,
    gumbel_cdf,
    h_function,
    heat_kernel_deviation,
    petersen_graph,
    rescaling_constants,
    run_comparison_suite,
    run_pipeline,
    sample_graph,
    sample_iid,
    sample_tree,
    tree_green,
    vertex_census,
)

__all__ = [
    "Graph",
    "GffxError",
    "bivariate_bound",
    "comparison_sum_tree",
    "complete_graph_k4",
    "default_config",
    "extract_points",
    "generate_graph",
    "green_matrix",
    "gumbel_cdf",
    "h_function",
    "heat_kernel_deviation",
    "petersen_graph",
    "rescaling_constants",
    "run_comparison_suite",
    "run_pipeline",
    "sample_graph",
    "sample_iid",
    "sample_tree",
    "tree_green",
    "vertex_census",
]

__version__ = "0.1.0"
