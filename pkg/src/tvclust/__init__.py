"""Balanced multiclass clustering by total variation minimization.

Partitions a weighted similarity graph into R classes by minimizing the
sum over classes of TV(f_r) / B(f_r), the graph total variation of each
soft indicator divided by an asymmetric-median balance term. The relaxed
problem is solved by proximal splitting with an accelerated primal-dual
inner loop and tends to terminate at near-indicator solutions, so the
final rounding step is essentially free.

The library works on any SimilarityGraph; build one from points with
build_knn_graph or load one with read_edge_list / read_matrix_market.
See run_protocol for the multi-trial driver the command line uses.
"""

from .graph import (SimilarityGraph, build_knn_graph, gradient_operator,
                    tv_norm, cut_value, operator_norm, laplacian_matrix,
                    laplacian_apply, largest_component_fraction,
                    read_edge_list, write_edge_list, read_matrix_market,
                    read_feature_csv)
from .balance import (DegenerateClusterError, default_lambda, lambda_median,
                      asym_l1_norm, balance_term, balance_terms,
                      balance_subgradient,
                      median_counts, cluster_energy, discrete_energy)
from .projection import (LabelConstraint, read_label_file, project_rows,
                         project_simplex_row, project_constraint)
from .solver import (SolverConfig, SolverState, IterationRecord,
                     refresh_cluster_stats, outer_subgradient_step,
                     inner_primal_dual_iterate, descent_check, run,
                     prox_tv_simplex)
from .init import (random_simplex_init, pick_seeds, seeded_propagation_init,
                   load_init_from_file)
from .metrics import (assign_clusters, sharpness, purity,
                      count_empty_classes, select_best_trial)
from .cli import run_protocol

__version__ = "0.1.0"

__all__ = [
    "SimilarityGraph", "build_knn_graph", "gradient_operator", "tv_norm",
    "cut_value", "operator_norm", "laplacian_matrix", "laplacian_apply",
    "largest_component_fraction", "read_edge_list", "write_edge_list",
    "read_matrix_market", "read_feature_csv",
    "DegenerateClusterError", "default_lambda", "lambda_median",
    "asym_l1_norm", "balance_term", "balance_terms", "balance_subgradient",
    "median_counts", "cluster_energy", "discrete_energy",
    "LabelConstraint", "read_label_file", "project_rows",
    "project_simplex_row", "project_constraint",
    "SolverConfig", "SolverState", "IterationRecord",
    "refresh_cluster_stats", "outer_subgradient_step",
    "inner_primal_dual_iterate", "descent_check", "run", "prox_tv_simplex",
    "random_simplex_init", "pick_seeds", "seeded_propagation_init",
    "load_init_from_file",
    "assign_clusters", "sharpness", "purity", "count_empty_classes",
    "select_best_trial",
    "run_protocol",
    "__version__",
]
