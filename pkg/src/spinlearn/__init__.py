"""Random spin models: generation, sampling, and recovery from samples."""

__version__ = "0.1.0"

from .errors import (SpinLearnError, ConfigError, DimensionError, BudgetError,
                     InvariantError)
from .poly import (Polynomial, IsingModel, as_monomial, eval_poly,
                   partial_derivative, flip_polynomial, maximal_monomials,
                   l1_norm, width, l1_distance, linf_distance,
                   ising_to_poly, poly_to_ising, find_boost_witness)
from .graphs import (Graph, complete_graph, path_graph, grid_graph,
                     regular_graph, graph_from_edge_list, parse_graph_spec)
from .generate import (EnsembleSpec, gen_model, gen_sk, gen_random_ising,
                       gen_random_mrf, gen_pure_p_spin, mrf_coeff_scale)
from .sampler import (GibbsTable, SampleBatch, enumerate_distribution,
                      all_state_energies, exact_sample, glauber_chain,
                      glauber_transition_matrix, conditional_prob,
                      save_batch, load_batch, sample_batch_from_model,
                      state_to_configs, config_to_state, ENUM_CAP)
from .sparsitron import (SparsitronConfig, SparsitronResult, sparsitron,
                         sigmoid, anti_lipschitz_gap, required_samples)
from .recovery import (RecoveryConfig, RecoveryReport, FeatureMap,
                       expand_features, recover_ising, recover_mrf,
                       learn_structure, learn_structure_report,
                       exact_recover, exact_recover_report, round_to_grid,
                       structure_from_poly)
from .diagnostics import (SmoothnessReport, MgfReport, membership_in_E,
                          smoothness_fraction, mgf_flip_estimate,
                          tail_fraction, anticoncentration_fraction,
                          kl_divergence, tv_distance, identifiability_margin)

__all__ = [
    "__version__",
    "SpinLearnError", "ConfigError", "DimensionError", "BudgetError", "InvariantError",
    "Polynomial", "IsingModel", "as_monomial", "eval_poly", "partial_derivative",
    "flip_polynomial", "maximal_monomials", "l1_norm", "width", "l1_distance",
    "linf_distance", "ising_to_poly", "poly_to_ising", "find_boost_witness",
    "Graph", "complete_graph", "path_graph", "grid_graph", "regular_graph",
    "graph_from_edge_list", "parse_graph_spec",
    "EnsembleSpec", "gen_model", "gen_sk", "gen_random_ising", "gen_random_mrf",
    "gen_pure_p_spin", "mrf_coeff_scale",
    "GibbsTable", "SampleBatch", "enumerate_distribution", "all_state_energies",
    "exact_sample", "glauber_chain", "glauber_transition_matrix",
    "conditional_prob", "save_batch", "load_batch", "sample_batch_from_model",
    "state_to_configs", "config_to_state", "ENUM_CAP",
    "SparsitronConfig", "SparsitronResult", "sparsitron", "sigmoid",
    "anti_lipschitz_gap", "required_samples",
    "RecoveryConfig", "RecoveryReport", "FeatureMap", "expand_features",
    "recover_ising", "recover_mrf", "learn_structure", "learn_structure_report",
    "exact_recover", "exact_recover_report", "round_to_grid", "structure_from_poly",
    "SmoothnessReport", "MgfReport", "membership_in_E", "smoothness_fraction",
    "mgf_flip_estimate", "tail_fraction", "anticoncentration_fraction",
    "kl_divergence", "tv_distance", "identifiability_margin",
]
