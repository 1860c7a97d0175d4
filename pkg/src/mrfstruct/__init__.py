"""Structure learning for bounded-degree Markov random fields.

Submodules: ``model`` (graphs, potentials, builders), ``oracle`` (exact
enumeration and condition verification), ``sampler`` (exact/Gibbs samplers,
noise), ``estimator`` (subset-probability queries), ``reconstruct``
(neighborhood tests and calculators), ``cli`` (command-line surface).

The hot kernels run through a compiled extension when available; see
``mrfstruct.kernels.BACKEND``.
"""
from .estimator import Estimator
from .kernels import BACKEND, HAVE_EXTENSION
from .model import (Graph, Model, Potential, cube_graph, cycle_graph,
                    ising_on_graph, load_model, new_ising, path_graph,
                    random_bounded_graph, random_ising, save_model, validate,
                    xor_triple)
from .oracle import (ConditionReport, DistTable, conditional,
                     correlation_distance, hidden_condition_bounds,
                     ising_condition_bounds, joint_distribution, marginal,
                     marginalize, markov_residual_ctp, nonid_jacobian_det,
                     nonid_map, robust_ctp_thresholds, soft_constraint_feasible,
                     verify_ctp_conditions, verify_ctp_conditions_dist,
                     verify_general_conditions, verify_general_conditions_dist,
                     verify_hidden_conditions, verify_hidden_conditions_dist)
from .reconstruct import (ReconConfig, ReconResult, error_lower_bound,
                          graph_count_lower_bound, neighborhood_ctp,
                          neighborhood_general, neighborhood_score,
                          reconstruct_ctp, reconstruct_decay,
                          reconstruct_general, reconstruct_with_hidden,
                          recover_hidden, required_samples_ctp,
                          required_samples_general)
from .sampler import (NoiseChannel, SampleMatrix, apply_noise,
                      channel_compose_exact, gibbs_sample, load_samples_csv,
                      restrict_sites, sample_exact, save_samples_csv)

__version__ = "0.1.0"
