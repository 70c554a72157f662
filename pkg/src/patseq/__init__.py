"""Subsequence-pattern densities in binary sequences.

Exact pattern counting and its algebraic identities, step measures as
limit objects, feasibility constants and extremal densities, entropy
maximizing limit shapes, Gibbs MCMC sampling, and deck optimization.
"""

from .deckopt import (DeckProblem, DeckResult, asymptotic_gap_report,
                      evaluate_arrangement, new_deck_order, optimize_deck)
from .feasibility import (CNumericError, FeasibilityInterval,
                          analytic_aux_measure, c_closed_form, c_numeric,
                          euler_lagrange_residual, extremal_density_1010,
                          feasible_interval, max_density_at_rho, xi_root)
from .heisenberg import (GeneratorSpec, first_row_equals_counts,
                         matrix_of_word, min_minor)
from .limitshape import (BoundaryShapeError, DensityTargets, ExpPolynomial,
                         InfeasibleExponentError, entropy, phi_forward,
                         phi_forward_checked, phi_jacobian,
                         reconstruct_density, solve_limit_shape)
from .measures import (DistributionFunction, StepMeasure,
                       density_by_quadrature, density_gradient,
                       density_of_measure, measure_of_word, moment,
                       moments_identity_check, wasserstein,
                       word_convergence_check, word_from_measure)
from .patterns import (IndependenceResult, RelationCheck,
                       block_counts_polynomial, check_relations, count_all,
                       count_pattern, density, expand_blocks,
                       independence_rank)
from .sampler import (CalibrationError, ChainStats, GibbsSpec,
                      calibrate_multipliers, mcmc_sample,
                      total_variation_check)
from .words import all_patterns, complement, random_word, reverse

__version__ = "0.1.0"
