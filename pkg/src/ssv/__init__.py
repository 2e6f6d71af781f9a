"""Structured singular value analysis for small dense matrices.

Computes the convex D-scaling upper bound nu, decides equality with the
structured singular value mu by constructing a worst-case perturbation,
and ships the known counterexample matrices where the equality fails.
"""

from .certificates import (EqualityReport, EtaCertificate, Perturbation,
                           PSet, TopSvd, build_pset, check_equality,
                           check_optimal_scaling, delta_from_eta, find_eta,
                           mu_lower_search, real_perturbation_exists,
                           top_svd)
from .lowrank import (FeasibilityResult, RankBound, find_psd_orthogonal,
                      pd_intersection, rank_bound, rank_reduce)
from .scaling import (NuResult, Scaling, apply_scaling, nu_upper, sigma_max)
from .structure import (Block, BlockStructure, Problem, ValidationError,
                        block_rows, full_blocks, parse_problem,
                        serialize_problem)

__version__ = "0.1.0"

__all__ = [
    "Block", "BlockStructure", "EqualityReport", "EtaCertificate",
    "FeasibilityResult", "NuResult", "Perturbation", "Problem", "PSet",
    "RankBound", "Scaling", "TopSvd", "ValidationError", "apply_scaling",
    "block_rows", "build_pset", "check_equality", "check_optimal_scaling",
    "delta_from_eta", "find_eta", "find_psd_orthogonal", "full_blocks",
    "mu_lower_search", "nu_upper", "parse_problem", "pd_intersection",
    "rank_bound", "rank_reduce", "real_perturbation_exists",
    "serialize_problem", "sigma_max", "top_svd",
]
