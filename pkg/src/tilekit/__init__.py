"""Decompose matrices of per-element likelihoods into non-overlapping tiles."""

from .core import (
    LikelihoodField,
    SolverParams,
    Tiling,
    TilingError,
    binary_likelihood_field,
    check_nonoverlap,
    gaussian_likelihood_field,
    labels_from_tiling,
    log_joint_score,
    mdl_cost,
    select_tile_count,
)
from .evaluate import (
    TileMatching,
    brute_force_map,
    classification_error,
    greedy_match,
    hamming,
    relative_cost,
)
from .icm import run_icm
from .pca import run_pca_tiles
from .sumprod import run_sum_product, sum_product
from .synth import GroundTruth, add_gaussian_noise, generate_tiling, make_instance, render_matrix

__all__ = [
    "LikelihoodField",
    "SolverParams",
    "Tiling",
    "TilingError",
    "TileMatching",
    "GroundTruth",
    "binary_likelihood_field",
    "gaussian_likelihood_field",
    "check_nonoverlap",
    "labels_from_tiling",
    "log_joint_score",
    "mdl_cost",
    "select_tile_count",
    "brute_force_map",
    "classification_error",
    "greedy_match",
    "hamming",
    "relative_cost",
    "run_icm",
    "run_pca_tiles",
    "run_sum_product",
    "sum_product",
    "generate_tiling",
    "render_matrix",
    "add_gaussian_noise",
    "make_instance",
]

__version__ = "0.1.0"
