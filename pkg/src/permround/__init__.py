"""Gaussian randomized rounding of orthogonal matrices to permutation matrices."""

from .core import (
    DimensionError,
    MatrixFormatError,
    NotOrthogonalError,
    Permutation,
    apply_perm,
    as_orthogonal,
    as_square,
    column_norms,
    compose,
    norm_frobenius,
    norm_inf,
    perm_to_matrix,
)
from .gaussian import (
    RandomStream,
    coordinate_tail_bound,
    gaussian_cdf,
    gaussian_icdf,
    haar_orthogonal,
    norm_concentration_bound,
    sample_gaussian_vector,
)
from .rounding import (
    EmpiricalDistribution,
    ResidualMoments,
    RoundingSample,
    TiedCoordinatesError,
    estimate_distribution,
    estimate_residual_moments,
    residual,
    round_at,
    sample_rounding,
)
from .nconv import NconvApprox, approximate, error_report

__version__ = "0.1.0"

__all__ = [
    "apply_perm",
    "approximate",
    "as_orthogonal",
    "as_square",
    "column_norms",
    "compose",
    "coordinate_tail_bound",
    "DimensionError",
    "EmpiricalDistribution",
    "error_report",
    "estimate_distribution",
    "estimate_residual_moments",
    "gaussian_cdf",
    "gaussian_icdf",
    "haar_orthogonal",
    "MatrixFormatError",
    "NconvApprox",
    "norm_concentration_bound",
    "norm_frobenius",
    "norm_inf",
    "NotOrthogonalError",
    "perm_to_matrix",
    "Permutation",
    "RandomStream",
    "residual",
    "ResidualMoments",
    "round_at",
    "RoundingSample",
    "sample_gaussian_vector",
    "sample_rounding",
    "TiedCoordinatesError",
]
