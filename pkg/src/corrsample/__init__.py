"""Correlated sampling protocols, constrained agreement oracles and Monte Carlo harnesses."""

from .core import (
    DiscreteDistribution,
    SubsetPair,
    Universe,
    dp_lower_bound,
    finite_dp_optimum,
    flat_tv_distance,
    holenstein_bound,
    tv_distance,
)
from .errors import CorrSampleError, InvalidInputError, InvariantViolation, ResourceLimitError

__all__ = [
    "CorrSampleError",
    "DiscreteDistribution",
    "InvalidInputError",
    "InvariantViolation",
    "ResourceLimitError",
    "SubsetPair",
    "Universe",
    "dp_lower_bound",
    "finite_dp_optimum",
    "flat_tv_distance",
    "holenstein_bound",
    "tv_distance",
]
