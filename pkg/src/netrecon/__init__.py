"""Sparse network reconstruction by block-split reweighted lasso."""

from .errors import ReconstructionError
from .problem import (BlockPartition, Estimate, RegressionProblem, SolverConfig,
                      partition_columns, validate_problem)
from .reweight import estimate, reweighted_l2, reweighted_lasso

__version__ = "0.1.0"

__all__ = [
    "BlockPartition", "Estimate", "ReconstructionError", "RegressionProblem",
    "SolverConfig", "estimate", "partition_columns", "reweighted_l2",
    "reweighted_lasso", "validate_problem",
]
