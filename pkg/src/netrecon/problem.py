"""Regression problems, block partitions, solver configuration and results."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, NonFiniteError, PartitionError


@dataclass(frozen=True)
class RegressionProblem:
    """Stacked linear model ``y = A w + noise`` for a single node.

    ``A`` is ``M x N`` (one column per candidate function), ``y`` has
    length ``M`` and ``sigma2`` is the noise variance.
    """

    y: np.ndarray
    A: np.ndarray
    sigma2: float
    column_labels: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        if not self.column_labels and self.A.ndim == 2:
            labels = tuple(f"c{j}" for j in range(self.A.shape[1]))
            object.__setattr__(self, "column_labels", labels)
        else:
            object.__setattr__(self, "column_labels", tuple(self.column_labels))

    @property
    def M(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    def lambda_max(self) -> float:
        """``||A^T y||_inf``, the smallest penalty giving the all-zero lasso."""
        return float(np.max(np.abs(self.A.T @ self.y)))

    def restrict(self, columns) -> "RegressionProblem":
        columns = np.asarray(columns, dtype=int)
        labels = tuple(self.column_labels[j] for j in columns)
        return RegressionProblem(self.y, self.A[:, columns], self.sigma2, labels)


def validate_problem(p: RegressionProblem) -> RegressionProblem:
    """Check every :class:`RegressionProblem` invariant and return ``p`` unchanged."""
    A, y = p.A, p.y
    if A.ndim != 2:
        raise DimensionError("A", f"expected a 2-D matrix, got {A.ndim} dimensions")
    M, N = A.shape
    if M < 1 or N < 1:
        raise DimensionError("A", f"shape {A.shape} has an empty dimension")
    if y.ndim != 1 or y.shape[0] != M:
        raise DimensionError("y", f"length {y.shape} does not match A with {M} rows")
    if len(p.column_labels) != N:
        raise DimensionError(
            "column_labels", f"{len(p.column_labels)} labels for {N} columns")
    if len(set(p.column_labels)) != N:
        raise DimensionError("column_labels", "labels are not distinct")
    if not np.isfinite(p.sigma2) or p.sigma2 < 0:
        raise DimensionError("sigma2", f"must be finite and nonnegative, got {p.sigma2}")
    bad = np.argwhere(~np.isfinite(A))
    if bad.size:
        raise NonFiniteError("A", tuple(int(i) for i in bad[0]))
    bad = np.flatnonzero(~np.isfinite(y))
    if bad.size:
        raise NonFiniteError("y", int(bad[0]))
    return p


@dataclass(frozen=True)
class BlockPartition:
    """Ordered contiguous column ranges; ``block_ranges[i] = (start, stop)``, half-open."""

    block_ranges: tuple

    def __post_init__(self):
        ranges = tuple((int(a), int(b)) for a, b in self.block_ranges)
        object.__setattr__(self, "block_ranges", ranges)
        if not ranges:
            raise PartitionError("a partition needs at least one block")
        expected = 0
        for a, b in ranges:
            if a != expected or b <= a:
                raise PartitionError(f"block ({a}, {b}) breaks contiguity at column {expected}")
            expected = b

    @property
    def P(self) -> int:
        return len(self.block_ranges)

    @property
    def N(self) -> int:
        return self.block_ranges[-1][1]

    def sizes(self):
        return [b - a for a, b in self.block_ranges]

    def slices(self):
        return [slice(a, b) for a, b in self.block_ranges]


def partition_columns(N: int, P: int) -> BlockPartition:
    """Split ``N`` columns into ``P`` contiguous blocks, larger blocks first.

    Sizes differ by at most one.

    >>> partition_columns(5, 2).block_ranges
    ((0, 3), (3, 5))
    """
    if P < 1 or P > N:
        raise PartitionError(f"cannot split {N} columns into {P} blocks")
    base, extra = divmod(N, P)
    ranges = []
    start = 0
    for i in range(P):
        stop = start + base + (1 if i < extra else 0)
        ranges.append((start, stop))
        start = stop
    return BlockPartition(tuple(ranges))


@dataclass(frozen=True)
class SolverConfig:
    """Scalar knobs shared by every solver.

    ``lambda_scale`` is resolved per problem into ``lambda_scale * ||A^T y||_inf``.
    ``rho_hat`` is the penalty of the per-block lasso ADMM.
    """

    rho: float = 1.0
    rho_hat: float = 1.0
    lambda_scale: float = 0.05
    eps_abs: float = 1e-4
    eps_rel: float = 1e-2
    max_admm_iters: int = 200
    max_reweight_iters: int = 10
    prune_rel: float = 1e-4
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ("rho", "rho_hat", "lambda_scale", "eps_abs", "eps_rel"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be strictly positive, got {value}")
        for name in ("max_admm_iters", "max_reweight_iters", "workers"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.prune_rel >= 0:
            raise ConfigError(f"prune_rel must be nonnegative, got {self.prune_rel}")

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def resolve_lambda(self, problem: RegressionProblem) -> float:
        return self.lambda_scale * problem.lambda_max()


@dataclass
class Estimate:
    w_hat: np.ndarray
    objective_trace: list = field(default_factory=list)
    iterations_used: tuple = (0, 0)
    history: list = field(default_factory=list)
    lam: Optional[float] = None
    state: object = None
    residual_log: list = field(default_factory=list)

    @property
    def support(self) -> frozenset:
        return frozenset(int(j) for j in np.flatnonzero(self.w_hat))


def split_blocks(A: np.ndarray, partition: BlockPartition) -> Sequence[np.ndarray]:
    return [A[:, s] for s in partition.slices()]
