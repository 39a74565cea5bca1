"""Dictionary matrices built from phase trajectories.

For node ``i`` the matrix has one row per consecutive sample pair and the
columns are ordered node-major, function-minor: for ``j = 0..n-1`` the
pairwise functions evaluated at ``(x_j, x_i)``, then a trailing unit column.
The self block ``j = i`` is kept, so with the default functions it holds a
zero column and a column of ones that duplicates the constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, UnrepresentableTruthError
from .kuramoto import KuramotoModel, TimeSeries
from .problem import RegressionProblem

CONST_LABEL = "const"


@dataclass(frozen=True)
class CandidateFunction:
    label: str
    evaluator: Optional[Callable] = None
    arity: str = "pairwise"

    def __call__(self, xj, xi):
        return self.evaluator(xj, xi)


SIN = CandidateFunction("sin", lambda xj, xi: np.sin(xj - xi))
COS = CandidateFunction("cos", lambda xj, xi: np.cos(xj - xi))


@dataclass(frozen=True)
class DictionarySpec:
    pairwise_functions: tuple = field(default_factory=lambda: (SIN, COS))
    include_constant: bool = True

    def __post_init__(self):
        funcs = tuple(self.pairwise_functions)
        object.__setattr__(self, "pairwise_functions", funcs)
        if not funcs and not self.include_constant:
            raise ValueError("dictionary needs at least one function")
        labels = [f.label for f in funcs]
        if len(set(labels)) != len(labels) or CONST_LABEL in labels:
            raise ValueError(f"function labels must be distinct, got {labels}")

    def n_columns(self, n: int) -> int:
        return n * len(self.pairwise_functions) + int(self.include_constant)

    def column_labels(self, n: int, node: int) -> tuple:
        labels = [f"{f.label}(x{j}-x{node})"
                  for j in range(n) for f in self.pairwise_functions]
        if self.include_constant:
            labels.append(CONST_LABEL)
        return tuple(labels)

    def column_of(self, label: str, j: int) -> int:
        """Index of the column holding function ``label`` applied to source node ``j``."""
        labels = [f.label for f in self.pairwise_functions]
        return j * len(labels) + labels.index(label)


def dictionary_matrix(phases: np.ndarray, node: int, spec: DictionarySpec) -> np.ndarray:
    """Evaluate the dictionary on each row of ``phases`` (shape ``(T, n)``)."""
    T, n = phases.shape
    xi = phases[:, node:node + 1]
    blocks = [np.asarray(f(phases, xi), dtype=float) for f in spec.pairwise_functions]
    cols = []
    if blocks:
        cols.append(np.stack(blocks, axis=2).reshape(T, n * len(blocks)))
    if spec.include_constant:
        cols.append(np.ones((T, 1)))
    return np.hstack(cols)


def estimate_sigma2(y: np.ndarray, window: int = 5) -> float:
    """Variance of ``y`` about its centered running mean."""
    if y.size < window:
        return float(np.var(y))
    kernel = np.ones(window) / window
    padded = np.pad(y, window // 2, mode="edge")
    trend = np.convolve(padded, kernel, mode="valid")
    return float(np.var(y - trend))


def build_node_problem(series: TimeSeries, node: int, spec: DictionarySpec = None,
                       sigma2: Optional[float] = None) -> RegressionProblem:
    """Regression problem for ``node``: finite-difference rates against the dictionary.

    ``sigma2`` defaults to the simulation noise variance when the series
    carries it, otherwise to :func:`estimate_sigma2` of the target.
    """
    spec = spec or DictionarySpec()
    phases = np.asarray(series.phases)
    if phases.ndim != 2 or phases.shape[0] < 2:
        raise DimensionError("phases", f"need at least two samples, got shape {phases.shape}")
    if phases.shape[0] != len(series.times):
        raise DimensionError("times", f"{len(series.times)} stamps for {phases.shape[0]} samples")
    n = phases.shape[1]
    if not 0 <= node < n:
        raise DimensionError("node", f"index {node} outside 0..{n - 1}")

    y = np.diff(phases[:, node]) / series.dt
    A = dictionary_matrix(phases[:-1], node, spec)
    if sigma2 is None:
        noise_std = getattr(series, "noise_std", float("nan"))
        sigma2 = noise_std ** 2 if np.isfinite(noise_std) else estimate_sigma2(y)
    return RegressionProblem(y=y, A=A, sigma2=float(sigma2),
                             column_labels=spec.column_labels(n, node))


def true_weight_vector(model: KuramotoModel, node: int, spec: DictionarySpec = None) -> np.ndarray:
    """Embed the ground truth of ``node`` in dictionary coordinates."""
    spec = spec or DictionarySpec()
    if "sin" not in [f.label for f in spec.pairwise_functions]:
        raise UnrepresentableTruthError("dictionary has no sin(x_j - x_i) column")
    n = model.n
    w = np.zeros(spec.n_columns(n))
    for j in range(n):
        if j != node:
            w[spec.column_of("sin", j)] = model.W[node, j]
    if spec.include_constant:
        w[-1] = model.omega[node]
    elif model.omega[node] != 0:
        raise UnrepresentableTruthError("natural frequency needs a constant column")
    return w


def fold_constant_columns(problem: RegressionProblem, w: np.ndarray) -> np.ndarray:
    """Move the weight of every constant-valued column onto the unit column.

    ``A @ w`` is unchanged up to rounding; afterwards only the unit column
    carries an intercept, which makes supports comparable with the truth.
    """
    w = np.array(w, dtype=float)
    labels = list(problem.column_labels)
    if CONST_LABEL not in labels:
        return w
    k = labels.index(CONST_LABEL)
    A = problem.A
    for j in np.flatnonzero(w):
        if j == k:
            continue
        col = A[:, j]
        if np.all(col == col[0]):
            w[k] += col[0] * w[j]
            w[j] = 0.0
    return w
