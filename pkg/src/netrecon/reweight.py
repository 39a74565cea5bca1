"""Iterative reweighting for the sparse Bayesian cost.

The outer loop alternates a weighted lasso with the closed-form updates

    gamma_j = |w_j| / sqrt(alpha_j)
    alpha_j = A_j^T (sigma2 I + A diag(gamma) A^T)^{-1} A_j
    theta_j = sqrt(alpha_j)

which is a concave-convex procedure on

    ||Aw - y||^2 + sigma2 (w^T diag(gamma)^{-1} w + log|sigma2 I + A diag(gamma) A^T|),

``sigma2`` times the negative log evidence. Each weighted lasso uses the
penalty ``sigma2 ||diag(theta) w||_1`` (with the ``1/2`` least-squares scaling).

Pruned columns are dropped for good: their gamma is zero and their alpha is
reported as ``inf``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DegenerateCurvatureError, SingularModelError
from .problem import (BlockPartition, Estimate, RegressionProblem, SolverConfig,
                      partition_columns)
from .sharing import BlockPool, solve_sharing

log = logging.getLogger(__name__)

OUTER_RTOL = 1e-4


@dataclass
class ReweightState:
    theta: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    active_mask: np.ndarray
    outer_iteration: int = 0
    objective: float = float("nan")


def _active(N, active):
    return np.ones(N, dtype=bool) if active is None else np.asarray(active, dtype=bool)


def _model_cholesky(A, gamma, sigma2):
    """Cholesky factor of ``sigma2 I + A diag(gamma) A^T``."""
    C = (A * gamma) @ A.T
    C[np.diag_indices_from(C)] += sigma2
    try:
        return scipy.linalg.cho_factor(C, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise SingularModelError(
            "sigma2 I + A Gamma A^T is not positive definite "
            f"(sigma2={sigma2:g}, {np.count_nonzero(gamma)} nonzero gammas)") from None


def _alpha_from_factor(factor, A):
    X = scipy.linalg.cho_solve(factor, A, check_finite=False)
    return np.einsum("ij,ij->j", A, X)


def _logdet_from_factor(factor):
    return 2.0 * float(np.sum(np.log(np.diag(factor[0]))))


def alpha_update(A, gamma, sigma2, active=None) -> np.ndarray:
    """``diag(A^T (sigma2 I + A diag(gamma) A^T)^{-1} A)`` on the active columns."""
    A = np.asarray(A, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    active = _active(A.shape[1], active)
    Aa = A[:, active]
    factor = _model_cholesky(Aa, gamma[active], sigma2)
    alpha = np.full(A.shape[1], np.inf)
    alpha[active] = _alpha_from_factor(factor, Aa)
    return alpha


def gamma_closed_form(w, alpha) -> np.ndarray:
    w = np.abs(np.asarray(w, dtype=float))
    alpha = np.asarray(alpha, dtype=float)
    nonzero = w != 0
    if np.any(nonzero & (alpha <= 0)):
        j = int(np.flatnonzero(nonzero & (alpha <= 0))[0])
        raise DegenerateCurvatureError(f"column {j} has nonzero weight but alpha={alpha[j]}")
    gamma = np.zeros_like(w)
    gamma[nonzero] = w[nonzero] / np.sqrt(alpha[nonzero])
    return gamma


def theta_update(A, theta_prev, w_new, sigma2, active=None) -> np.ndarray:
    """Next lasso weights: ``sqrt(alpha(gamma))`` with ``gamma = |w_new| / theta_prev``."""
    theta_prev = np.asarray(theta_prev, dtype=float)
    gamma = gamma_closed_form(w_new, theta_prev ** 2)
    return np.sqrt(alpha_update(A, gamma, sigma2, active))


def prune(w, prune_rel, active=None) -> np.ndarray:
    """Deactivate columns with ``|w_j| < prune_rel * ||w||_2``; never revives a column."""
    if prune_rel < 0:
        raise ValueError(f"prune_rel must be nonnegative, got {prune_rel}")
    w = np.asarray(w, dtype=float)
    active = _active(w.size, active)
    return active & ~(np.abs(w) < prune_rel * np.linalg.norm(w))


def dual_objective(A, y, w, gamma, sigma2, logdet_weight=None) -> float:
    """``||Aw - y||^2 + sigma2 w^T Gamma^{-1} w + c log|sigma2 I + A Gamma A^T|``.

    ``c`` defaults to ``sigma2``, which makes the value ``sigma2`` times the
    negative log evidence of ``y``. That is the function the reweighting
    steps descend; pass ``logdet_weight=1`` for the unit-weight variant.
    Entries with ``w_j = gamma_j = 0`` contribute nothing; ``w_j != 0`` with
    ``gamma_j = 0`` gives ``inf``.
    """
    A = np.asarray(A, dtype=float)
    w = np.asarray(w, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if np.any((w != 0) & (gamma == 0)):
        return float("inf")
    c = sigma2 if logdet_weight is None else logdet_weight
    keep = gamma > 0
    r = A @ w - y
    penalty = sigma2 * float(np.sum(w[keep] ** 2 / gamma[keep]))
    factor = _model_cholesky(A[:, keep], gamma[keep], sigma2)
    return float(r @ r) + penalty + c * _logdet_from_factor(factor)


def posterior_mean(A, y, gamma, sigma2) -> np.ndarray:
    """``Gamma A^T (sigma2 I + A Gamma A^T)^{-1} y``."""
    if not sigma2 > 0:
        raise SingularModelError(f"posterior mean needs sigma2 > 0, got {sigma2}")
    A = np.asarray(A, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    factor = _model_cholesky(A, gamma, sigma2)
    return gamma * (A.T @ scipy.linalg.cho_solve(factor, y, check_finite=False))


def effective_lambda(problem: RegressionProblem, cfg: SolverConfig) -> float:
    """Penalty of the initial lasso: the larger of sigma2 and the scaled ``||A^T y||_inf``."""
    scaled = cfg.resolve_lambda(problem)
    lam = max(problem.sigma2, scaled)
    log.info("lambda_eff=%g (sigma2=%g, %g*||A^T y||_inf=%g)",
             lam, problem.sigma2, cfg.lambda_scale, scaled)
    return lam


def _relative_change(w, w_prev):
    denom = np.linalg.norm(w_prev)
    if denom == 0:
        return np.inf if np.linalg.norm(w) > 0 else 0.0
    return np.linalg.norm(w - w_prev) / denom


def _trace_row(k, active, objective, w, truth, lam):
    row = {"iteration": k, "active_count": int(active.sum()), "dual_objective": objective,
           "lambda": lam}
    if truth is not None:
        row["nmse"] = float(np.linalg.norm(w - truth) / np.linalg.norm(truth))
    return row


def reweighted_lasso(problem: RegressionProblem, partition: Optional[BlockPartition] = None,
                     cfg: SolverConfig = None, lam: Optional[float] = None,
                     truth=None, pool: Optional[BlockPool] = None) -> Estimate:
    """Reweighted lasso solved by the sharing ADMM.

    The first pass is a plain lasso (``theta = 1``) with penalty ``lam``, by
    default :func:`effective_lambda`. Later passes minimize
    ``1/2 ||Aw - y||^2 + sigma2 ||diag(theta) w||_1`` with ``theta`` from
    :func:`theta_update`, which is the scaling under which the dual cost
    decreases monotonically. :func:`prune` runs after every pass. Stops when the
    active set is unchanged and ``w`` moved by less than ``1e-4`` relative,
    or after ``cfg.max_reweight_iters`` passes.
    """
    cfg = cfg or SolverConfig()
    partition = partition or partition_columns(problem.N, 1)
    A, y, sigma2 = problem.A, problem.y, problem.sigma2
    N = problem.N
    lam = effective_lambda(problem, cfg) if lam is None else float(lam)
    truth = None if truth is None else np.asarray(truth, dtype=float)

    theta = np.ones(N)
    active = np.ones(N, dtype=bool)
    w_prev = np.zeros(N)
    trace, history, residual_log = [], [], []
    inner_total = 0
    warm = None
    state = ReweightState(theta=theta, gamma=np.zeros(N), alpha=np.ones(N), active_mask=active)

    own_pool = pool is None
    if own_pool:
        pool = BlockPool([A[:, s] for s in partition.slices()], cfg.workers)
    try:
        for k in range(1, cfg.max_reweight_iters + 1):
            # first pass is the plain lasso; reweighted passes use the sigma2 scaling
            lam_k = lam if k == 1 or sigma2 <= 0 else sigma2
            w, sharing = solve_sharing(problem, partition, theta, lam_k, cfg,
                                       active=active, warm=warm, pool=pool)
            warm = sharing
            inner_total += sharing.inner_iterations
            residual_log.extend((k,) + row for row in sharing.log)
            sharing.log = []
            new_active = prune(w, cfg.prune_rel, active)
            w = np.where(new_active, w, 0.0)
            # same gamma as the concave linearization used to build theta
            gamma = gamma_closed_form(w, theta ** 2)
            factor = None
            if sigma2 > 0 or np.count_nonzero(gamma) >= problem.M:
                Aa = A[:, new_active]
                factor = _model_cholesky(Aa, gamma[new_active], sigma2)
                r = A @ w - y
                keep = gamma > 0
                objective = (float(r @ r) + sigma2 * (float(np.sum(w[keep] ** 2 / gamma[keep]))
                                                      + _logdet_from_factor(factor)))
            else:
                objective = float("nan")
            trace.append(objective)
            history.append(_trace_row(k, new_active, objective, w, truth, lam_k))

            stable = np.array_equal(new_active, active) and _relative_change(w, w_prev) < OUTER_RTOL
            active, w_prev = new_active, w
            state = ReweightState(theta=theta, gamma=gamma, alpha=theta ** 2,
                                  active_mask=active, outer_iteration=k, objective=objective)
            if stable or k == cfg.max_reweight_iters:
                break
            if factor is None:
                raise SingularModelError("reweighting needs sigma2 > 0")
            alpha = np.full(N, np.inf)
            alpha[active] = _alpha_from_factor(factor, Aa)
            theta = np.where(active, np.sqrt(np.where(active, alpha, 1.0)), 1.0)
            # pruned blocks restart cold; the rest keep their ADMM state
            warm.block_w = [np.where(active[s], bw, 0.0)
                            for s, bw in zip(partition.slices(), warm.block_w)]
    finally:
        if own_pool:
            pool.close()

    return Estimate(w_hat=w_prev, objective_trace=trace, iterations_used=(k, inner_total),
                    history=history, lam=lam, state=state, residual_log=residual_log)


def reweighted_l2(problem: RegressionProblem, cfg: SolverConfig = None, gamma0=None,
                  truth=None) -> Estimate:
    """Reweighted ridge variant: posterior-mean ``w`` then closed-form ``gamma``."""
    cfg = cfg or SolverConfig()
    A, y, sigma2 = problem.A, problem.y, problem.sigma2
    N = problem.N
    truth = None if truth is None else np.asarray(truth, dtype=float)
    gamma = np.ones(N) if gamma0 is None else np.array(gamma0, dtype=float)
    if np.any(gamma <= 0):
        raise ValueError("reweighted l2 needs a strictly positive initial gamma")
    active = np.ones(N, dtype=bool)
    alpha = alpha_update(A, gamma, sigma2, active)
    w_prev = np.zeros(N)
    trace, history = [], []

    for k in range(1, cfg.max_reweight_iters + 1):
        w = np.zeros(N)
        w[active] = posterior_mean(A[:, active], y, gamma[active], sigma2)
        new_active = prune(w, cfg.prune_rel, active)
        w = np.where(new_active, w, 0.0)
        gamma = np.where(new_active, gamma_closed_form(w, np.where(new_active, alpha, 1.0)), 0.0)
        objective = dual_objective(A, y, w, gamma, sigma2)
        trace.append(objective)
        history.append(_trace_row(k, new_active, objective, w, truth, sigma2))
        stable = np.array_equal(new_active, active) and _relative_change(w, w_prev) < OUTER_RTOL
        active, w_prev = new_active & (gamma > 0), w
        if stable or k == cfg.max_reweight_iters or not active.any():
            break
        alpha = alpha_update(A, gamma, sigma2, active)

    return Estimate(w_hat=w_prev, objective_trace=trace, iterations_used=(k, 0),
                    history=history, lam=sigma2)


VARIANTS = ("reweighted-l1", "reweighted-l2", "lasso")


def estimate(problem: RegressionProblem, variant="reweighted-l1", partition=None,
             cfg: SolverConfig = None, truth=None, pool=None) -> Estimate:
    """Dispatch on the solver variant name used by the CLI and the sweeps."""
    cfg = cfg or SolverConfig()
    if variant == "reweighted-l1":
        return reweighted_lasso(problem, partition, cfg, truth=truth, pool=pool)
    if variant == "lasso":
        return reweighted_lasso(problem, partition, cfg.replace(max_reweight_iters=1),
                                truth=truth, pool=pool)
    if variant == "reweighted-l2":
        return reweighted_l2(problem, cfg, truth=truth)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
