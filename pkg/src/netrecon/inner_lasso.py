"""ADMM for the weighted lasso of a single block.

Solves ``min_w 1/2 ||A w - b||^2 + lambda_hat * ||diag(theta) w||_1`` with the
split ``theta * w - z = 0``:

    w <- (A^T A + rho_hat diag(theta)^2)^{-1} (A^T b + rho_hat theta (z - u))
    z <- S_{lambda_hat / rho_hat}(theta w + u)
    u <- u + theta w - z
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np
import scipy.linalg
from scipy.linalg.lapack import dpotrs as _potrs

from .errors import DimensionError, RegularizationError
from .problem import SolverConfig

RIDGE_SCALE = 1e-12


def soft_threshold(x, kappa):
    """Elementwise shrinkage ``max(0, x - kappa) - max(0, -x - kappa)``."""
    if np.any(np.asarray(kappa) < 0):
        raise ValueError("threshold must be nonnegative")
    return _shrink(np.asarray(x, dtype=float), kappa)


def _shrink(x, kappa):
    return np.maximum(0.0, x - kappa) - np.maximum(0.0, -x - kappa)


@dataclass
class InnerState:
    w: np.ndarray
    z_hat: np.ndarray
    u_hat: np.ndarray
    theta_w: np.ndarray
    primal_residual_norm: float = 0.0
    dual_residual_norm: float = 0.0
    iteration: int = 0


@dataclass(frozen=True)
class ResidualReport:
    eps_primal: float
    eps_dual: float
    e_primal: float
    e_dual: float

    @property
    def converged(self) -> bool:
        return self.e_primal <= self.eps_primal and self.e_dual <= self.eps_dual


def residual_report(e_primal, e_dual, dim, primal_scale, dual_scale, cfg) -> ResidualReport:
    """Absolute-plus-relative tolerances for a problem of dimension ``dim``.

    ``primal_scale`` is ``max(||x||, ||z||)`` and ``dual_scale`` is ``rho ||u||``.
    """
    root = np.sqrt(dim) * cfg.eps_abs
    return ResidualReport(
        eps_primal=float(root + cfg.eps_rel * primal_scale),
        eps_dual=float(root + cfg.eps_rel * dual_scale),
        e_primal=float(e_primal),
        e_dual=float(e_dual),
    )


def check_stopping(state: InnerState, cfg: SolverConfig, rho_hat: float) -> ResidualReport:
    scale = max(np.linalg.norm(state.theta_w), np.linalg.norm(state.z_hat))
    return residual_report(state.primal_residual_norm, state.dual_residual_norm,
                           state.w.size, scale,
                           rho_hat * np.linalg.norm(state.u_hat), cfg)


class WeightedLassoADMM:
    """Weighted-lasso ADMM with a cached factorization and a warm-startable state.

    The normal matrix depends only on ``A``, ``theta`` and ``rho_hat``, so one
    instance serves every right-hand side ``b`` while the weights are fixed.
    """

    def __init__(self, A, theta, rho_hat, cfg: SolverConfig):
        A = np.asarray(A, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if A.ndim != 2 or theta.shape != (A.shape[1],):
            raise DimensionError("theta", f"shape {theta.shape} does not match A {A.shape}")
        if np.any(theta < 0) or not np.all(np.isfinite(theta)):
            raise ValueError("weights must be finite and nonnegative")
        self.A = A
        self.AT = np.ascontiguousarray(A.T)
        self.theta = theta
        self.penalized = theta > 0
        self.rho_hat = float(rho_hat)
        self.cfg = cfg
        self.ridge = 0.0
        self._factor = self._factorize()
        n = A.shape[1]
        self.z = np.zeros(n)
        self.u = np.zeros(n)

    def _factorize(self):
        K = self.AT @ self.A
        K[np.diag_indices_from(K)] += self.rho_hat * self.theta ** 2
        try:
            return scipy.linalg.cho_factor(K, check_finite=False)
        except np.linalg.LinAlgError:
            pass
        # unpenalized columns can leave the normal matrix singular
        n = K.shape[0]
        self.ridge = RIDGE_SCALE * np.trace(K) / n
        K[np.diag_indices_from(K)] += self.ridge
        try:
            if self.ridge <= 0:
                raise np.linalg.LinAlgError("zero trace")
            return scipy.linalg.cho_factor(K, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise RegularizationError(
                f"normal matrix is singular even with ridge {self.ridge:g}: {exc}") from None

    def reset(self, w=None):
        if w is None:
            self.z[:] = 0.0
        else:
            self.z = self.theta * np.asarray(w, dtype=float)
        self.u[:] = 0.0

    def solve(self, b, lambda_hat, max_iters=None):
        """Run until the residual test passes or ``max_iters`` is hit.

        Returns ``(w, report, iterations)``; ``w`` is exactly zero wherever the
        thresholded split variable is zero on a penalized column.
        """
        cfg = self.cfg
        max_iters = cfg.max_admm_iters if max_iters is None else max_iters
        rho_hat, theta = self.rho_hat, self.theta
        rho_theta = rho_hat * theta
        kappa = lambda_hat / rho_hat
        chol, lower = self._factor
        Atb = self.AT @ b
        z, u = self.z, self.u
        root = sqrt(theta.size) * cfg.eps_abs
        eps_rel = cfg.eps_rel
        for k in range(1, max_iters + 1):
            w, info = _potrs(chol, Atb + rho_theta * (z - u), lower=lower)
            tw = theta * w
            v = tw + u
            z_new = _shrink(v, kappa)
            u = v - z_new
            r = tw - z_new
            s = z_new - z
            z = z_new
            e_primal = sqrt(r @ r)
            e_dual = rho_hat * sqrt(s @ s)
            eps_primal = root + eps_rel * sqrt(max(tw @ tw, z @ z))
            eps_dual = root + eps_rel * rho_hat * sqrt(u @ u)
            if e_primal <= eps_primal and e_dual <= eps_dual:
                break
        report = ResidualReport(float(eps_primal), float(eps_dual),
                                float(e_primal), float(e_dual))
        self.z, self.u = z, u
        w = np.where((z == 0) & self.penalized, 0.0, w)
        return w, report, k

    def state(self, w, report, iteration) -> InnerState:
        return InnerState(w=w, z_hat=self.z.copy(), u_hat=self.u.copy(),
                          theta_w=self.theta * w,
                          primal_residual_norm=report.e_primal,
                          dual_residual_norm=report.e_dual, iteration=iteration)


def solve_weighted_lasso(A_i, b, theta_i, lambda_hat, rho_hat, cfg: SolverConfig):
    """Minimize ``1/2 ||A_i w - b||^2 + lambda_hat ||diag(theta_i) w||_1`` from a cold start.

    Returns ``(w, ResidualReport)``.
    """
    b = np.asarray(b, dtype=float)
    A_i = np.asarray(A_i, dtype=float)
    if b.shape != (A_i.shape[0],):
        raise DimensionError("b", f"length {b.shape} does not match A with {A_i.shape[0]} rows")
    if not lambda_hat > 0:
        raise ValueError(f"lambda_hat must be positive, got {lambda_hat}")
    solver = WeightedLassoADMM(A_i, theta_i, rho_hat, cfg)
    w, report, _ = solver.solve(b, lambda_hat)
    return w, report


def weighted_lasso_objective(A, b, w, theta, lam) -> float:
    r = A @ w - b
    return float(0.5 * r @ r + lam * np.sum(np.abs(theta * w)))
