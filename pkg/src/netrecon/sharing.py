"""Sharing-form ADMM that splits the weighted lasso across column blocks.

Every iteration solves the block lassos

    w_i <- argmin rho/2 ||A_i w_i - b_i||^2 + lam ||diag(theta_i) w_i||_1,
    b_i  = A_i w_i + zbar - mean_j(A_j w_j) - u,

then updates ``zbar = (y + rho * mean(Aw) + rho * u) / (P + rho)`` and the single
scaled dual ``u <- u + mean(Aw) - zbar``.

Block solves run in a :class:`BlockPool`. Each block's arithmetic does not
depend on which worker runs it and partial predictions are summed in block
order, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import BlockSolveError, DimensionError, ReconstructionError
from .inner_lasso import ResidualReport, WeightedLassoADMM, residual_report
from .problem import BlockPartition, RegressionProblem, SolverConfig, partition_columns

log = logging.getLogger(__name__)


def local_target(block_prediction, z_bar, avg_prediction, u):
    """Right-hand side ``b = A_i w_i + zbar - mean(Aw) - u`` of one block."""
    return block_prediction + z_bar - avg_prediction - u


def zbar_update(y, avg_pred, u, P, rho):
    return (y + rho * avg_pred + rho * u) / (P + rho)


def block_skip_test(A_i, b, lam, rho, theta_i) -> bool:
    """True when the block lasso is certainly solved by ``w_i = 0``.

    Uses the optimality condition at zero, ``|A_j^T b| <= (lam / rho) theta_j``
    for every column; it holds whenever ``||A_i^T b||_2 <= (lam / rho) min(theta_i)``.
    """
    g = np.abs(np.asarray(A_i).T @ b)
    bound = (lam / rho) * np.asarray(theta_i, dtype=float)
    return bool(np.all(g <= bound))


def sum_in_order(vectors, length):
    total = np.zeros(length)
    for v in vectors:
        total += v
    return total


class BlockGroup:
    """Solver state for a run of consecutive blocks, owned by one worker."""

    def __init__(self, blocks, first_index=0):
        self.blocks = [np.asarray(A, dtype=float) for A in blocks]
        self.first_index = first_index
        self.M = self.blocks[0].shape[0] if self.blocks else 0
        self.solvers = [None] * len(self.blocks)
        self.columns = [np.arange(A.shape[1]) for A in self.blocks]
        self.w = [np.zeros(A.shape[1]) for A in self.blocks]
        self.preds = [np.zeros(self.M) for _ in self.blocks]

    def configure(self, thetas, actives, rho_hat, cfg, warm_w=None):
        """Set weights and active columns; returns the block predictions."""
        for i, A in enumerate(self.blocks):
            cols = np.flatnonzero(actives[i])
            self.columns[i] = cols
            w = np.zeros(A.shape[1]) if warm_w is None else np.array(warm_w[i], dtype=float)
            w[~actives[i]] = 0.0
            self.w[i] = w
            if cols.size:
                try:
                    solver = WeightedLassoADMM(A[:, cols], thetas[i][cols], rho_hat, cfg)
                except ReconstructionError as exc:
                    raise BlockSolveError(self.first_index + i, exc) from exc
                solver.reset(w[cols])
                self.solvers[i] = solver
                self.preds[i] = A[:, cols] @ w[cols]
            else:
                self.solvers[i] = None
                self.preds[i] = np.zeros(self.M)
        return list(self.preds)

    def step(self, shared, lam, rho):
        """One block sweep given ``shared = zbar - mean(Aw) - u``."""
        lambda_hat = lam / rho
        iters = 0
        skipped = 0
        for i, solver in enumerate(self.solvers):
            if solver is None:
                continue
            b = self.preds[i] + shared
            if block_skip_test(solver.A, b, lam, rho, solver.theta):
                w_active = np.zeros(self.columns[i].size)
                solver.reset()
                skipped += 1
            else:
                try:
                    w_active, _, k = solver.solve(b, lambda_hat)
                except ReconstructionError as exc:
                    raise BlockSolveError(self.first_index + i, exc) from exc
                iters += k
            self.w[i] = np.zeros(self.blocks[i].shape[1])
            self.w[i][self.columns[i]] = w_active
            self.preds[i] = solver.A @ w_active
        return list(self.w), list(self.preds), iters, skipped


def _worker_main(conn, blocks, first_index):
    threadpool_limits(limits=1)
    group = BlockGroup(blocks, first_index)
    while True:
        cmd, payload = conn.recv()
        if cmd == "close":
            conn.close()
            return
        try:
            if cmd == "configure":
                result = group.configure(*payload)
            elif cmd == "step":
                result = group.step(*payload)
            else:
                raise ValueError(f"unknown command {cmd!r}")
            conn.send(("ok", result))
        except BlockSolveError as exc:
            conn.send(("error", (exc.block, repr(exc.cause))))
        except Exception as exc:  # noqa: BLE001 - forwarded to the coordinator
            conn.send(("error", (None, repr(exc))))


class BlockPool:
    """Runs block solves either in-process (``workers == 1``) or in worker processes.

    Blocks are dealt to workers in contiguous runs. Use as a context manager
    or call :meth:`close`.
    """

    def __init__(self, blocks, workers=1):
        self.P = len(blocks)
        self.workers = max(1, min(int(workers), self.P))
        self._local = None
        self._conns = []
        self._procs = []
        if self.workers == 1:
            self._local = BlockGroup(blocks)
            return
        ctx = mp.get_context("fork" if "fork" in mp.get_all_start_methods() else "spawn")
        groups = partition_columns(self.P, self.workers)
        for start, stop in groups.block_ranges:
            parent, child = ctx.Pipe()
            proc = ctx.Process(target=_worker_main, args=(child, blocks[start:stop], start),
                               daemon=True)
            proc.start()
            child.close()
            self._conns.append(parent)
            self._procs.append(proc)
        self._groups = groups.block_ranges

    def _broadcast(self, cmd, per_worker_payloads):
        for conn, payload in zip(self._conns, per_worker_payloads):
            conn.send((cmd, payload))
        results = []
        for conn in self._conns:
            status, result = conn.recv()
            if status == "error":
                block, message = result
                raise BlockSolveError(block, message)
            results.append(result)
        return results

    def configure(self, thetas, actives, rho_hat, cfg, warm_w=None):
        if self._local is not None:
            return self._local.configure(thetas, actives, rho_hat, cfg, warm_w)
        payloads = [(thetas[a:b], actives[a:b], rho_hat, cfg,
                     None if warm_w is None else warm_w[a:b]) for a, b in self._groups]
        preds = []
        for part in self._broadcast("configure", payloads):
            preds.extend(part)
        return preds

    def step(self, shared, lam, rho):
        if self._local is not None:
            return self._local.step(shared, lam, rho)
        ws, preds, iters, skipped = [], [], 0, 0
        for w, p, k, s in self._broadcast("step", [(shared, lam, rho)] * len(self._conns)):
            ws.extend(w)
            preds.extend(p)
            iters += k
            skipped += s
        return ws, preds, iters, skipped

    def close(self):
        for conn in self._conns:
            try:
                conn.send(("close", None))
                conn.close()
            except (OSError, BrokenPipeError):
                pass
        for proc in self._procs:
            proc.join(timeout=5)
            if proc.is_alive():
                proc.terminate()
        self._conns, self._procs = [], []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class SharingState:
    block_w: list
    block_predictions: list
    z_bar: np.ndarray
    u: np.ndarray
    iteration: int = 0
    residual_report: ResidualReport = None
    inner_iterations: int = 0
    skipped_blocks: int = 0
    log: list = field(default_factory=list)

    def weights(self) -> np.ndarray:
        return np.concatenate(self.block_w)


def sharing_objective(problem, w, theta, lam) -> float:
    r = problem.A @ w - problem.y
    return float(0.5 * r @ r + lam * np.sum(np.abs(theta * w)))


def solve_sharing(problem: RegressionProblem, partition: BlockPartition, theta, lam,
                  cfg: SolverConfig, active=None, warm: SharingState = None,
                  pool: BlockPool = None):
    """Weighted lasso ``1/2 ||Aw - y||^2 + lam ||diag(theta) w||_1`` by block-split ADMM.

    ``active`` masks out pruned columns (held at zero). ``warm`` restarts from a
    previous state. Returns ``(w, SharingState)``.
    """
    N, M = problem.N, problem.M
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (N,):
        raise DimensionError("theta", f"length {theta.shape} does not match {N} columns")
    if partition.N != N:
        raise DimensionError("partition", f"covers {partition.N} columns, problem has {N}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    active = np.ones(N, dtype=bool) if active is None else np.asarray(active, dtype=bool)

    slices = partition.slices()
    thetas = [theta[s] for s in slices]
    actives = [active[s] for s in slices]
    live = [bool(a.any()) for a in actives]
    P_eff = max(1, sum(live))

    own_pool = pool is None
    if own_pool:
        pool = BlockPool([problem.A[:, s] for s in slices], cfg.workers)
    rho = cfg.rho
    y = problem.y
    try:
        with threadpool_limits(limits=1):
            warm_w = warm.block_w if warm is not None else None
            preds = pool.configure(thetas, actives, cfg.rho_hat, cfg, warm_w)
            avg = sum_in_order(preds, M) / P_eff
            if warm is not None:
                z_bar, u = warm.z_bar.copy(), warm.u.copy()
            else:
                z_bar, u = np.zeros(M), np.zeros(M)
            block_w = [np.zeros(s.stop - s.start) for s in slices] if warm_w is None else warm_w
            state = SharingState(block_w=list(block_w), block_predictions=preds,
                                 z_bar=z_bar, u=u)

            for k in range(1, cfg.max_admm_iters + 1):
                shared = z_bar - avg - u
                block_w, preds, iters, skipped = pool.step(shared, lam, rho)
                avg = sum_in_order(preds, M) / P_eff
                z_old = z_bar
                z_bar = zbar_update(y, avg, u, P_eff, rho)
                u = u + avg - z_bar
                report = residual_report(
                    np.linalg.norm(avg - z_bar), rho * np.linalg.norm(z_bar - z_old), M,
                    max(np.linalg.norm(avg), np.linalg.norm(z_bar)),
                    rho * np.linalg.norm(u), cfg)
                w = np.concatenate(block_w)
                objective = sharing_objective(problem, w, theta, lam)
                state.log.append((k, report.e_primal, report.e_dual, objective))
                state.inner_iterations += iters
                state.skipped_blocks += skipped
                if report.converged:
                    break
    finally:
        if own_pool:
            pool.close()

    state.block_w = block_w
    state.block_predictions = preds
    state.z_bar, state.u = z_bar, u
    state.iteration = k
    state.residual_report = report
    log.debug("sharing ADMM stopped after %d iterations (converged=%s)", k, report.converged)
    return np.concatenate(block_w), state
