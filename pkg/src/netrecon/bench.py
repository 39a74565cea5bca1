"""Seeded SNR sweeps and worker-scaling timings.

Every cell ``(n, snr, trial)`` draws its data from ``SeedSequence`` children of
the base seed keyed by the cell coordinates, so a cell's data does not depend
on which other cells are in the sweep. All variants and worker counts of a
cell are scored on the same data.
"""

from __future__ import annotations

import csv
import logging
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from . import dictionary, kuramoto
from .errors import ReconstructionError
from .metrics import nmse, support_metrics
from .problem import SolverConfig, partition_columns
from .reweight import VARIANTS, estimate

log = logging.getLogger(__name__)

RAW_FIELDS = ("n", "snr_db", "trial", "seed", "node", "variant", "blocks", "workers",
              "nmse", "support_precision", "support_recall", "precision_defined",
              "outer_iterations", "inner_iterations", "wall_time_seconds", "status", "error")
TIMING_FIELDS = ("wall_time_seconds",)
AGGREGATE_FIELDS = ("n", "snr_db", "variant", "blocks", "workers", "trials", "failures",
                    "nmse_mean", "nmse_std", "precision_mean", "recall_mean",
                    "wall_time_mean")


@dataclass(frozen=True)
class SweepSpec:
    sizes: tuple = (50,)
    snrs: tuple = (5.0, 10.0, 15.0, 20.0, 25.0)
    trials: int = 50
    variants: tuple = ("reweighted-l1",)
    blocks: int = 1
    workers: tuple = (1,)
    base_seed: int = 0
    nodes: tuple = (0,)
    density: float = 0.1
    dt: float = 0.1
    steps: int = 1000
    support_tol: float = 1e-4

    def validate(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.sizes or not self.snrs or not self.variants or not self.workers:
            raise ValueError("sizes, snrs, variants and workers must be non-empty")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}; expected one of {VARIANTS}")
        for n in self.sizes:
            if n < 2:
                raise ValueError(f"network size must be >= 2, got {n}")
            if any(not 0 <= i < n for i in self.nodes):
                raise ValueError(f"nodes {self.nodes} out of range for n={n}")
            if not 1 <= self.blocks <= dictionary.DictionarySpec().n_columns(n):
                raise ValueError(f"cannot split the n={n} dictionary into {self.blocks} blocks")
        if any(int(w) < 1 for w in self.workers):
            raise ValueError(f"worker counts must be >= 1, got {self.workers}")
        if self.base_seed < 0:
            raise ValueError("base_seed must be nonnegative")


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)

    @property
    def failures(self):
        return [r for r in self.rows if r["status"] != "ok"]

    def aggregate(self):
        """Mean/std per ``(n, snr, variant, blocks, workers)`` over the successful rows."""
        cells = {}
        for r in self.rows:
            key = (r["n"], r["snr_db"], r["variant"], r["blocks"], r["workers"])
            cells.setdefault(key, []).append(r)
        out = []
        for key, rows in cells.items():
            ok = [r for r in rows if r["status"] == "ok"]
            vals = [r["nmse"] for r in ok]
            out.append({
                "n": key[0], "snr_db": key[1], "variant": key[2], "blocks": key[3],
                "workers": key[4], "trials": len(ok), "failures": len(rows) - len(ok),
                "nmse_mean": float(np.mean(vals)) if ok else float("nan"),
                "nmse_std": float(np.std(vals)) if ok else float("nan"),
                "precision_mean": float(np.mean([r["support_precision"] for r in ok])) if ok else float("nan"),
                "recall_mean": float(np.mean([r["support_recall"] for r in ok])) if ok else float("nan"),
                "wall_time_mean": float(np.mean([r["wall_time_seconds"] for r in ok])) if ok else float("nan"),
            })
        return out

    def write_raw(self, path, timing=True):
        fields = RAW_FIELDS if timing else tuple(f for f in RAW_FIELDS if f not in TIMING_FIELDS)
        _write_csv(path, fields, self.rows)

    def write_aggregate(self, path):
        _write_csv(path, AGGREGATE_FIELDS, self.aggregate())


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _write_csv(path, fields, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for r in rows:
            writer.writerow([_fmt(r.get(f)) for f in fields])


def cell_seeds(base_seed, n, snr_db, trial):
    """Network, initial-phase and noise seeds of one sweep cell.

    The network and initial phases depend on ``(n, trial)`` only, so every SNR
    of a trial sees the same network; the noise also depends on the SNR.
    """
    snr_bits = int(np.float64(snr_db).view(np.uint64))
    net = np.random.SeedSequence(base_seed, spawn_key=(int(n), int(trial)))
    noise = np.random.SeedSequence(base_seed, spawn_key=(int(n), int(trial), snr_bits))
    net_seed, x0_seed = (int(s) for s in net.generate_state(2, dtype=np.uint64))
    return net_seed, x0_seed, int(noise.generate_state(1, dtype=np.uint64)[0])


def make_cell_data(n, snr_db, seeds, density=0.1, dt=0.1, steps=1000, node=0):
    """Network and time series whose realized SNR on ``node`` is ``snr_db``."""
    net_seed, x0_seed, noise_seed = seeds
    model = kuramoto.generate_network(n, density, seed=net_seed)
    x0 = kuramoto.initial_phases(n, x0_seed)
    noise_std = kuramoto.calibrate_noise_for_snr(model, dt, steps, x0, snr_db, node,
                                                 seed=noise_seed)
    series = kuramoto.simulate(model, dt, steps, x0, noise_std, noise_seed)
    return model, series


def timed_estimate(problem, variant, blocks, workers, cfg, truth=None):
    """Run one solve and return ``(Estimate, seconds)``; only the solver is timed."""
    partition = partition_columns(problem.N, blocks)
    cfg = cfg.replace(workers=int(workers))
    t0 = time.perf_counter()
    est = estimate(problem, variant, partition, cfg, truth=truth)
    return est, time.perf_counter() - t0


def _row(n, snr, trial, seed, node, variant, blocks, workers):
    return {"n": int(n), "snr_db": float(snr), "trial": int(trial), "seed": int(seed),
            "node": int(node), "variant": variant, "blocks": int(blocks),
            "workers": int(workers), "nmse": float("nan"), "support_precision": float("nan"),
            "support_recall": float("nan"), "precision_defined": "",
            "outer_iterations": 0, "inner_iterations": 0,
            "wall_time_seconds": float("nan"), "status": "ok", "error": ""}


def run_sweep(spec: SweepSpec, cfg: SolverConfig = None) -> ExperimentReport:
    """Simulate, solve and score every cell of ``spec``.

    A failing cell is recorded with ``status="failed"`` and the sweep moves on.
    """
    spec.validate()
    cfg = cfg or SolverConfig()
    report = ExperimentReport()
    for n in spec.sizes:
        for snr in spec.snrs:
            for trial in range(spec.trials):
                seeds = cell_seeds(spec.base_seed, n, snr, trial)
                try:
                    model, series = make_cell_data(n, snr, seeds, spec.density, spec.dt,
                                                   spec.steps, node=spec.nodes[0])
                    data_error = None
                except (ReconstructionError, ValueError, ArithmeticError) as exc:
                    data_error = f"{type(exc).__name__}: {exc}"
                for node in spec.nodes:
                    if data_error is None:
                        problem = dictionary.build_node_problem(series, node)
                        truth = dictionary.true_weight_vector(model, node)
                    for variant in spec.variants:
                        for workers in spec.workers:
                            row = _row(n, snr, trial, seeds[0], node, variant, spec.blocks, workers)
                            report.rows.append(row)
                            if data_error is not None:
                                row.update(status="failed", error=data_error)
                                continue
                            try:
                                est, seconds = timed_estimate(problem, variant, spec.blocks,
                                                              workers, cfg)
                            except (ReconstructionError, ValueError, ArithmeticError) as exc:
                                row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
                                log.warning("cell n=%d snr=%g trial=%d failed: %s",
                                            n, snr, trial, exc)
                                continue
                            _score(row, problem, est, truth, spec.support_tol, seconds)
    return report


def _score(row, problem, est, truth, tol, seconds):
    # the self cos column is constant, so its weight is really an intercept
    w = dictionary.fold_constant_columns(problem, est.w_hat)
    precision, recall, defined = support_metrics(w, truth, tol)
    row.update(nmse=nmse(w, truth), support_precision=float(precision),
               support_recall=float(recall), precision_defined=str(defined).lower(),
               outer_iterations=int(est.iterations_used[0]),
               inner_iterations=int(est.iterations_used[1]),
               wall_time_seconds=float(seconds))


def scaling_benchmark(problem, blocks=100, workers_list=(1, 2, 4), repeats=5,
                      variant="reweighted-l1", cfg: SolverConfig = None):
    """Median solver wall time per worker count, plus each run's weights.

    Returns ``{workers: (median_seconds, [w_hat per run])}``.
    """
    cfg = cfg or SolverConfig()
    out = {}
    for workers in workers_list:
        times, weights = [], []
        for _ in range(repeats):
            est, seconds = timed_estimate(problem, variant, blocks, workers, cfg)
            times.append(seconds)
            weights.append(est.w_hat)
        out[int(workers)] = (statistics.median(times), weights)
    return out
