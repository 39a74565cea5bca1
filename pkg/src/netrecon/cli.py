"""Command-line entry point: ``netrecon {simulate,build-dict,solve,bench}``.

Exit status is 0 on success, 2 when some sweep cells failed and 1 on bad
configuration or input.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, dictionary, io, kuramoto
from .errors import ReconstructionError
from .problem import SolverConfig, partition_columns, validate_problem
from .reweight import VARIANTS, estimate

log = logging.getLogger("netrecon")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is reserved for partial failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _names(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def series_paths(prefix):
    prefix = str(prefix)
    return {k: Path(f"{prefix}_{k}.csv") for k in ("phases", "W", "omega")} | {
        "meta": Path(prefix + "_meta.txt")}


def cmd_simulate(args):
    if args.nodes < 2:
        raise ValueError(f"--nodes must be >= 2, got {args.nodes}")
    snr = args.snr_db if args.snr_db is not None else float("inf")
    net_seed, x0_seed, noise_seed = bench.cell_seeds(args.seed, args.nodes, snr, 0)
    model = kuramoto.generate_network(args.nodes, args.density, seed=net_seed)
    x0 = kuramoto.initial_phases(args.nodes, x0_seed)
    if args.snr_db is None:
        noise_std = args.noise_std
    else:
        noise_std = kuramoto.calibrate_noise_for_snr(model, args.dt, args.steps, x0,
                                                     args.snr_db, args.snr_node, seed=noise_seed)
    series = kuramoto.simulate(model, args.dt, args.steps, x0, noise_std, noise_seed)

    paths = series_paths(args.out_prefix)
    io.write_matrix(paths["phases"], series.phases)
    io.write_matrix(paths["W"], model.W)
    io.write_matrix(paths["omega"], model.omega)
    io.write_keyvalue(paths["meta"], {
        "nodes": args.nodes, "density": args.density, "dt": repr(series.dt),
        "steps": args.steps, "seed": args.seed, "noise_std": repr(float(noise_std)),
        "snr_db_target": "" if args.snr_db is None else repr(float(args.snr_db)),
        "snr_node": args.snr_node,
        "snr_db_realized": repr(float(series.snr_db_realized[args.snr_node])),
    })
    print(f"wrote {paths['phases']} ({series.phases.shape[0]} samples, {args.nodes} nodes, "
          f"noise_std={noise_std:.6g})")
    return EXIT_OK


def load_series(prefix):
    paths = series_paths(prefix)
    meta = io.read_keyvalue(paths["meta"])
    phases = io.read_matrix(paths["phases"])
    dt = float(meta["dt"])
    times = dt * np.arange(phases.shape[0])
    noise_std = float(meta.get("noise_std", "nan"))
    series = kuramoto.TimeSeries(times=times, phases=phases, dt=dt, noise_record=None,
                                 snr_db_realized=None, signal=None, noise_std=noise_std)
    model = None
    if paths["W"].exists() and paths["omega"].exists():
        model = kuramoto.KuramotoModel(omega=io.read_vector(paths["omega"]),
                                       W=io.read_matrix(paths["W"]))
    return series, model


def cmd_build_dict(args):
    series, model = load_series(args.data)
    n = series.n
    if args.all_nodes:
        nodes = range(n)
    elif args.node is None:
        raise ValueError("give --node i or --all-nodes")
    else:
        nodes = [args.node]
    for node in nodes:
        prefix = f"{args.out}_node{node}" if args.all_nodes else args.out
        problem = dictionary.build_node_problem(series, node, sigma2=args.sigma2)
        paths = io.save_problem(prefix, problem, {"node": node, "dt": repr(series.dt)})
        if model is not None:
            io.write_matrix(f"{prefix}_truth.csv", dictionary.true_weight_vector(model, node))
        print(f"wrote {paths['A']} ({problem.M} x {problem.N})")
    return EXIT_OK


def _solver_config(args):
    cfg = io.read_config(args.config) if args.config else SolverConfig()
    overrides = {"rho": args.rho, "rho_hat": args.rho_hat, "lambda_scale": args.lambda_scale,
                 "eps_abs": args.eps_abs, "eps_rel": args.eps_rel,
                 "max_admm_iters": args.max_admm, "max_reweight_iters": args.max_reweight,
                 "prune_rel": args.prune_rel, "workers": args.workers}
    return cfg.replace(**{k: v for k, v in overrides.items() if v is not None})


def cmd_solve(args):
    cfg = _solver_config(args)
    problem = io.load_problem(args.problem, sigma2=args.sigma2)
    validate_problem(problem)
    truth = io.read_vector(args.truth) if args.truth else None
    if truth is not None and truth.shape != (problem.N,):
        raise ValueError(f"truth has {truth.size} entries, problem has {problem.N} columns")
    partition = partition_columns(problem.N, args.blocks)
    est = estimate(problem, args.variant, partition, cfg, truth=truth)

    out = Path(args.out)
    io.write_matrix(out, est.w_hat)
    stem = out.with_suffix("")
    with open(f"{stem}_residuals.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["outer_iteration", "iteration", "e_primal", "e_dual", "objective"])
        for row in est.residual_log:
            writer.writerow([row[0], row[1]] + [repr(float(v)) for v in row[2:]])
    with open(f"{stem}_trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        fields = ["iteration", "active_count", "dual_objective"]
        if truth is not None:
            fields.append("nmse")
        writer.writerow(fields)
        for row in est.history:
            writer.writerow([row["iteration"], row["active_count"]]
                            + [repr(float(row[f])) for f in fields[2:]])
    print(f"wrote {out}: {len(est.support)} nonzeros, "
          f"{est.iterations_used[0]} outer / {est.iterations_used[1]} inner iterations")
    return EXIT_OK


def cmd_bench(args):
    spec = bench.SweepSpec(sizes=args.sizes, snrs=args.snrs, trials=args.trials,
                           variants=args.variants, blocks=args.blocks,
                           workers=args.workers_list, base_seed=args.base_seed,
                           nodes=args.nodes, steps=args.steps, dt=args.dt,
                           density=args.density)
    cfg = io.read_config(args.config) if args.config else SolverConfig()
    spec.validate()
    report = bench.run_sweep(spec, cfg)
    raw, agg = f"{args.out_prefix}_raw.csv", f"{args.out_prefix}_aggregate.csv"
    report.write_raw(raw)
    report.write_aggregate(agg)
    failed = len(report.failures)
    print(f"wrote {raw} and {agg}: {len(report.rows)} rows, {failed} failed")
    return EXIT_PARTIAL if failed else EXIT_OK


def build_parser():
    parser = _Parser(prog="netrecon", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a random network and simulate it")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--density", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--snr-db", type=float, default=None,
                   help="calibrate the noise to this SNR on --snr-node")
    p.add_argument("--snr-node", type=int, default=0)
    p.add_argument("--noise-std", type=float, default=0.0,
                   help="noise level used when --snr-db is not given")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("build-dict", help="build node regression problems from a simulation")
    p.add_argument("--data", required=True, help="prefix written by simulate")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--node", type=int)
    group.add_argument("--all-nodes", action="store_true")
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_dict)

    p = sub.add_parser("solve", help="reconstruct one node's weights")
    p.add_argument("--problem", required=True, help="prefix written by build-dict")
    p.add_argument("--blocks", type=int, default=1)
    p.add_argument("--workers", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--rho-hat", type=float)
    p.add_argument("--lambda-scale", type=float)
    p.add_argument("--eps-abs", type=float)
    p.add_argument("--eps-rel", type=float)
    p.add_argument("--max-admm", type=int)
    p.add_argument("--max-reweight", type=int)
    p.add_argument("--prune-rel", type=float)
    p.add_argument("--sigma2", type=float, default=None, help="override the stored noise variance")
    p.add_argument("--variant", choices=VARIANTS, default="reweighted-l1")
    p.add_argument("--config", help="key=value file of solver settings")
    p.add_argument("--truth", help="true weight vector CSV; adds nmse to the trace")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="seeded SNR sweep")
    p.add_argument("--sizes", type=_ints, default=(50,))
    p.add_argument("--snrs", type=_floats, default=(5.0, 10.0, 15.0, 20.0, 25.0))
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--variants", type=_names, default=("reweighted-l1",))
    p.add_argument("--blocks", type=int, default=1)
    p.add_argument("--workers-list", type=_ints, default=(1,))
    p.add_argument("--nodes", type=_ints, default=(0,))
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--density", type=float, default=0.1)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--config")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ReconstructionError, ValueError, OSError, KeyError) as exc:
        print(f"netrecon {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
