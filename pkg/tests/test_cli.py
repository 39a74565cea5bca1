import csv

import numpy as np
import pytest

from netrecon import bench, cli, io
from netrecon.errors import SingularModelError


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_simulate_build_solve_pipeline(workdir):
    assert run("simulate", "--nodes", 8, "--density", 0.25, "--steps", 300,
               "--snr-db", 20, "--seed", 4, "--out-prefix", "sim") == 0
    phases = io.read_matrix("sim_phases.csv")
    assert phases.shape == (301, 8)
    meta = io.read_keyvalue("sim_meta.txt")
    assert abs(float(meta["snr_db_realized"]) - 20.0) <= 0.5
    assert io.read_matrix("sim_W.csv").shape == (8, 8)

    assert run("build-dict", "--data", "sim", "--node", 2, "--out", "p2") == 0
    p = io.load_problem("p2")
    assert p.A.shape == (300, 17)
    assert p.sigma2 == pytest.approx(float(meta["noise_std"]) ** 2)
    assert p.column_labels[-1] == "const"

    assert run("solve", "--problem", "p2", "--blocks", 3, "--truth", "p2_truth.csv",
               "--out", "w.csv") == 0
    assert io.read_vector("w.csv").shape == (17,)
    trace = list(csv.DictReader(open("w_trace.csv")))
    assert list(trace[0]) == ["iteration", "active_count", "dual_objective", "nmse"]
    resid = list(csv.DictReader(open("w_residuals.csv")))
    assert list(resid[0]) == ["outer_iteration", "iteration", "e_primal", "e_dual", "objective"]
    assert int(resid[-1]["outer_iteration"]) == len(trace)


def test_simulate_matches_first_sweep_trial(workdir):
    run("simulate", "--nodes", 6, "--density", 0.3, "--steps", 100, "--snr-db", 15,
        "--seed", 9, "--out-prefix", "s")
    seeds = bench.cell_seeds(9, 6, 15.0, 0)
    _, series = bench.make_cell_data(6, 15.0, seeds, density=0.3, steps=100)
    np.testing.assert_array_equal(io.read_matrix("s_phases.csv"), series.phases)


def test_build_all_nodes_and_config_file(workdir):
    run("simulate", "--nodes", 5, "--density", 0.3, "--steps", 80, "--noise-std", 0.1,
        "--out-prefix", "s")
    assert run("build-dict", "--data", "s", "--all-nodes", "--out", "p") == 0
    for i in range(5):
        assert (workdir / f"p_node{i}_A.csv").exists()
    (workdir / "cfg.txt").write_text("max_reweight_iters=2\nrho=2.0\n")
    assert run("solve", "--problem", "p_node1", "--config", "cfg.txt", "--variant",
               "reweighted-l1", "--out", "w.csv") == 0
    assert len(list(csv.DictReader(open("w_trace.csv")))) <= 2


@pytest.mark.parametrize("argv", [
    ["solve", "--problem", "missing", "--out", "w.csv"],
    ["solve", "--problem", "p", "--variant", "ridge", "--out", "w.csv"],
    ["solve", "--problem", "p", "--rho", "-1", "--out", "w.csv"],
    ["simulate", "--nodes", "3", "--density", "0.01", "--out-prefix", "x"],
    ["bench", "--sizes", "10", "--blocks", "999", "--out-prefix", "b"],
    ["bench", "--sizes", "10", "--variants", "nope", "--out-prefix", "b"],
    ["build-dict", "--data", "nothing", "--node", "0", "--out", "p"],
    ["bench"],
])
def test_configuration_errors_exit_1(workdir, argv):
    assert cli.main(argv) == 1


def test_bench_outputs_and_exit_codes(workdir, monkeypatch):
    args = ["bench", "--sizes", "8", "--snrs", "10,20", "--trials", "2", "--steps", "150",
            "--variants", "lasso", "--base-seed", "5", "--out-prefix", "b"]
    assert run(*args) == 0
    raw = list(csv.DictReader(open("b_raw.csv")))
    agg = list(csv.DictReader(open("b_aggregate.csv")))
    assert len(raw) == 4 and len(agg) == 2

    real = bench.estimate

    def fail_high_snr(problem, variant, *a, **k):
        if problem.sigma2 < 0.05:
            raise SingularModelError("forced")
        return real(problem, variant, *a, **k)

    monkeypatch.setattr(bench, "estimate", fail_high_snr)
    assert run(*args) == 2
    raw = list(csv.DictReader(open("b_raw.csv")))
    assert {r["status"] for r in raw} == {"ok", "failed"}
