import numpy as np
import pytest

from conftest import fista_weighted_lasso, lasso_objective, sparse_problem
from netrecon.errors import DimensionError
from netrecon.inner_lasso import solve_weighted_lasso
from netrecon.problem import SolverConfig, partition_columns
from netrecon.sharing import (BlockPool, block_skip_test, local_target, sharing_objective,
                              solve_sharing, sum_in_order, zbar_update)

TIGHT = SolverConfig(eps_abs=1e-11, eps_rel=1e-11, max_admm_iters=20_000)


def test_update_formulas():
    y, avg, u = np.array([3.0]), np.array([1.0]), np.array([0.5])
    # (3 + 2 * 1 + 2 * 0.5) / (4 + 2)
    assert zbar_update(y, avg, u, 4, 2.0)[0] == pytest.approx(1.0)
    assert local_target(np.array([2.0]), np.array([1.0]), avg, u)[0] == pytest.approx(1.5)
    np.testing.assert_array_equal(sum_in_order([np.ones(2), 2 * np.ones(2)], 2), [3.0, 3.0])


def test_skip_test_examples():
    A = np.eye(2)
    b = np.array([0.5, -0.2])
    assert block_skip_test(A, b, 0.6, 1.0, np.ones(2))
    assert not block_skip_test(A, b, 0.4, 1.0, np.ones(2))
    # weights scale the per-column bound
    assert block_skip_test(A, b, 0.4, 1.0, np.array([2.0, 1.0]))
    # the l2 rule is sufficient but not necessary
    b = np.array([0.5, 0.5])
    assert np.linalg.norm(A.T @ b) > 0.55 and block_skip_test(A, b, 0.55, 1.0, np.ones(2))


def test_skip_test_agrees_with_solve(rng):
    cfg = SolverConfig(eps_abs=1e-12, eps_rel=1e-12, max_admm_iters=50_000)
    for _ in range(20):
        A = rng.standard_normal((10, 4))
        b = rng.standard_normal(10)
        theta = rng.uniform(0.5, 2.0, 4)
        rho = 1.3
        edge = rho * np.max(np.abs(A.T @ b) / theta)
        for lam in (0.9 * edge, 1.1 * edge):
            w, _ = solve_weighted_lasso(A, b, theta, lam / rho, 1.0, cfg)
            assert block_skip_test(A, b, lam, rho, theta) == bool(np.all(w == 0))


def test_single_block_matches_direct_solve(rng):
    p, _ = sparse_problem(rng)
    theta = rng.uniform(0.5, 2.0, p.N)
    lam = 0.1 * p.lambda_max()
    w1, state = solve_sharing(p, partition_columns(p.N, 1), theta, lam, TIGHT)
    assert state.residual_report.converged
    w_ref = fista_weighted_lasso(p.A, p.y, theta, lam)
    f_ref = lasso_objective(p.A, p.y, w_ref, theta, lam)
    assert sharing_objective(p, w1, theta, lam) == pytest.approx(f_ref, rel=1e-8)


@pytest.mark.parametrize("P", [2, 3, 7, 20])
def test_partitions_reach_the_same_optimum(rng, P):
    p, _ = sparse_problem(rng)
    theta = rng.uniform(0.5, 2.0, p.N)
    lam = 0.1 * p.lambda_max()
    w, _ = solve_sharing(p, partition_columns(p.N, P), theta, lam, TIGHT)
    w_ref = fista_weighted_lasso(p.A, p.y, theta, lam)
    f_ref = lasso_objective(p.A, p.y, w_ref, theta, lam)
    assert sharing_objective(p, w, theta, lam) == pytest.approx(f_ref, rel=1e-6)


def test_inactive_columns_stay_zero(rng):
    p, _ = sparse_problem(rng)
    active = np.ones(p.N, dtype=bool)
    active[[0, 5, 6, 7, 8, 9]] = False  # block 2 of 4 is empty
    w, state = solve_sharing(p, partition_columns(p.N, 4), np.ones(p.N),
                             0.05 * p.lambda_max(), TIGHT, active=active)
    assert np.all(w[~active] == 0)
    ref = fista_weighted_lasso(p.A[:, active], p.y, np.ones(active.sum()),
                               0.05 * p.lambda_max())
    np.testing.assert_allclose(w[active], ref, atol=1e-6)


def test_residual_log_columns(rng):
    p, _ = sparse_problem(rng)
    _, state = solve_sharing(p, partition_columns(p.N, 2), np.ones(p.N),
                             0.1 * p.lambda_max(), SolverConfig())
    assert [row[0] for row in state.log] == list(range(1, state.iteration + 1))
    assert all(len(row) == 4 for row in state.log)


def test_worker_count_does_not_change_bits(rng):
    p, _ = sparse_problem(rng, M=60, N=30)
    theta = rng.uniform(0.5, 2.0, p.N)
    part = partition_columns(p.N, 6)
    lam = 0.05 * p.lambda_max()
    w1, s1 = solve_sharing(p, part, theta, lam, SolverConfig(workers=1))
    for workers in (2, 4):
        w, s = solve_sharing(p, part, theta, lam, SolverConfig(workers=workers))
        assert w.tobytes() == w1.tobytes()
        assert s.log == s1.log


def test_shared_pool_matches_private_pool(rng):
    p, _ = sparse_problem(rng)
    part = partition_columns(p.N, 3)
    lam = 0.1 * p.lambda_max()
    w1, _ = solve_sharing(p, part, np.ones(p.N), lam, SolverConfig())
    with BlockPool([p.A[:, s] for s in part.slices()], workers=2) as pool:
        w2, _ = solve_sharing(p, part, np.ones(p.N), lam, SolverConfig(), pool=pool)
    assert w1.tobytes() == w2.tobytes()


def test_dimension_checks(rng):
    p, _ = sparse_problem(rng)
    with pytest.raises(DimensionError):
        solve_sharing(p, partition_columns(p.N, 2), np.ones(p.N - 1), 1.0, SolverConfig())
    with pytest.raises(DimensionError):
        solve_sharing(p, partition_columns(p.N + 1, 2), np.ones(p.N), 1.0, SolverConfig())
    with pytest.raises(ValueError):
        solve_sharing(p, partition_columns(p.N, 2), np.ones(p.N), 0.0, SolverConfig())
