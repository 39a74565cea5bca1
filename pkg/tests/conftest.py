import numpy as np
import pytest

from netrecon.problem import RegressionProblem


def fista_weighted_lasso(A, b, theta, lam, tol=1e-10, max_iter=500_000):
    """Reference solver: accelerated proximal gradient with adaptive restart.

    Minimizes ``1/2 ||A w - b||^2 + lam * sum(theta * |w|)``. Stops when an
    iterate moves by less than ``tol`` relative.
    """
    A = np.asarray(A, dtype=float)
    L = np.linalg.norm(A, 2) ** 2
    step = 1.0 / L
    kappa = step * lam * np.asarray(theta, dtype=float)
    w = np.zeros(A.shape[1])
    v = w.copy()
    t = 1.0
    for _ in range(max_iter):
        g = A.T @ (A @ v - b)
        x = v - step * g
        w_new = np.sign(x) * np.maximum(np.abs(x) - kappa, 0.0)
        if np.dot(v - w_new, w_new - w) > 0:  # restart momentum
            t = 1.0
            v = w
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        v = w_new + ((t - 1.0) / t_new) * (w_new - w)
        if np.linalg.norm(w_new - w) <= tol * max(1.0, np.linalg.norm(w_new)):
            return w_new
        w, t = w_new, t_new
    raise RuntimeError("reference solver did not converge")


def lasso_objective(A, b, w, theta, lam):
    r = A @ w - b
    return 0.5 * float(r @ r) + lam * float(np.sum(theta * np.abs(w)))


def random_lasso_instance(rng, M=None, N=None):
    M = M or int(rng.integers(5, 51))
    N = N or int(rng.integers(2, 31))
    A = rng.standard_normal((M, N))
    w = np.zeros(N)
    k = max(1, N // 4)
    w[rng.choice(N, k, replace=False)] = rng.normal(0.0, 2.0, k)
    b = A @ w + 0.1 * rng.standard_normal(M)
    theta = rng.uniform(0.5, 2.0, N)
    lam = float(rng.uniform(0.05, 0.5) * np.max(np.abs(A.T @ b) / theta))
    return A, b, theta, lam


def sparse_problem(rng, M=40, N=20, k=5, sigma2=0.1):
    A = rng.standard_normal((M, N))
    w = np.zeros(N)
    w[rng.choice(N, k, replace=False)] = rng.normal(0.0, 3.0, k)
    y = A @ w + np.sqrt(sigma2) * rng.standard_normal(M)
    return RegressionProblem(y=y, A=A, sigma2=sigma2), w


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
