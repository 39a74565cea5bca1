import numpy as np
import pytest

from netrecon import io
from netrecon.errors import ConfigError, DimensionError
from netrecon.problem import RegressionProblem, SolverConfig


def test_matrix_roundtrip_is_exact(tmp_path, rng):
    X = rng.standard_normal((4, 3)) * 10.0 ** rng.integers(-300, 300, (4, 3))
    path = tmp_path / "x.csv"
    io.write_matrix(path, X)
    assert path.read_text().splitlines()[0] == "# rows=4 cols=3"
    np.testing.assert_array_equal(io.read_matrix(path), X)


def test_vector_roundtrip(tmp_path):
    v = np.array([1.0, -0.1, 1e-17])
    io.write_matrix(tmp_path / "v.csv", v)
    np.testing.assert_array_equal(io.read_vector(tmp_path / "v.csv"), v)


def test_bad_header_and_ragged_rows(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n")
    with pytest.raises(DimensionError):
        io.read_matrix(p)
    p.write_text("# rows=2 cols=2\n1,2\n3\n")
    with pytest.raises(DimensionError):
        io.read_matrix(p)
    p.write_text("# rows=3 cols=1\n1\n2\n")
    with pytest.raises(DimensionError):
        io.read_matrix(p)


def test_config_roundtrip(tmp_path):
    cfg = SolverConfig(rho=2.5, max_admm_iters=50, workers=3, eps_rel=1e-3)
    io.write_config(tmp_path / "c.txt", cfg)
    assert io.read_config(tmp_path / "c.txt") == cfg


def test_config_rejects_unknown_keys(tmp_path):
    (tmp_path / "c.txt").write_text("rho=1\nalpha=2\n")
    with pytest.raises(ConfigError):
        io.read_config(tmp_path / "c.txt")
    (tmp_path / "c.txt").write_text("rho\n")
    with pytest.raises(ConfigError):
        io.read_config(tmp_path / "c.txt")
    (tmp_path / "c.txt").write_text("rho=-1\n")
    with pytest.raises(ConfigError):
        io.read_config(tmp_path / "c.txt")


def test_problem_roundtrip(tmp_path, rng):
    p = RegressionProblem(rng.standard_normal(5), rng.standard_normal((5, 3)), 0.25,
                          ("sin(x1-x0)", "cos(x1-x0)", "const"))
    io.save_problem(tmp_path / "p", p, {"node": 0})
    q = io.load_problem(tmp_path / "p")
    np.testing.assert_array_equal(q.A, p.A)
    np.testing.assert_array_equal(q.y, p.y)
    assert q.sigma2 == p.sigma2
    assert q.column_labels == p.column_labels
    assert io.load_problem(tmp_path / "p", sigma2=2.0).sigma2 == 2.0
