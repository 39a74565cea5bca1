"""Plain-text file formats.

Matrices are CSV with a ``# rows=M cols=N`` header line followed by ``M``
comma-separated rows. Vectors are single-column matrices. Configs and
metadata are flat ``key=value`` files.
"""

from __future__ import annotations

import dataclasses
import re
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError
from .problem import RegressionProblem, SolverConfig

_HEADER = re.compile(r"#\s*rows=(\d+)\s+cols=(\d+)\s*$")


def write_matrix(path, X) -> None:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    M, N = X.shape
    with open(path, "w") as fh:
        fh.write(f"# rows={M} cols={N}\n")
        for row in X:
            # repr round-trips float64 exactly
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline()
        m = _HEADER.match(header.strip())
        if not m:
            raise DimensionError(str(path), f"missing '# rows=M cols=N' header, got {header!r}")
        M, N = int(m.group(1)), int(m.group(2))
        rows = [line for line in fh if line.strip()]
    if len(rows) != M:
        raise DimensionError(str(path), f"header says {M} rows, found {len(rows)}")
    X = np.empty((M, N))
    for i, line in enumerate(rows):
        parts = line.strip().split(",")
        if len(parts) != N:
            raise DimensionError(str(path), f"row {i} has {len(parts)} columns, expected {N}")
        X[i] = [float(v) for v in parts]
    return X


def read_vector(path) -> np.ndarray:
    X = read_matrix(path)
    if X.shape[1] != 1:
        raise DimensionError(str(path), f"expected a single column, got {X.shape[1]}")
    return X[:, 0]


def write_labels(path, labels) -> None:
    with open(path, "w") as fh:
        fh.write("label\n")
        for label in labels:
            fh.write(f"{label}\n")


def read_labels(path) -> list:
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh]
    return [line for line in lines[1:] if line]


def write_keyvalue(path, mapping) -> None:
    with open(path, "w") as fh:
        for key, value in mapping.items():
            fh.write(f"{key}={value}\n")


def read_keyvalue(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def config_to_dict(cfg: SolverConfig) -> dict:
    return dataclasses.asdict(cfg)


def write_config(path, cfg: SolverConfig) -> None:
    write_keyvalue(path, config_to_dict(cfg))


def read_config(path, base: SolverConfig | None = None) -> SolverConfig:
    """Load a config file; keys must be :class:`SolverConfig` field names."""
    raw = read_keyvalue(path)
    base = base or SolverConfig()
    types = {f.name: type(getattr(base, f.name)) for f in dataclasses.fields(SolverConfig)}
    unknown = sorted(set(raw) - set(types))
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    try:
        values = {k: types[k](float(v)) if types[k] is int else types[k](v) for k, v in raw.items()}
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return base.replace(**values)


def problem_paths(prefix) -> dict:
    prefix = str(prefix)
    return {
        "A": Path(prefix + "_A.csv"),
        "y": Path(prefix + "_y.csv"),
        "labels": Path(prefix + "_labels.csv"),
        "meta": Path(prefix + "_meta.txt"),
    }


def save_problem(prefix, problem: RegressionProblem, extra_meta=None) -> dict:
    paths = problem_paths(prefix)
    write_matrix(paths["A"], problem.A)
    write_matrix(paths["y"], problem.y)
    write_labels(paths["labels"], problem.column_labels)
    meta = {"sigma2": repr(float(problem.sigma2)), "M": problem.M, "N": problem.N}
    meta.update(extra_meta or {})
    write_keyvalue(paths["meta"], meta)
    return paths


def load_problem(prefix, sigma2=None) -> RegressionProblem:
    paths = problem_paths(prefix)
    A = read_matrix(paths["A"])
    y = read_vector(paths["y"])
    labels = read_labels(paths["labels"]) if paths["labels"].exists() else ()
    meta = read_keyvalue(paths["meta"]) if paths["meta"].exists() else {}
    if sigma2 is None:
        sigma2 = float(meta.get("sigma2", 0.0))
    return RegressionProblem(y=y, A=A, sigma2=sigma2, column_labels=tuple(labels))
