import math

import numpy as np
import pytest

from netrecon.errors import UndefinedMetricError, UndefinedSNRError
from netrecon.metrics import nmse, snr_db, support_metrics


def test_nmse_examples():
    w = np.array([0.0, 1.0])
    assert nmse(w, w) == 0.0
    assert nmse(np.zeros(2), w) == 1.0
    assert nmse(np.array([1.0, 0.0]), w) == pytest.approx(math.sqrt(2))
    with pytest.raises(UndefinedMetricError):
        nmse(w, np.zeros(2))
    with pytest.raises(ValueError):
        nmse(np.zeros(3), w)


def test_snr_examples():
    A = np.eye(2)
    w = np.array([3.0, 4.0])
    assert snr_db(A, w, np.array([0.5, 0.0])) == pytest.approx(20.0)
    assert snr_db(A, w, np.array([0.0, 5.0])) == pytest.approx(0.0)
    assert snr_db(A, w, np.zeros(2)) == math.inf
    with pytest.raises(UndefinedSNRError):
        snr_db(A, np.zeros(2), np.ones(2))


def test_support_examples():
    w = np.array([0.0, 2.0, -1.0, 0.0])
    assert support_metrics(w, w) == (1.0, 1.0, True)
    assert support_metrics(np.zeros(4), w) == (1.0, 0.0, False)
    assert support_metrics(np.array([1.0, 2.0, 0.0, 0.0]), w) == (0.5, 0.5, True)
    with pytest.raises(ValueError):
        support_metrics(w, w, -1.0)


def test_support_ignores_small_perturbations(rng):
    w = np.zeros(30)
    w[rng.choice(30, 6, replace=False)] = rng.uniform(1.0, 5.0, 6)
    tol = 1e-3
    noise = rng.uniform(-1, 1, 30) * 0.5 * tol * np.linalg.norm(w) / np.sqrt(30)
    w_hat = w + np.where(w == 0, noise, 0.0)
    assert np.count_nonzero(w_hat) == 30
    assert support_metrics(w_hat, w, tol)[:2] == (1.0, 1.0)
