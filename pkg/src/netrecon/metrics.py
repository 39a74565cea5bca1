"""Reconstruction error metrics."""

from __future__ import annotations

import math

import numpy as np

from .errors import UndefinedMetricError, UndefinedSNRError


def nmse(w_hat, w_true) -> float:
    """Normalized error ``||w_hat - w_true|| / ||w_true||`` (Euclidean norms)."""
    w_hat = np.asarray(w_hat, dtype=float)
    w_true = np.asarray(w_true, dtype=float)
    if w_hat.shape != w_true.shape:
        raise ValueError(f"shapes differ: {w_hat.shape} vs {w_true.shape}")
    denom = np.linalg.norm(w_true)
    if denom == 0:
        raise UndefinedMetricError("nmse is undefined for an all-zero true vector")
    return float(np.linalg.norm(w_hat - w_true) / denom)


def snr_db(A, w_true, xi) -> float:
    """``20 log10(||A w_true|| / ||xi||)``.

    Returns ``inf`` when the noise is identically zero; a zero signal raises
    :class:`UndefinedSNRError`.
    """
    signal = float(np.linalg.norm(np.asarray(A, dtype=float) @ np.asarray(w_true, dtype=float)))
    noise = float(np.linalg.norm(xi))
    if signal == 0:
        raise UndefinedSNRError("noiseless prediction A w is identically zero")
    if noise == 0:
        return math.inf
    return 20.0 * math.log10(signal / noise)


def support_metrics(w_hat, w_true, rel_tol=1e-4):
    """Precision and recall of the predicted support against the true one.

    The predicted support is ``{j : |w_hat_j| >= rel_tol * ||w_hat||}``, the
    true support is the nonzeros of ``w_true``. Returns
    ``(precision, recall, precision_defined)``; an empty prediction has
    precision 1 by convention and ``precision_defined=False``. Recall is 1 when
    the true support is empty.
    """
    if rel_tol < 0:
        raise ValueError(f"rel_tol must be nonnegative, got {rel_tol}")
    w_hat = np.asarray(w_hat, dtype=float)
    w_true = np.asarray(w_true, dtype=float)
    scale = np.linalg.norm(w_hat)
    predicted = (np.abs(w_hat) >= rel_tol * scale) & (w_hat != 0)
    true = w_true != 0
    hits = int(np.count_nonzero(predicted & true))
    n_pred = int(np.count_nonzero(predicted))
    n_true = int(np.count_nonzero(true))
    if n_pred == 0:
        precision, defined = 1.0, False
    else:
        precision, defined = hits / n_pred, True
    recall = hits / n_true if n_true else 1.0
    return precision, recall, defined
