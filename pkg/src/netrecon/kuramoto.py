"""Ground-truth Kuramoto networks and their noisy discrete-time dynamics.

The recursion is

    phi_i(t_{k+1}) = phi_i(t_k) + dt * (omega_i + sum_j W[i, j] sin(phi_j - phi_i) + xi_i(t_k))

with ``W[i, j]`` the coupling from oscillator ``j`` into oscillator ``i``.
Phases are stored unwrapped.

All randomness comes from ``numpy.random.default_rng(seed)`` (PCG64). Within
:func:`generate_network` draws happen in the order: edge selection, edge
weights, natural frequencies. :func:`simulate` draws one ``(steps, n)``
block of standard normals and scales it by ``noise_std``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import DegenerateNetworkError, DivergenceError, UndefinedSNRError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class KuramotoModel:
    omega: np.ndarray
    W: np.ndarray
    coupling: str = "sin"

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        W = np.asarray(self.W, dtype=float)
        n = omega.shape[0]
        if W.shape != (n, n):
            raise ValueError(f"W has shape {W.shape}, expected {(n, n)}")
        if np.any(np.diag(W) != 0):
            raise ValueError("coupling matrix must have a zero diagonal")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(omega))):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    def edges(self):
        """Row/col indices of the nonzero couplings, row-major."""
        return np.nonzero(self.W)

    def drift(self, phases: np.ndarray) -> np.ndarray:
        """Noiseless right-hand side ``omega + sum_j W[i, j] sin(phi_j - phi_i)``."""
        rows, cols = self.edges()
        terms = self.W[rows, cols] * np.sin(phases[cols] - phases[rows])
        return self.omega + np.bincount(rows, weights=terms, minlength=self.n)


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    phases: np.ndarray
    dt: float
    noise_record: np.ndarray
    snr_db_realized: np.ndarray
    signal: np.ndarray
    noise_std: float = float("nan")

    @property
    def M(self) -> int:
        return self.phases.shape[0] - 1

    @property
    def n(self) -> int:
        return self.phases.shape[1]


def generate_network(n, density=0.1, weight_low=-10.0, weight_high=10.0,
                     omega_std=np.sqrt(10.0), seed=0) -> KuramotoModel:
    """Random directed coupling matrix with a fixed number of edges.

    Exactly ``round(density * n * (n - 1))`` off-diagonal entries are nonzero,
    picked uniformly without replacement; their weights are uniform on
    ``[weight_low, weight_high]`` and ``omega ~ N(0, omega_std**2)``.
    """
    if not weight_low < weight_high:
        raise ValueError(f"weight_low={weight_low} must be below weight_high={weight_high}")
    if not 0 < density <= 1:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    if not omega_std > 0:
        raise ValueError(f"omega_std must be positive, got {omega_std}")
    rng = np.random.default_rng(seed)
    slots = n * (n - 1)
    n_edges = int(np.floor(density * slots + 0.5))
    if n >= 2 and n_edges == 0:
        raise DegenerateNetworkError(
            f"density {density} gives no edges for a network of {n} nodes")

    off_diag = np.flatnonzero(~np.eye(n, dtype=bool))
    picked = np.sort(rng.choice(off_diag.size, size=n_edges, replace=False))
    weights = rng.uniform(weight_low, weight_high, size=n_edges)
    omega = rng.normal(0.0, omega_std, size=n)

    W = np.zeros(n * n)
    W[off_diag[picked]] = weights
    return KuramotoModel(omega=omega, W=W.reshape(n, n))


def initial_phases(n, seed=0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, TWO_PI, size=n)


def simulate(model: KuramotoModel, dt=0.1, steps=1000, x0=None, noise_std=0.0,
             seed=0) -> TimeSeries:
    """Iterate the noisy recursion ``steps`` times starting from ``x0``."""
    n = model.n
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if noise_std < 0:
        raise ValueError(f"noise_std must be nonnegative, got {noise_std}")
    x0 = np.asarray(x0, dtype=float) if x0 is not None else np.zeros(n)
    if x0.shape != (n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected {(n,)}")
    if np.any(x0 < 0) or np.any(x0 >= TWO_PI):
        raise ValueError("initial phases must lie in [0, 2*pi)")

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((steps, n)) * noise_std

    phases = np.empty((steps + 1, n))
    signal = np.empty((steps, n))
    phases[0] = x0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            signal[k] = model.drift(phases[k])
            phases[k + 1] = phases[k] + dt * (signal[k] + noise[k])
            if not np.all(np.isfinite(phases[k + 1])):
                raise DivergenceError(k + 1)

    times = dt * np.arange(steps + 1)
    signal_norm = np.linalg.norm(signal, axis=0)
    noise_norm = np.linalg.norm(noise, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = 20.0 * np.log10(signal_norm / noise_norm)
    return TimeSeries(times=times, phases=phases, dt=float(dt), noise_record=noise,
                      snr_db_realized=snr, signal=signal, noise_std=float(noise_std))


def recover_noise(model: KuramotoModel, series: TimeSeries) -> np.ndarray:
    """Invert the recursion: the noise that maps each stored phase to the next."""
    increments = np.diff(series.phases, axis=0) / series.dt
    drift = np.array([model.drift(p) for p in series.phases[:-1]])
    return increments - drift


def calibrate_noise_for_snr(model: KuramotoModel, dt, steps, x0, target_snr_db, node,
                            seed=0, tol_db=0.5, max_iter=50) -> float:
    """Noise level whose simulation hits ``target_snr_db`` on ``node``.

    The noise draws are fixed by ``seed``, so the noise norm scales linearly
    with ``noise_std``; the signal moves a little with the trajectory. A few
    fixed-point rescalings usually suffice; otherwise the realized SNR, which
    is continuous in ``log(noise_std)``, is bracketed and solved with Brent's
    method.
    """
    if not np.isfinite(target_snr_db):
        raise ValueError(f"target SNR must be finite, got {target_snr_db}")
    clean = simulate(model, dt, steps, x0, 0.0, seed)
    signal_norm = np.linalg.norm(clean.signal[:, node])
    if signal_norm == 0:
        raise UndefinedSNRError(f"node {node} has a zero noiseless signal")
    unit = np.random.default_rng(seed).standard_normal((steps, model.n))[:, node]
    noise_std = signal_norm / (np.linalg.norm(unit) * 10.0 ** (target_snr_db / 20.0))

    def gap(log_std):
        realized = simulate(model, dt, steps, x0, float(np.exp(log_std)), seed).snr_db_realized[node]
        if not np.isfinite(realized):
            raise UndefinedSNRError(f"node {node} has a zero signal at noise_std={np.exp(log_std)}")
        return realized - target_snr_db

    for _ in range(min(10, max_iter)):
        g = gap(np.log(noise_std))
        if abs(g) <= tol_db:
            return float(noise_std)
        noise_std *= 10.0 ** (g / 20.0)

    # the SNR falls as the noise grows; widen until the target is bracketed
    lo = hi = np.log(noise_std)
    width = np.log(2.0)
    for _ in range(max_iter):
        lo, hi = lo - width, hi + width
        g_lo, g_hi = gap(lo), gap(hi)
        if g_lo > 0 > g_hi:
            break
    else:
        raise UndefinedSNRError(
            f"noise calibration for node {node} could not bracket {target_snr_db} dB")
    log_std = scipy.optimize.brentq(gap, lo, hi, xtol=1e-10, maxiter=max_iter)
    g = gap(log_std)
    if abs(g) > tol_db:
        raise UndefinedSNRError(
            f"noise calibration for node {node} missed {target_snr_db} dB by {g:.3g} dB")
    return float(np.exp(log_std))
