"""Order-two U-statistics, their trajectories and their expectation."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._numeric import compensated_cumsum
from .errors import NumericError
from .kernels import Estimate, PairKernel
from .processes import ShiftProcess
from .rng import as_stream

_CHUNK_ELEMENTS = 4_000_000


def _row_sums(kernel: PairKernel, x: np.ndarray) -> np.ndarray:
    """``r[j] = sum_{i<j} h(x_i, x_j)`` for ``j = 0..n-1``."""
    n = x.shape[0]
    if kernel.features is not None:
        a, b = kernel.features(x)
        out = np.zeros(n)
        for ar, br in zip(a, b):
            lower = compensated_cumsum(ar)
            out[1:] += br[1:] * lower[:-1]
        return out
    out = np.zeros(n)
    rows = max(1, _CHUNK_ELEMENTS // max(n, 1))
    for j0 in range(1, n, rows):
        j1 = min(n, j0 + rows)
        block = kernel(x[None, :j1 - 1], x[j0:j1, None])
        # sequential accumulation: row j never depends on the chunk width
        acc = np.cumsum(block, axis=1)
        out[j0:j1] = acc[np.arange(j1 - j0), np.arange(j0, j1) - 1]
    return out


def u_statistic_prefixes(kernel: PairKernel, values) -> np.ndarray:
    """``(U_2, ..., U_n)`` from ``U_m = U_{m-1} + sum_{i<m} h(X_i, X_m)``."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise ValueError("need at least two observations")
    traj = compensated_cumsum(_row_sums(kernel, x))[1:]
    if not np.all(np.isfinite(traj)):
        raise NumericError(f"non-finite U-statistic for kernel {kernel.name}")
    return traj


def u_statistic(kernel: PairKernel, values) -> float:
    """``U_n = sum_{1<=i<j<=n} h(X_i, X_j)``."""
    return float(u_statistic_prefixes(kernel, values)[-1])


def u_statistic_ind(kernel, data) -> float:
    """Pair sum of ``kernel`` over the rows of ``data`` (shape ``(n, d)``).

    ``kernel`` takes two arrays of shape ``(..., d)``.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    n = data.shape[0]
    if n < 2:
        return 0.0
    rows = np.empty(n - 1)
    for j in range(1, n):
        rows[j - 1] = float(np.sum(kernel(data[:j], np.broadcast_to(data[j], data[:j].shape))))
    return float(compensated_cumsum(rows)[-1])


def _lag_means_analytic(kernel, process, lags):
    mu = process.level_mean()
    g0 = process.level_autocovariance(None, 0)
    m2 = g0 + mu * mu
    return np.array([kernel.moment_form(mu, m2, mu, m2, process.level_autocovariance(None, k) + mu * mu)
                     for k in lags])


def lag_design(n_max: int, process: ShiftProcess) -> int:
    """Largest lag needing its own mean: beyond ``2W+1`` the pair law is constant."""
    return max(1, min(n_max - 1, 2 * process.halfwidth + 1))


def lag_samples(kernel, process, K, R, stream):
    """``R`` draws of ``h(X_0, X_k)``, ``k = 1..K``, shape ``(R, K)``."""
    w = process.halfwidth
    rng_stream = as_stream(stream)
    out = np.empty((R, K))
    per = max(1, _CHUNK_ELEMENTS // (K + 2 * w + 1))
    for s in range(0, R, per):
        c = min(per, R - s)
        eps = process.innovation.draw(rng_stream.child("lags", s).generator(), (c, K + 2 * w + 1))
        x = process.functional(sliding_window_view(eps, 2 * w + 1, axis=1))
        out[s:s + c] = kernel(x[:, :1], x[:, 1:])
    return out


def _coefficients(n, K):
    """Weights ``c_k`` with ``E U_n = sum_k c_k E h(X_0, X_k)``, lags ``>= K`` pooled."""
    k = np.arange(1, K + 1)
    c = (n - k).astype(np.float64)
    c = np.where(k <= n - 1, c, 0.0)
    if n - 1 > K:
        # sum_{k=K}^{n-1} (n - k)
        c[-1] = (n - K) * (n - K + 1) / 2.0
    return c


def expected_u(kernel: PairKernel, process: ShiftProcess, n: int, R=100_000, stream=None) -> Estimate:
    """``E U_n = sum_{k=1}^{n-1} (n-k) E h(X_0, X_k)`` by stationarity."""
    if n < 2:
        raise ValueError("n must be >= 2")
    K = lag_design(n, process)
    coef = _coefficients(n, K)
    if kernel.analytic and process.is_linear:
        return Estimate(float(coef @ _lag_means_analytic(kernel, process, range(1, K + 1))), 0.0)
    if R < 2:
        raise ValueError("R must be >= 2")
    z = lag_samples(kernel, process, K, R, stream) @ coef
    return Estimate(float(z.mean()), float(z.std(ddof=1) / np.sqrt(R)))


def expected_u_prefixes(kernel: PairKernel, process: ShiftProcess, n_max: int, R=100_000,
                        stream=None) -> np.ndarray:
    """``E U_m`` for ``m = 2..n_max`` (point estimates)."""
    K = lag_design(n_max, process)
    if kernel.analytic and process.is_linear:
        means = _lag_means_analytic(kernel, process, range(1, K + 1))
    else:
        if R < 2:
            raise ValueError("R must be >= 2")
        means = lag_samples(kernel, process, K, R, stream).mean(axis=0)
    m = np.arange(2, n_max + 1, dtype=np.float64)
    out = np.zeros_like(m)
    for k in range(1, K):
        out += np.where(m - 1 >= k, (m - k) * means[k - 1], 0.0)
    # lags K..m-1 share the last mean
    tail = np.where(m - 1 >= K, (m - K) * (m - K + 1) / 2.0, 0.0)
    return out + tail * means[K - 1]
