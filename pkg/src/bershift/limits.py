"""Monte Carlo experiments for the limit behaviour of ``U_n - E U_n``.

Normalisations: ``n^{-(1+1/p)}`` for the Marcinkiewicz law, ``n^{-3/2}
LL(n)^{-1/2}`` for the iterated logarithm and ``n^{-3/2}`` for the central
limit theorem, whose variance is ``sigma^2 = sum_k Cov(Y_0, Y_k)`` with
``Y_k = E[h(X_k, X') | X_k] - E h(X, X')``.

Replication ``r`` always draws from ``stream.child("rep", r)``, so the
number of workers never changes a result.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .dependence import theta_coefficient
from .errors import ConfigurationError, DegenerateVarianceError
from .hoeffding import (DEFAULT_CENTER_SAMPLES, DEFAULT_COND_SAMPLES, REMAINDER_NAMES, LevelSystem,
                        decompose_path, path_margin)
from .kernels import PairKernel
from .processes import DEFAULT_TAIL_SAMPLES, ShiftProcess, generate_path
from .rng import as_stream
from .ustat import expected_u, expected_u_prefixes, u_statistic, u_statistic_prefixes

QUANTILE_LEVELS = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)


@dataclass
class ExperimentReport:
    name: str
    config: dict
    seed: int
    columns: list
    statistics: np.ndarray
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    runtime: float = 0.0


def parallel_map(fn, items, workers=1):
    """``[fn(x) for x in items]`` on a thread pool; order is preserved."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(fn, items))


def ll_function(x) -> float:
    """``LL(x) = L(L(x))`` with ``L(x) = max(ln x, 1)``."""
    if np.any(np.asarray(x) < 0):
        raise ValueError("LL is defined for x >= 0")

    def L(t):
        with np.errstate(divide="ignore"):
            return np.maximum(np.log(t), 1.0)

    out = L(L(np.asarray(x, dtype=np.float64)))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- projections and sigma^2

def _y_system(kernel, process, M, stream, tail_samples=DEFAULT_TAIL_SAMPLES,
              center_samples=DEFAULT_CENTER_SAMPLES):
    return LevelSystem(kernel, process, tail_samples, M, center_samples, as_stream(stream).child("projection"))


def y_value(kernel: PairKernel, process: ShiftProcess, ell: int, window, M=DEFAULT_COND_SAMPLES, stream=None,
            tail_samples=DEFAULT_TAIL_SAMPLES, center_samples=DEFAULT_CENTER_SAMPLES):
    """Centred ``Y_{k,l} = E[h(f_l(V), f_l(V')) | V] - E h(f_l(V), f_l(V'))``.

    ``window`` has length ``2l+1`` (or is a stack of such windows).
    """
    window = np.asarray(window, dtype=np.float64)
    if window.shape[-1] != 2 * ell + 1:
        raise ValueError(f"window must have length {2 * ell + 1}")
    system = _y_system(kernel, process, M, stream, tail_samples, center_samples)
    x = system.f(ell, window)
    out = system.psi(ell, x) - system.pair_means(ell)[-1]
    return float(out) if np.ndim(out) == 0 else out


class SigmaSquared(NamedTuple):
    sigma2: float
    se: float
    covariances: np.ndarray


def _autocov(y, K):
    y = y - y.mean()
    n = y.shape[0]
    return np.array([np.dot(y[:n - k], y[k:]) / n for k in range(K + 1)])


def sigma_squared(kernel: PairKernel, process: ShiftProcess, K_max: int, path_length=1_000_000, R=1,
                  M=DEFAULT_COND_SAMPLES, stream=None, batches=50) -> SigmaSquared:
    """``sum_{|k| <= K_max} Cov(Y_0, Y_k)`` from long simulated paths.

    The standard error comes from ``batches`` contiguous batches of each
    path.
    """
    if K_max < 0:
        raise ValueError("K_max must be >= 0")
    if path_length < batches * (K_max + 2):
        raise ValueError("path too short for the requested lags and batches")
    stream = as_stream(stream)
    system = _y_system(kernel, process, M, stream)
    w = process.halfwidth
    center = system.pair_means(w)[-1]
    ys = []
    for r in range(R):
        path = generate_path(process, path_length, stream.child("sigma", r))
        ys.append(system.psi(w, path.values) - center)
    cov = np.mean([_autocov(y, K_max) for y in ys], axis=0)
    sigma2 = float(cov[0] + 2.0 * cov[1:].sum())
    per_batch = []
    for y in ys:
        size = y.shape[0] // batches
        for b in range(batches):
            c = _autocov(y[b * size:(b + 1) * size], K_max)
            per_batch.append(c[0] + 2.0 * c[1:].sum())
    per_batch = np.asarray(per_batch)
    se = float(per_batch.std(ddof=1) / np.sqrt(per_batch.size))
    return SigmaSquared(sigma2, se, cov)


def check_variance(sig: SigmaSquared):
    if sig.sigma2 <= 2.0 * sig.se:
        raise DegenerateVarianceError(
            f"degenerate-variance: sigma^2 estimate {sig.sigma2:.3g} is within 2 SE ({sig.se:.3g}) of 0; "
            "the n^(-3/2) normalisation does not apply")


# ---------------------------------------------------------------- experiments

def _report(name, config, stream, columns, rows, summary, start, tables=None):
    stats_arr = np.asarray(rows, dtype=np.float64)
    return ExperimentReport(name, config, as_stream(stream).seed, list(columns), stats_arr, summary,
                            tables or {}, time.perf_counter() - start)


def clt_experiment(kernel: PairKernel, process: ShiftProcess, n: int, R: int, K_max: int, stream=None,
                   sigma_path=1_000_000, center_R=100_000, M=DEFAULT_COND_SAMPLES, workers=1,
                   sigma: SigmaSquared | None = None) -> ExperimentReport:
    """``R`` replicates of ``n^{-3/2}(U_n - E U_n)`` against ``N(0, sigma^2)``."""
    if n < 2 or R < 2:
        raise ValueError("need n >= 2 and R >= 2")
    start = time.perf_counter()
    stream = as_stream(stream)
    sig = sigma if sigma is not None else sigma_squared(kernel, process, K_max, sigma_path, 1, M,
                                                        stream.child("sigma"))
    check_variance(sig)
    mean_u = expected_u(kernel, process, n, center_R, stream.child("center"))
    scale = n ** -1.5

    def one(r):
        path = generate_path(process, n, stream.child("rep", r))
        return scale * (u_statistic(kernel, path.values) - mean_u.value)

    z = np.asarray(parallel_map(one, range(R), workers))
    sd = np.sqrt(sig.sigma2)
    ks = stats.kstest(z, "norm", args=(0.0, sd))
    emp_q = np.quantile(z, QUANTILE_LEVELS)
    norm_q = stats.norm.ppf(QUANTILE_LEVELS, scale=sd)
    summary = {
        "n": n, "R": R, "K_max": K_max,
        "sigma2_hat": sig.sigma2, "sigma2_se": sig.se,
        "expected_u": mean_u.value, "expected_u_se": mean_u.se,
        "mean": float(z.mean()), "mean_se": float(z.std(ddof=1) / np.sqrt(R)),
        "variance": float(z.var(ddof=1)),
        "variance_ratio": float(z.var(ddof=1) / sig.sigma2),
        "ks_distance": float(ks.statistic), "ks_pvalue": float(ks.pvalue),
    }
    table = np.column_stack([QUANTILE_LEVELS, emp_q, norm_q])
    return _report("clt", {}, stream, ["replication", "statistic"], np.column_stack([np.arange(R), z]),
                   summary, start, {"quantiles": table, "covariances": sig.covariances})


def default_checkpoints(n_max, first=250):
    out = []
    c = first
    while c <= n_max // 2:
        out.append(c)
        c *= 2
    return out or [max(2, n_max // 2)]


def lln_experiment(kernel: PairKernel, process: ShiftProcess, p: float, n_max: int, checkpoints=None, R=100,
                   stream=None, center_R=100_000, workers=1) -> ExperimentReport:
    """Tail maxima ``T(N) = max_{N<=n<=n_max} n^{-(1+1/p)} |U_n - E U_n|`` per replication."""
    if not 1 <= p < 2:
        raise ConfigurationError("p in [1,2) is required for the Marcinkiewicz normalisation", "p")
    checkpoints = default_checkpoints(n_max) if checkpoints is None else sorted(int(c) for c in checkpoints)
    if not checkpoints or checkpoints[0] < 2 or checkpoints[-1] > n_max:
        raise ValueError("checkpoints must lie in [2, n_max]")
    start = time.perf_counter()
    stream = as_stream(stream)
    mean_u = expected_u_prefixes(kernel, process, n_max, center_R, stream.child("center"))
    ns = np.arange(2, n_max + 1, dtype=np.float64)
    scale = ns ** -(1.0 + 1.0 / p)
    idx = np.asarray(checkpoints) - 2

    def one(r):
        path = generate_path(process, n_max, stream.child("rep", r))
        dev = scale * np.abs(u_statistic_prefixes(kernel, path.values) - mean_u)
        tail_max = np.maximum.accumulate(dev[::-1])[::-1]
        return tail_max[idx]

    T = np.asarray(parallel_map(one, range(R), workers))
    summary = {"p": p, "n_max": n_max, "R": R}
    with np.errstate(divide="ignore", invalid="ignore"):
        for k, c in enumerate(checkpoints):
            summary[f"median_T_{c}"] = float(np.median(T[:, k]))
            summary[f"q90_T_{c}"] = float(np.quantile(T[:, k], 0.9))
            if k:
                ratio = T[:, k] / T[:, 0]
                summary[f"median_ratio_{c}_{checkpoints[0]}"] = float(np.median(ratio))
                summary[f"q90_ratio_{c}_{checkpoints[0]}"] = float(np.quantile(ratio, 0.9))
    cols = ["replication"] + [f"T_{c}" for c in checkpoints]
    return _report("lln", {}, stream, cols, np.column_stack([np.arange(R), T]), summary, start)


def lil_statistic(kernel: PairKernel, process: ShiftProcess, n_max: int, R=200, stream=None, checkpoints=None,
                  center_R=100_000, workers=1) -> ExperimentReport:
    """Running suprema ``S(N) = max_{2<=n<=N} n^{-3/2} LL(n)^{-1/2} |U_n - E U_n|``."""
    checkpoints = [n_max // 2, n_max] if checkpoints is None else sorted(int(c) for c in checkpoints)
    if checkpoints[0] < 2 or checkpoints[-1] > n_max:
        raise ValueError("checkpoints must lie in [2, n_max]")
    start = time.perf_counter()
    stream = as_stream(stream)
    mean_u = expected_u_prefixes(kernel, process, n_max, center_R, stream.child("center"))
    ns = np.arange(2, n_max + 1, dtype=np.float64)
    scale = ns ** -1.5 / np.sqrt(ll_function(ns))
    idx = np.asarray(checkpoints) - 2

    def one(r):
        path = generate_path(process, n_max, stream.child("rep", r))
        dev = scale * np.abs(u_statistic_prefixes(kernel, path.values) - mean_u)
        return np.maximum.accumulate(dev)[idx]

    S = np.asarray(parallel_map(one, range(R), workers))
    summary = {"n_max": n_max, "R": R}
    for k, c in enumerate(checkpoints):
        for q in (0.5, 0.9, 0.99):
            summary[f"q{int(round(q * 100))}_S_{c}"] = float(np.quantile(S[:, k], q))
    if len(checkpoints) >= 2:
        lo, hi = checkpoints[-2], checkpoints[-1]
        a, b = summary[f"q99_S_{hi}"], summary[f"q99_S_{lo}"]
        summary[f"q99_ratio_{hi}_{lo}"] = float(a / b) if b > 0 else float("nan")
    cols = ["replication"] + [f"S_{c}" for c in checkpoints]
    return _report("lil", {}, stream, cols, np.column_stack([np.arange(R), S]), summary, start)


REMAINDER_COLUMNS = ("R11", "R12", "R2", "R3", "R4", "R5", "R6", "R7", "Rproj")


def remainder_decay(kernel: PairKernel, process: ShiftProcess, n_grid, L_max: int | None = None, R=50,
                    stream=None, M=DEFAULT_COND_SAMPLES, tail_samples=DEFAULT_TAIL_SAMPLES,
                    center_samples=DEFAULT_CENTER_SAMPLES, theta_R=100_000, workers=1) -> ExperimentReport:
    """``n^{-3/2} E|R|`` for every remainder of the level decomposition along ``n_grid``.

    Remainders are summed over levels ``1..L_max`` before taking absolute
    values.  ``R7`` is the gap between the block-scaled and the plain linear
    sums; its bound ``2 n^{-1/2} sum_l l theta_{l,1}`` is evaluated with the
    dependence estimates.
    """
    grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n grid must be increasing")
    start = time.perf_counter()
    stream = as_stream(stream)
    L = process.halfwidth if L_max is None else int(L_max)
    system = LevelSystem(kernel, process, tail_samples, M, center_samples, stream.child("levels"))
    # populate shared caches before threads use them
    for ell in range(L + 1):
        system.level_kernel(ell)
    margin = path_margin(process, L)

    def one(task):
        n, r = task
        path = generate_path(process, n, stream.child("rep", n, r), margin=margin)
        dec = decompose_path(system, path, L)
        vals = [dec.remainder_total(k) for k in REMAINDER_NAMES if k != "Rproj"]
        vals += [dec.r7, dec.remainder_total("Rproj")]
        return n ** -1.5 * np.abs(np.asarray(vals))

    tasks = [(n, r) for n in grid for r in range(R)]
    vals = np.asarray(parallel_map(one, tasks, workers)).reshape(len(grid), R, len(REMAINDER_COLUMNS))
    means = vals.mean(axis=1)
    ses = vals.std(axis=1, ddof=1) / np.sqrt(R)
    thetas = [theta_coefficient(kernel, process, ell, 1.0, theta_R, tail_samples, stream.child("theta", ell))
              for ell in range(1, L + 1)]
    lt = float(sum(ell * t.theta for ell, t in zip(range(1, L + 1), thetas)))
    lt_se = float(np.sqrt(sum((ell * t.se) ** 2 for ell, t in zip(range(1, L + 1), thetas))))
    bound = np.array([2.0 * n ** -0.5 * lt for n in grid])
    bound_se = np.array([2.0 * n ** -0.5 * lt_se for n in grid])
    r7 = REMAINDER_COLUMNS.index("R7")
    summary = {"L_max": L, "R": R, "sum_l_theta_l1": lt}
    for k, name in enumerate(REMAINDER_COLUMNS):
        first = means[0, k]
        summary[f"ratio_{name}"] = float(means[-1, k] / first) if first > 0 else 0.0
    dominated = means[:, r7] <= bound + 3.0 * np.hypot(ses[:, r7], bound_se)
    summary["r7_bound_holds"] = bool(np.all(dominated))
    rows = [[n, r] + list(vals[i, r]) for i, n in enumerate(grid) for r in range(R)]
    tables = {"means": np.column_stack([grid, means]), "ses": np.column_stack([grid, ses]),
              "r7_bound": np.column_stack([grid, means[:, r7], ses[:, r7], bound, bound_se])}
    return _report("remainders", {}, stream, ["n", "replication"] + list(REMAINDER_COLUMNS), rows, summary,
                   start, tables)
