import numba
import numpy as np


@numba.njit(cache=True)
def _neumaier_cumsum(x):
    out = np.empty_like(x)
    s = 0.0
    c = 0.0
    for k in range(x.shape[0]):
        v = x[k]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[k] = s + c
    return out


def compensated_cumsum(x):
    """Cumulative sum with Neumaier compensation (1-d float64)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("compensated_cumsum expects a 1-d array")
    return _neumaier_cumsum(x)


def lp_norm_with_se(samples, p, batches=50):
    """L^p norm of the sample law and its batch-means standard error.

    The standard error of ``mean(|x|^p)`` is estimated from ``batches``
    contiguous batches and mapped to the norm by the delta method.
    """
    a = np.abs(np.asarray(samples, dtype=np.float64)) ** p
    moment = float(a.mean())
    nb = min(batches, a.size)
    if nb >= 2:
        usable = (a.size // nb) * nb
        bm = a[:usable].reshape(nb, -1).mean(axis=1)
        se_moment = float(bm.std(ddof=1) / np.sqrt(nb))
    else:
        se_moment = 0.0
    norm = moment ** (1.0 / p)
    if moment > 0.0:
        se = se_moment * (1.0 / p) * moment ** (1.0 / p - 1.0)
    else:
        se = 0.0
    return norm, se
