"""Innovation streams and shift functionals ``X_j = f((eps_{j-k})_k)``.

Windows are stored in innovation-index order: for a window of halfwidth
``w`` centred at ``j``, ``window[k + w] = eps_{j+k}`` for ``k = -w..w``.
Linear functionals follow the moving-average convention
``X_j = sum_i a_i eps_{j-i}``, so coefficient ``a_i`` multiplies window
position ``-i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError
from .rng import Stream, as_stream

DEFAULT_TAIL_SAMPLES = 4096
# innovations are drawn in fixed coordinate blocks so that eps_t does not
# depend on which range a caller asks for
_COORD_BLOCK = 4096
# bound on the number of evaluator inputs materialised at once
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class InnovationSpec:
    distribution: str
    params: tuple = ()

    def __post_init__(self):
        d = self.distribution
        if d == "rademacher":
            if self.params:
                raise ConfigurationError("rademacher takes no parameters", "distribution")
        elif d == "gaussian":
            if len(self.params) != 2:
                raise ConfigurationError("gaussian needs (mean, std)", "distribution")
            mean, std = self.params
            if not (np.isfinite(mean) and np.isfinite(std)) or std <= 0:
                raise ConfigurationError("gaussian needs finite mean and std > 0", "std")
        elif d == "uniform":
            if len(self.params) != 2:
                raise ConfigurationError("uniform needs (lo, hi)", "distribution")
            lo, hi = self.params
            if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
                raise ConfigurationError("uniform needs finite lo < hi", "hi")
        else:
            raise ConfigurationError(f"unknown distribution {d!r}", "distribution")

    @classmethod
    def rademacher(cls):
        return cls("rademacher")

    @classmethod
    def gaussian(cls, mean=0.0, std=1.0):
        return cls("gaussian", (float(mean), float(std)))

    @classmethod
    def uniform(cls, lo=0.0, hi=1.0):
        return cls("uniform", (float(lo), float(hi)))

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.distribution == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size).astype(np.float64) - 1.0
        if self.distribution == "gaussian":
            mean, std = self.params
            return rng.normal(mean, std, size=size)
        lo, hi = self.params
        return rng.uniform(lo, hi, size=size)

    @property
    def mean(self) -> float:
        if self.distribution == "rademacher":
            return 0.0
        if self.distribution == "gaussian":
            return self.params[0]
        return 0.5 * (self.params[0] + self.params[1])

    @property
    def variance(self) -> float:
        if self.distribution == "rademacher":
            return 1.0
        if self.distribution == "gaussian":
            return self.params[1] ** 2
        return (self.params[1] - self.params[0]) ** 2 / 12.0

    def marginal(self) -> "Marginal":
        return Marginal(self.draw, self.mean, self.variance + self.mean**2)


@dataclass(frozen=True, eq=False)
class Marginal:
    """A sampler for a real law, with its first two moments when known."""

    sampler: Callable[[np.random.Generator, int], np.ndarray]
    mean: float | None = None
    second_moment: float | None = None

    def sample(self, size, stream) -> np.ndarray:
        return np.asarray(self.sampler(as_stream(stream).generator(), size), dtype=np.float64)

    @property
    def has_moments(self) -> bool:
        return self.mean is not None and self.second_moment is not None


def innovation_range(spec: InnovationSpec, stream, start: int, stop: int) -> np.ndarray:
    """Innovations ``eps_start .. eps_{stop-1}`` of the stream.

    ``eps_t`` is a pure function of ``(stream, t)``.
    """
    stream = as_stream(stream)
    if stop < start:
        raise ValueError("stop must be >= start")
    first, last = start // _COORD_BLOCK, (stop - 1) // _COORD_BLOCK
    if stop == start:
        return np.empty(0)
    chunks = [spec.draw(stream.child(b).generator(), _COORD_BLOCK) for b in range(first, last + 1)]
    joined = np.concatenate(chunks)
    offset = start - first * _COORD_BLOCK
    return joined[offset:offset + (stop - start)]


def sample_innovations(spec: InnovationSpec, count: int, stream) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    return innovation_range(spec, stream, 0, count)


@dataclass(frozen=True, eq=False)
class ShiftFunctional:
    """A functional of a finite window of innovations.

    ``kind`` is ``"linear"`` (``coeffs[i + W] = a_i``) or ``"custom"``
    (``evaluator`` maps arrays of shape ``(..., 2W+1)`` to ``(...)``).
    ``truncated`` marks finite representations of infinite-memory
    functionals.
    """

    kind: str
    halfwidth: int
    coeffs: np.ndarray | None = None
    evaluator: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""
    truncated: bool = False

    def __post_init__(self):
        if self.halfwidth < 0:
            raise ConfigurationError("window halfwidth must be >= 0", "W")
        if self.kind == "linear":
            if self.coeffs is None or len(self.coeffs) != 2 * self.halfwidth + 1:
                raise ConfigurationError("linear functional needs 2W+1 coefficients", "coeffs")
        elif self.kind == "custom":
            if self.evaluator is None:
                raise ConfigurationError("custom functional needs an evaluator", "evaluator")
        else:
            raise ConfigurationError(f"unknown functional kind {self.kind!r}", "kind")

    @classmethod
    def linear(cls, coeffs: Mapping[int, float], halfwidth: int | None = None, name="linear",
               truncated=False):
        if not coeffs:
            raise ConfigurationError("linear functional needs at least one coefficient", "coeffs")
        for k in coeffs:
            if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
                raise ConfigurationError(f"coefficient offset {k!r} is not an integer", "coeffs")
        w = max(abs(int(k)) for k in coeffs)
        if halfwidth is not None:
            if halfwidth < w:
                raise ConfigurationError("W smaller than the largest coefficient offset", "W")
            w = int(halfwidth)
        a = np.zeros(2 * w + 1)
        for k, v in coeffs.items():
            a[int(k) + w] = float(v)
        return cls("linear", w, coeffs=a, name=name, truncated=truncated)

    @classmethod
    def custom(cls, halfwidth: int, evaluator, name="custom"):
        return cls("custom", int(halfwidth), evaluator=evaluator, name=name)

    def coefficient(self, i: int) -> float:
        if self.kind != "linear" or abs(i) > self.halfwidth:
            return 0.0
        return float(self.coeffs[i + self.halfwidth])

    def __call__(self, windows) -> np.ndarray:
        windows = np.asarray(windows, dtype=np.float64)
        if windows.shape[-1] != 2 * self.halfwidth + 1:
            raise ValueError(f"expected windows of length {2 * self.halfwidth + 1}")
        if self.kind == "linear":
            return windows @ self.coeffs[::-1]
        return np.asarray(self.evaluator(windows), dtype=np.float64)


def geometric_functional(ratio=0.5, rel_tol=1e-12, name="geometric"):
    """Two-sided ``a_i = ratio^|i|`` cut where the tail mass drops below ``rel_tol``."""
    if not 0 < ratio < 1:
        raise ConfigurationError("ratio must lie in (0, 1)", "ratio")
    total = (1 + ratio) / (1 - ratio)
    w = 0
    # two-sided tail beyond W is 2 r^{W+1} / (1 - r)
    while 2 * ratio ** (w + 1) / (1 - ratio) >= rel_tol * total:
        w += 1
    coeffs = {i: ratio ** abs(i) for i in range(-w, w + 1)}
    return ShiftFunctional.linear(coeffs, name=name, truncated=True)


# named custom evaluators, selectable from configuration files
def _product(v):
    return np.prod(v, axis=-1)


def _center_square(v):
    return v[..., v.shape[-1] // 2] ** 2


def _sum_squares(v):
    return np.sum(v * v, axis=-1)


def _tanh_sum(v):
    return np.tanh(np.sum(v, axis=-1))


def _max(v):
    return np.max(v, axis=-1)


CUSTOM_EVALUATORS = {
    "product": _product,
    "center_square": _center_square,
    "sum_squares": _sum_squares,
    "tanh_sum": _tanh_sum,
    "max": _max,
}


class Truncation:
    """The conditional truncation ``f_l`` as a deterministic window map.

    For custom functionals with ``l < W`` the outer coordinates are
    integrated against one fixed set of ``tail_samples`` draws, so that the
    same window always yields the same value.
    """

    def __init__(self, process: "ShiftProcess", ell: int, tail_samples=DEFAULT_TAIL_SAMPLES,
                 stream=None):
        if ell < 0:
            raise ValueError("level must be >= 0")
        if tail_samples < 1:
            raise ValueError("tail_samples must be >= 1")
        self.process = process
        self.ell = int(ell)
        f = process.functional
        w = f.halfwidth
        self.exact = f.kind == "linear" or self.ell >= w
        self._tails = None
        if f.kind == "linear":
            keep = min(self.ell, w)
            weights = np.zeros(2 * self.ell + 1)
            # window position -i carries a_i
            for i in range(-keep, keep + 1):
                weights[self.ell - i] = f.coefficient(i)
            outside = sum(f.coefficient(i) for i in range(-w, w + 1) if abs(i) > self.ell)
            self._weights = weights
            self._shift = outside * process.innovation.mean
        elif not self.exact:
            k = w - self.ell
            rng = as_stream(stream).child("tails", self.ell).generator()
            self._tails = process.innovation.draw(rng, (int(tail_samples), 2 * k))

    @property
    def tail_samples(self):
        return 0 if self._tails is None else self._tails.shape[0]

    def __call__(self, windows) -> np.ndarray:
        windows = np.asarray(windows, dtype=np.float64)
        if windows.shape[-1] != 2 * self.ell + 1:
            raise ValueError(f"window length must be {2 * self.ell + 1}, got {windows.shape[-1]}")
        f = self.process.functional
        if f.kind == "linear":
            return windows @ self._weights + self._shift
        w = f.halfwidth
        if self.exact:
            return f(windows[..., self.ell - w:self.ell + w + 1])
        return self._integrate(windows)

    def _integrate(self, windows):
        f = self.process.functional
        k = f.halfwidth - self.ell
        lead = windows.shape[:-1]
        flat = windows.reshape(-1, windows.shape[-1])
        tails = self._tails
        m = tails.shape[0]
        out = np.empty(flat.shape[0])
        step = max(1, _CHUNK_ELEMENTS // (m * (2 * f.halfwidth + 1)))
        left = np.broadcast_to(tails[None, :, :k], (1, m, k))
        right = np.broadcast_to(tails[None, :, k:], (1, m, k))
        for s in range(0, flat.shape[0], step):
            chunk = flat[s:s + step]
            c = chunk.shape[0]
            full = np.concatenate(
                [np.broadcast_to(left, (c, m, k)),
                 np.broadcast_to(chunk[:, None, :], (c, m, chunk.shape[1])),
                 np.broadcast_to(right, (c, m, k))], axis=2)
            out[s:s + c] = f(full).mean(axis=1)
        return out.reshape(lead)


@dataclass(frozen=True, eq=False)
class ShiftProcess:
    innovation: InnovationSpec
    functional: ShiftFunctional
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def halfwidth(self) -> int:
        return self.functional.halfwidth

    @property
    def is_linear(self) -> bool:
        return self.functional.kind == "linear"

    def truncation(self, ell, tail_samples=DEFAULT_TAIL_SAMPLES, stream=None) -> Truncation:
        stream = as_stream(stream)
        key = (int(ell), int(tail_samples), stream)
        t = self._cache.get(key)
        if t is None:
            t = Truncation(self, ell, tail_samples, stream)
            self._cache[key] = t
        return t

    # analytic second-order structure of the level-l process, linear kind only
    def level_mean(self, ell=None) -> float | None:
        if not self.is_linear:
            return None
        return float(self.functional.coeffs.sum() * self.innovation.mean)

    def level_autocovariance(self, ell, lag) -> float | None:
        """``Cov(f_l(V_0), f_l(V_lag))`` for linear functionals, else ``None``."""
        if not self.is_linear:
            return None
        lag = abs(int(lag))
        w = self.halfwidth
        keep = w if ell is None else min(int(ell), w)
        total = 0.0
        for i in range(-keep, keep + 1):
            j = i + lag
            if abs(j) <= keep:
                total += self.functional.coefficient(i) * self.functional.coefficient(j)
        return total * self.innovation.variance

    def level_marginal(self, ell=None, tail_samples=DEFAULT_TAIL_SAMPLES, stream=None) -> Marginal:
        """Law of ``f_l(V_0)`` (``ell=None`` for ``X_0`` itself)."""
        lvl = self.halfwidth if ell is None else int(ell)
        trunc = self.truncation(lvl, tail_samples, stream)
        spec = self.innovation

        def sampler(rng, size):
            return trunc(spec.draw(rng, (int(size), 2 * lvl + 1)))

        if self.is_linear:
            mu = self.level_mean()
            return Marginal(sampler, mu, self.level_autocovariance(lvl, 0) + mu**2)
        return Marginal(sampler)


@dataclass(frozen=True, eq=False)
class SamplePath:
    """``X_1..X_n`` together with the innovations ``eps_{1-margin}..eps_{n+margin}``."""

    values: np.ndarray
    innovations: np.ndarray
    margin: int
    process: ShiftProcess
    stream: Stream

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def seed(self) -> int:
        return self.stream.seed

    @property
    def first_index(self) -> int:
        return 1 - self.margin

    def eps(self, start, stop) -> np.ndarray:
        """Innovations with indices ``start .. stop-1``."""
        lo = start - self.first_index
        hi = stop - self.first_index
        if lo < 0 or hi > self.innovations.shape[0]:
            raise ValueError(f"innovations cover indices {self.first_index}.."
                             f"{self.first_index + self.innovations.shape[0] - 1}, "
                             f"requested {start}..{stop - 1}")
        return self.innovations[lo:hi]

    def windows(self, first, last, ell) -> np.ndarray:
        """Windows ``V_{j,ell}`` for ``j = first..last`` as a ``(count, 2ell+1)`` view."""
        eps = self.eps(first - ell, last + ell + 1)
        return sliding_window_view(eps, 2 * ell + 1)


def generate_path(process: ShiftProcess, n: int, stream, margin: int | None = None) -> SamplePath:
    if n < 2:
        raise ValueError("path length n must be >= 2")
    w = process.halfwidth
    margin = w if margin is None else int(margin)
    if margin < w:
        raise ValueError("margin must cover the window halfwidth")
    stream = as_stream(stream)
    eps = innovation_range(process.innovation, stream, 1 - margin, n + margin + 1)
    start = margin - w
    windows = sliding_window_view(eps[start:start + n + 2 * w], 2 * w + 1)
    values = process.functional(windows)
    return SamplePath(values, eps, margin, process, stream)


def truncated_functional(process: ShiftProcess, ell: int, window, tail_samples=DEFAULT_TAIL_SAMPLES,
                         stream=None) -> float:
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1 or window.shape[0] != 2 * ell + 1:
        raise ValueError(f"window must have length 2*ell+1 = {2 * ell + 1}")
    return float(process.truncation(ell, tail_samples, stream)(window))
