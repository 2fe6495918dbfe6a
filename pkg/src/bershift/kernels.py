"""Symmetric pair kernels and their Hoeffding projections."""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigurationError, NumericError
from .processes import Marginal
from .rng import as_stream


class Estimate(NamedTuple):
    value: float
    se: float


@dataclass(frozen=True, eq=False)
class PairKernel:
    """A symmetric kernel ``h(x, y)`` with optional analytic metadata.

    ``evaluator`` is vectorised: it broadcasts over array arguments.

    ``features(x)`` returns arrays ``(A, B)`` of shape ``(r, len(x))`` with
    ``h(x_i, x_j) = sum_r A[r, i] * B[r, j]``; it enables O(n) U-statistic
    trajectories.

    ``moment_form(mx, m2x, my, m2y, cross)`` gives ``E h(X, Y)`` from the
    first two moments of ``X`` and ``Y`` and ``cross = E[XY]``; kernels that
    have it get analytic means and projections.

    ``holder = (c, alpha)`` declares ``|h(x,y) - h(x',y')| <= c|x-x'|^alpha +
    c|y-y'|^alpha``.
    """

    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    features: Callable | None = None
    moment_form: Callable | None = None
    holder: tuple | None = None

    def __call__(self, x, y):
        return self.evaluator(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))

    @property
    def analytic(self) -> bool:
        return self.moment_form is not None


def _variance(x, y):
    d = x - y
    return 0.5 * d * d


def _variance_features(x):
    one = np.ones_like(x)
    return np.stack([0.5 * x * x, one, -x]), np.stack([one, 0.5 * x * x, x])


def _variance_moments(mx, m2x, my, m2y, cross):
    return 0.5 * (m2x + m2y) - cross


def _sum(x, y):
    return x + y


def _sum_features(x):
    one = np.ones_like(x)
    return np.stack([x, one]), np.stack([one, x])


def _sum_moments(mx, m2x, my, m2y, cross):
    return mx + my


def _product(x, y):
    return x * y


def _product_features(x):
    return x[None, :], x[None, :]


def _product_moments(mx, m2x, my, m2y, cross):
    return cross


def _zero(x, y):
    return np.zeros(np.broadcast(x, y).shape)


def _zero_features(x):
    return np.zeros((1, x.shape[0])), np.zeros((1, x.shape[0]))


def _zero_moments(mx, m2x, my, m2y, cross):
    return 0.0


def _abs_diff_power(x, y, alpha=1.0):
    return np.abs(x - y) ** alpha


def _linear_combination(x, y, terms=()):
    out = 0.0
    for w, k in terms:
        out = out + w * k.evaluator(x, y)
    return out


def variance_kernel() -> PairKernel:
    return PairKernel("variance", _variance, _variance_features, _variance_moments)


def sum_kernel() -> PairKernel:
    return PairKernel("sum", _sum, _sum_features, _sum_moments, holder=(1.0, 1.0))


def product_kernel() -> PairKernel:
    return PairKernel("product", _product, _product_features, _product_moments)


def zero_kernel() -> PairKernel:
    return PairKernel("zero", _zero, _zero_features, _zero_moments, holder=(0.0, 1.0))


def abs_diff_kernel(alpha=1.0) -> PairKernel:
    """``|x - y|^alpha``, Hölder of order ``alpha`` with constant 1."""
    if not 0 < alpha <= 1:
        raise ConfigurationError("alpha must lie in (0, 1]", "alpha")
    return PairKernel(f"abs_diff_{alpha:g}", partial(_abs_diff_power, alpha=float(alpha)),
                      holder=(1.0, float(alpha)))


def with_holder(kernel: PairKernel, c: float, alpha: float) -> PairKernel:
    """Attach the modulus ``omega(t) = c t^alpha`` to ``kernel``."""
    if c < 0 or not 0 < alpha <= 1:
        raise ConfigurationError("need c >= 0 and alpha in (0, 1]", "holder")
    return replace(kernel, holder=(float(c), float(alpha)))


def linear_combination(terms) -> PairKernel:
    """``sum_k w_k h_k``; features and moment forms are combined when all terms have them."""
    terms = tuple((float(w), k) for w, k in terms)
    feats = None
    if all(k.features is not None for _, k in terms):
        def feats(x):
            parts = [k.features(x) for _, k in terms]
            a = np.concatenate([w * p[0] for (w, _), p in zip(terms, parts)])
            b = np.concatenate([p[1] for p in parts])
            return a, b
    moments = None
    if all(k.moment_form is not None for _, k in terms):
        def moments(*args):
            return sum(w * k.moment_form(*args) for w, k in terms)
    name = "+".join(f"{w:g}*{k.name}" for w, k in terms)
    return PairKernel(name, partial(_linear_combination, terms=terms), feats, moments)


_BUILTIN = {
    "variance": variance_kernel,
    "sum": sum_kernel,
    "product": product_kernel,
    "zero": zero_kernel,
    "abs_diff": abs_diff_kernel,
}


def get_kernel(name: str, **params) -> PairKernel:
    try:
        factory = _BUILTIN[name]
    except KeyError:
        raise ConfigurationError(f"unknown kernel {name!r}", "name") from None
    holder_c = params.pop("holder_c", None)
    holder_alpha = params.pop("holder_alpha", None)
    try:
        kernel = factory(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for kernel {name!r}: {exc}", "name") from None
    if holder_c is not None or holder_alpha is not None:
        kernel = with_holder(kernel, 1.0 if holder_c is None else holder_c,
                             1.0 if holder_alpha is None else holder_alpha)
    return kernel


def kernel_names():
    return sorted(_BUILTIN)


def evaluate(kernel: PairKernel, x: float, y: float) -> float:
    value = float(kernel(x, y))
    if not np.isfinite(value):
        raise NumericError(f"kernel {kernel.name} returned {value} at ({x}, {y})")
    return value


def _mc_pairs(kernel, dist, M, stream):
    stream = as_stream(stream)
    x = dist.sample(M, stream.child("x"))
    y = dist.sample(M, stream.child("y"))
    vals = kernel(x, y)
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(M)))


def kernel_mean(kernel: PairKernel, dist: Marginal, M=100_000, stream=None) -> Estimate:
    """``theta = E h(X, X')`` for independent draws from ``dist``."""
    if kernel.analytic and dist.has_moments:
        mu, m2 = dist.mean, dist.second_moment
        return Estimate(float(kernel.moment_form(mu, m2, mu, m2, mu * mu)), 0.0)
    if M < 2:
        raise ValueError("M must be >= 2")
    return _mc_pairs(kernel, dist, M, stream)


def _projection_raw(kernel, dist, x, M, stream):
    """``E h(x, X')`` (uncentred) with its standard error."""
    x = np.asarray(x, dtype=np.float64)
    if kernel.analytic and dist.has_moments:
        mu, m2 = dist.mean, dist.second_moment
        return kernel.moment_form(x, x * x, mu, m2, x * mu), np.zeros_like(x)
    if M < 2:
        raise ValueError("M must be >= 2")
    z = dist.sample(M, as_stream(stream).child("projection"))
    vals = kernel(x[..., None], z)
    return vals.mean(axis=-1), vals.std(axis=-1, ddof=1) / np.sqrt(M)


def projection_h1(kernel: PairKernel, dist: Marginal, x: float, M=100_000, stream=None) -> Estimate:
    """``h_1(x) = E h(X, x) - theta``."""
    stream = as_stream(stream)
    raw, se = _projection_raw(kernel, dist, x, M, stream)
    theta = kernel_mean(kernel, dist, M, stream.child("theta"))
    return Estimate(float(raw - theta.value), float(np.hypot(se, theta.se)))


class _DegeneratePart:
    """``h_2`` of ``kernel`` against a frozen reference sample (or analytically)."""

    def __init__(self, kernel, dist, M, stream):
        self.kernel = kernel
        self.dist = dist
        if kernel.analytic and dist.has_moments:
            self.reference = None
            self.theta = kernel_mean(kernel, dist).value
        else:
            if M < 2:
                raise ValueError("M must be >= 2")
            self.reference = dist.sample(M, as_stream(stream).child("reference"))
            z = self.reference
            self.theta = float(kernel(z[:, None], z[None, :]).mean())

    def h1(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.reference is None:
            mu, m2 = self.dist.mean, self.dist.second_moment
            return self.kernel.moment_form(x, x * x, mu, m2, x * mu) - self.theta
        return self.kernel(x[..., None], self.reference).mean(axis=-1) - self.theta

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        # grouped so that swapping x and y is exact
        return self.kernel(x, y) - (self.h1(x) + self.h1(y)) - self.theta


def degenerate_kernel(kernel: PairKernel, dist: Marginal, M=4096, stream=None) -> PairKernel:
    """``h_2`` as a :class:`PairKernel` (exact when analytic metadata exists)."""
    part = _DegeneratePart(kernel, dist, M, stream)
    return PairKernel(f"h2[{kernel.name}]", part)


def degenerate_part(kernel: PairKernel, dist: Marginal, x, y, M=4096, stream=None) -> float:
    """``h_2(x, y) = h(x, y) - h_1(x) - h_1(y) - theta``."""
    return float(_DegeneratePart(kernel, dist, M, stream)(x, y))


@dataclass(frozen=True)
class DegeneracyReport:
    probes: np.ndarray
    means: np.ndarray
    ses: np.ndarray
    max_abs_mean: float
    degenerate: bool


def check_degeneracy(kernel: PairKernel, dist: Marginal, probes=20, M=20_000, stream=None,
                     n_se=4.0) -> DegeneracyReport:
    """Test ``E h(x, X') = 0`` at probe points drawn from ``dist``.

    A probe violates degeneracy when its Monte Carlo mean lies more than
    ``n_se`` standard errors from zero.
    """
    stream = as_stream(stream)
    x = dist.sample(probes, stream.child("probes"))
    means = np.empty(probes)
    ses = np.empty(probes)
    for k in range(probes):
        z = dist.sample(M, stream.child("fresh", k))
        vals = np.asarray(kernel(np.full(M, x[k]), z), dtype=np.float64)
        means[k] = vals.mean()
        ses[k] = vals.std(ddof=1) / np.sqrt(M)
    slack = n_se * ses + 1e-12 * (1.0 + np.abs(means))
    clean = bool(np.all(np.abs(means) <= slack))
    return DegeneracyReport(x, means, ses, float(np.max(np.abs(means))), clean)


def validate_analytic(kernel: PairKernel, dist: Marginal, M=200_000, stream=None, n_se=4.0):
    """Cross-check the analytic mean and projection against Monte Carlo.

    Raises :class:`ConfigurationError` when a check misses by more than
    ``n_se`` standard errors; returns the Monte Carlo estimates otherwise.
    """
    if not (kernel.analytic and dist.has_moments):
        raise ConfigurationError(f"kernel {kernel.name} has no analytic metadata for this law")
    stream = as_stream(stream)
    exact = kernel_mean(kernel, dist).value
    mc = _mc_pairs(kernel, dist, M, stream.child("mean"))
    if abs(mc.value - exact) > n_se * mc.se + 1e-12:
        raise ConfigurationError(f"analytic mean {exact} disagrees with MC {mc.value} +- {mc.se}")
    probes = dist.sample(5, stream.child("probes"))
    mu, m2 = dist.mean, dist.second_moment
    z = dist.sample(M, stream.child("z"))
    for x in probes:
        vals = kernel(x, z)
        est, se = vals.mean(), vals.std(ddof=1) / np.sqrt(M)
        ana = kernel.moment_form(x, x * x, mu, m2, x * mu)
        if abs(est - ana) > n_se * se + 1e-12:
            raise ConfigurationError(f"analytic projection at {x} disagrees: {ana} vs {est} +- {se}")
    return mc
