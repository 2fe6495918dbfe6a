"""Dependence coefficients of kernel increments along the truncation levels.

``theta_{l,p}`` is the largest ``L^p`` norm, over lags ``j``, of

    h(f_l(V_0), f_l(V_j)) - h(f_{l-1}(V_0°), f_{l-1}(V_j°))

where ``V_j`` is the ``(2l+1)``-window centred at ``j`` and ``V°`` its inner
part.  For ``j >= 2l+1`` the two windows are disjoint and the law no longer
depends on ``j``, so lags ``0..2l+1`` give the supremum exactly.  All lags
and both levels are evaluated on the same innovation draws.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._numeric import lp_norm_with_se
from .hoeffding import LevelSystem
from .kernels import PairKernel, variance_kernel
from .processes import DEFAULT_TAIL_SAMPLES, ShiftProcess
from .rng import as_stream

MIN_REPLICATIONS = 30
DEFAULT_REPLICATIONS = 100_000


class ThetaEstimate(NamedTuple):
    theta: float
    se: float
    j_star: int
    lag_norms: np.ndarray
    lag_ses: np.ndarray


class BoundEstimate(NamedTuple):
    value: float
    se: float


class VarianceBound(NamedTuple):
    """Both forms of the variance-kernel bound.

    ``printed = 2 ||X_0||_{2p} ||D||_p`` and ``derived = 4 ||X_0||_{2p} ||D||_{2p}``
    where ``D = f_l(V_0) - f_{l-1}(V_0°)``; only the second follows from the
    Cauchy-Schwarz step it rests on.
    """
    printed: float
    printed_se: float
    derived: float
    derived_se: float


def _check(R, p=1.0):
    if R < MIN_REPLICATIONS:
        raise ValueError(f"need R >= {MIN_REPLICATIONS} replications for a meaningful CI")
    if not p >= 1:
        raise ValueError("p must be >= 1")


def _system(kernel, process, M, stream):
    return LevelSystem(kernel, process, tail_samples=M, stream=as_stream(stream).child("truncation"))


def _lag_windows(process, ell, lags, R, stream):
    """Windows ``V_{0,l}`` and ``V_{j,l}`` for each lag, from shared draws."""
    width = 2 * ell + 1
    span = width + int(max(lags))
    eps = process.innovation.draw(as_stream(stream).child("draws").generator(), (R, span))
    win = sliding_window_view(eps, width, axis=1)
    return win[:, 0], [win[:, j] for j in lags]


def theta_lag_norms(kernel: PairKernel, process: ShiftProcess, ell: int, p: float, R=DEFAULT_REPLICATIONS,
                    M=DEFAULT_TAIL_SAMPLES, stream=None, lags: Sequence[int] | None = None):
    """Per-lag ``L^p`` norms of the level-``l`` kernel increment, with SEs."""
    _check(R, p)
    if ell < 0:
        raise ValueError("level must be >= 0")
    lags = np.arange(2 * ell + 2) if lags is None else np.asarray(lags, dtype=np.int64)
    if ell > process.halfwidth:
        return np.zeros(lags.shape), np.zeros(lags.shape)
    stream = as_stream(stream)
    system = _system(kernel, process, M, stream)
    v0, vj = _lag_windows(process, ell, lags, R, stream)
    up0 = system.f(ell, v0)
    lo0 = system.f(ell - 1, v0[:, 1:-1]) if ell >= 1 else None
    norms, ses = np.empty(lags.shape), np.empty(lags.shape)
    for k, w in enumerate(vj):
        diff = kernel(up0, system.f(ell, w))
        if ell >= 1:
            diff = diff - kernel(lo0, system.f(ell - 1, w[:, 1:-1]))
        norms[k], ses[k] = lp_norm_with_se(diff, p)
    return norms, ses


def theta_coefficient(kernel: PairKernel, process: ShiftProcess, ell: int, p: float, R=DEFAULT_REPLICATIONS,
                      M=DEFAULT_TAIL_SAMPLES, stream=None) -> ThetaEstimate:
    norms, ses = theta_lag_norms(kernel, process, ell, p, R, M, stream)
    j = int(np.argmax(norms))
    return ThetaEstimate(float(norms[j]), float(ses[j]), j, norms, ses)


def delta_coefficient(kernel: PairKernel, process: ShiftProcess, ell: int, R=DEFAULT_REPLICATIONS,
                      M=DEFAULT_TAIL_SAMPLES, stream=None) -> ThetaEstimate:
    """``L^2`` norm of ``h(f(V_0), f(V_j)) - h(f_l(V_0), f_l(V_j))``, maximised over lags."""
    _check(R)
    w = process.halfwidth
    lags = np.arange(2 * w + 2)
    if ell >= w:
        z = np.zeros(lags.shape)
        return ThetaEstimate(0.0, 0.0, 0, z, z.copy())
    stream = as_stream(stream)
    system = _system(kernel, process, M, stream)
    v0, vj = _lag_windows(process, w, lags, R, stream)
    cut = slice(w - ell, w + ell + 1)
    full0, part0 = system.f(w, v0), system.f(ell, v0[:, cut])
    norms, ses = np.empty(lags.shape), np.empty(lags.shape)
    for k, win in enumerate(vj):
        diff = kernel(full0, system.f(w, win)) - kernel(part0, system.f(ell, win[:, cut]))
        norms[k], ses[k] = lp_norm_with_se(diff, 2.0)
    j = int(np.argmax(norms))
    return ThetaEstimate(float(norms[j]), float(ses[j]), j, norms, ses)


def truncation_increment(process: ShiftProcess, ell: int, R=DEFAULT_REPLICATIONS, M=DEFAULT_TAIL_SAMPLES,
                         stream=None):
    """Draws of ``(X_0, f_l(V_0) - f_{l-1}(V_0°))`` on shared innovations."""
    if ell < 1:
        raise ValueError("the truncation increment is defined for ell >= 1")
    stream = as_stream(stream)
    w = process.halfwidth
    top = max(w, ell)
    eps = process.innovation.draw(stream.child("increment").generator(), (R, 2 * top + 1))
    system = _system(variance_kernel(), process, M, stream)
    x0 = system.f(top, eps)
    mid = top
    inc = system.f(ell, eps[:, mid - ell:mid + ell + 1]) - system.f(ell - 1, eps[:, mid - ell + 1:mid + ell])
    return x0, inc


def holder_theta_bound(kernel: PairKernel, process: ShiftProcess, ell: int, p: float, R=DEFAULT_REPLICATIONS,
                       stream=None, M=DEFAULT_TAIL_SAMPLES) -> BoundEstimate:
    """``2 || c |f_l(V_0) - f_{l-1}(V_0°)|^alpha ||_p`` for a kernel with modulus ``c t^alpha``."""
    if kernel.holder is None:
        raise ValueError(f"kernel {kernel.name} carries no Hölder modulus")
    _check(R, p)
    if ell > process.halfwidth:
        return BoundEstimate(0.0, 0.0)
    c, alpha = kernel.holder
    _, inc = truncation_increment(process, ell, R, M, stream)
    norm, se = lp_norm_with_se(c * np.abs(inc) ** alpha, p)
    return BoundEstimate(2.0 * norm, 2.0 * se)


def variance_kernel_theta_bound(process: ShiftProcess, ell: int, p: float, R=DEFAULT_REPLICATIONS,
                                stream=None, M=DEFAULT_TAIL_SAMPLES) -> VarianceBound:
    _check(R, p)
    if ell > process.halfwidth:
        return VarianceBound(0.0, 0.0, 0.0, 0.0)
    x0, inc = truncation_increment(process, ell, R, M, stream)
    xn, xse = lp_norm_with_se(x0, 2 * p)
    dp, dpse = lp_norm_with_se(inc, p)
    d2p, d2pse = lp_norm_with_se(inc, 2 * p)
    printed = 2.0 * xn * dp
    derived = 4.0 * xn * d2p
    # errors of the two factors combined to first order
    printed_se = 2.0 * float(np.hypot(xse * dp, xn * dpse))
    derived_se = 4.0 * float(np.hypot(xse * d2p, xn * d2pse))
    return VarianceBound(printed, printed_se, derived, derived_se)


# ---------------------------------------------------------------- profiles

@dataclass
class DependenceProfile:
    p: float
    entries: list
    halfwidth: int
    truncated: bool = False
    kernel_name: str = ""

    @property
    def levels(self) -> np.ndarray:
        return np.array([e.ell for e in self.entries])

    @property
    def thetas(self) -> np.ndarray:
        return np.array([e.theta for e in self.entries])

    @property
    def ses(self) -> np.ndarray:
        return np.array([e.se for e in self.entries])

    def partial_sums(self, w: float) -> np.ndarray:
        """Cumulative ``sum_{k<=l} max(k,1)^w theta_k``; level 0 enters with weight 1."""
        weights = np.maximum(self.levels, 1).astype(np.float64) ** w
        return np.cumsum(weights * self.thetas)

    def weighted_sums(self, exponents) -> dict:
        return {float(w): float(self.partial_sums(w)[-1]) for w in exponents}


@dataclass
class ProfileEntry:
    ell: int
    theta: float
    se: float
    j_star: int


def dependence_profile(kernel: PairKernel, process: ShiftProcess, L: int, p: float, R=DEFAULT_REPLICATIONS,
                       M=DEFAULT_TAIL_SAMPLES, stream=None) -> DependenceProfile:
    stream = as_stream(stream)
    entries = []
    for ell in range(L + 1):
        est = theta_coefficient(kernel, process, ell, p, R, M, stream.child("level", ell))
        entries.append(ProfileEntry(ell, est.theta, est.se, est.j_star))
    return DependenceProfile(float(p), entries, process.halfwidth, process.functional.truncated, kernel.name)


@dataclass
class SummabilityTerm:
    label: str
    p: float
    weight: float
    partial_sums: np.ndarray
    verdict: str


@dataclass
class SummabilityReport:
    theorem: str
    terms: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        verdicts = {t.verdict for t in self.terms}
        if verdicts == {"finite (exact)"}:
            return "finite (exact)"
        return "non-plateau" if "non-plateau" in verdicts else "plateau"


def _trend(profile: DependenceProfile, sums: np.ndarray, rel_tol=1e-3) -> str:
    depth = int(profile.levels.max()) if profile.entries else -1
    if not profile.truncated and depth >= profile.halfwidth + 1:
        return "finite (exact)"
    if sums.size < 4:
        return "non-plateau"
    tail = sums[-1] - sums[-(sums.size // 4) - 1]
    scale = abs(sums[-1])
    return "plateau" if scale == 0 or abs(tail) <= rel_tol * scale else "non-plateau"


def summability_report(profiles, theorem: str) -> SummabilityReport:
    """Partial sums of the weighted coefficients a theorem asks to be finite.

    ``theorem``: ``"LLN"`` (weight ``l^{1-1/p}``, ``1 <= p < 2``), ``"LIL"``
    (``l^{1/2}`` at ``p = 2``) or ``"CLT"`` (``l^{1/2}`` at ``p = 2`` and
    ``l^2`` at ``p = 1``).  ``profiles`` is one profile or several with
    different ``p``.
    """
    if isinstance(profiles, DependenceProfile):
        profiles = [profiles]
    by_p = {float(pr.p): pr for pr in profiles}

    def need(p):
        try:
            return by_p[float(p)]
        except KeyError:
            raise ValueError(f"{theorem} needs a profile at p = {p:g}") from None

    theorem = theorem.upper()
    if theorem == "LLN":
        lln = [pr for pr in profiles if 1 <= pr.p < 2]
        if not lln:
            raise ValueError("LLN needs a profile with p in [1,2)")
        plan = [("l^(1-1/p) theta_p", pr, 1 - 1 / pr.p) for pr in lln]
    elif theorem == "LIL":
        plan = [("theta_0 + l^(1/2) theta_2", need(2.0), 0.5)]
    elif theorem == "CLT":
        plan = [("l^(1/2) theta_2", need(2.0), 0.5), ("l^2 theta_1", need(1.0), 2.0)]
    else:
        raise ValueError(f"unknown theorem {theorem!r}")
    report = SummabilityReport(theorem)
    for label, pr, w in plan:
        sums = pr.partial_sums(w)
        report.terms.append(SummabilityTerm(label, pr.p, w, sums, _trend(pr, sums)))
    return report
