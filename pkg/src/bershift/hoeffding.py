"""Level-wise Hoeffding decomposition of U-statistics of shift processes.

At level ``l`` the data ``f_l(V_{j,l})`` depend on ``2l+1`` innovations.
Indices ``1..(4l+2)m`` are cut into ``m`` blocks of length ``4l+2``; pairs
whose positions inside their blocks are close enough are regrouped into
U-statistics of independent block vectors, everything else goes to
explicitly indexed remainders.  The decomposition is exact: the residual
against the directly summed level statistic is rounding error only.

Index sets (``B = 4l+2``, ``N' = Bm``, classes ``(a, b)`` with ``a >= b``,
``d = a - b``; the diagonal class ``a == b`` carries its pair once):

* ``R11``: ``N' < i < j <= n``; ``R12``: ``i <= N' < j <= n``;
* ``R2``: both indices in the same block;
* near classes (``d <= 2l``): block pairs ``(uB+a, vB+b)`` and
  ``(uB+b, vB+a)``, ``0 <= u < v < m``; the ``u = 0`` terms form ``R3``,
  the rest a U-statistic over block vectors ``u = 1..m-1``;
* far classes (``d >= 2l+1``): the partner index is shifted by one block
  and the telescoping differences form ``R5`` and ``R6``; the ``u = 0``
  terms of the shifted sum form ``R4``.

The linear projections of the block U-statistics are reported against the
block-scaled linear sum ``B m sum_{k<=N'+1} Y_k``; the (exact) gap between
the two is the ``Rproj`` remainder.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .kernels import PairKernel
from .processes import (DEFAULT_TAIL_SAMPLES, SamplePath, ShiftProcess, generate_path)
from .rng import as_stream
from .ustat import u_statistic

REMAINDER_NAMES = ("R11", "R12", "R2", "R3", "R4", "R5", "R6", "Rproj")
DEFAULT_COND_SAMPLES = 4096
DEFAULT_CENTER_SAMPLES = 100_000


@dataclass(frozen=True)
class BlockIndex:
    n: int
    ell: int
    block_size: int
    m: int
    skipped: bool = False

    @property
    def covered(self) -> range:
        return range(1, self.block_size * self.m + 1)

    @property
    def residual(self) -> range:
        return range(self.block_size * self.m + 1, self.n + 1)

    def coordinates(self, j: int):
        """``(u, a)`` with ``j = u(4l+2) + a``, ``a`` in ``1..4l+2``."""
        if j not in self.covered:
            raise ValueError(f"index {j} is not covered by the blocks")
        u, r = divmod(j - 1, self.block_size)
        return u, r + 1


def block_partition(n: int, ell: int) -> BlockIndex:
    """Blocks of length ``4l+2``; ``skipped`` marks ``n < 4l+2`` (no full block)."""
    if ell < 1:
        raise ValueError("block partition needs ell >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    size = 4 * ell + 2
    return BlockIndex(n, ell, size, n // size, skipped=n < size)


class LevelSystem:
    """Shared truncations, projections and centring constants for all levels.

    Level ``l`` uses the same ``f_{l-1}`` as level ``l-1`` uses for its upper
    function, so level statistics telescope exactly.  Levels above the
    window halfwidth reuse the top level and vanish identically.
    """

    def __init__(self, kernel: PairKernel, process: ShiftProcess, tail_samples=DEFAULT_TAIL_SAMPLES,
                 cond_samples=DEFAULT_COND_SAMPLES, center_samples=DEFAULT_CENTER_SAMPLES,
                 stream=None):
        self.kernel = kernel
        self.process = process
        self.tail_samples = int(tail_samples)
        self.cond_samples = int(cond_samples)
        self.center_samples = int(center_samples)
        self.stream = as_stream(stream)
        self.analytic = kernel.analytic and process.is_linear
        self._refs = {}
        self._means = {}
        self._mom = {}

    def effective(self, ell):
        return min(int(ell), self.process.halfwidth)

    def truncation(self, ell):
        return self.process.truncation(self.effective(ell), self.tail_samples,
                                       self.stream.child("truncation"))

    def f(self, ell, windows):
        """``f_l`` on windows of length ``2l+1``."""
        e = self.effective(ell)
        windows = np.asarray(windows, dtype=np.float64)
        if e < ell:
            cut = ell - e
            windows = windows[..., cut:windows.shape[-1] - cut]
        return self.truncation(e)(windows)

    def _moments(self, ell):
        e = self.effective(ell)
        known = self._mom.get(e)
        if known is None:
            mu = self.process.level_mean()
            known = self._mom[e] = (mu, self.process.level_autocovariance(e, 0) + mu * mu)
        return known

    def _reference(self, ell):
        e = self.effective(ell)
        ref = self._refs.get(e)
        if ref is None:
            rng = self.stream.child("reference", e).generator()
            v = self.process.innovation.draw(rng, (self.cond_samples, 2 * e + 1))
            ref = self.truncation(e)(v)
            self._refs[e] = ref
        return ref

    def psi(self, ell, x):
        """``E h(x, f_l(V'))`` for an independent window ``V'``."""
        x = np.asarray(x, dtype=np.float64)
        if self.analytic:
            mu, m2 = self._moments(ell)
            return np.broadcast_to(self.kernel.moment_form(x, x * x, mu, m2, x * mu), x.shape).astype(np.float64)
        ref = self._reference(ell)
        out = np.empty(x.shape)
        flat, res = x.reshape(-1), out.reshape(-1)
        step = max(1, 2_000_000 // ref.shape[0])
        for s in range(0, flat.shape[0], step):
            res[s:s + step] = self.kernel(flat[s:s + step, None], ref[None, :]).mean(axis=1)
        return out

    def pair_means(self, ell):
        """``E h(f_l(V_0), f_l(V_d))`` for ``d = 0..2l+1`` (constant beyond)."""
        e = self.effective(ell)
        known = self._means.get(e)
        if known is not None:
            return known
        lags = np.arange(2 * e + 2)
        if self.analytic:
            mu, m2 = self._moments(e)
            vals = np.array([self.kernel.moment_form(
                mu, m2, mu, m2, self.process.level_autocovariance(e, d) + mu * mu) for d in lags])
        else:
            rng = self.stream.child("centering", e).generator()
            eps = self.process.innovation.draw(rng, (self.center_samples, 4 * e + 3))
            fv = self.truncation(e)(sliding_window_view(eps, 2 * e + 1, axis=1))
            vals = np.array([self.kernel(fv[:, 0], fv[:, d]).mean() for d in lags])
        self._means[e] = vals
        return vals

    def level_kernel(self, ell) -> "LevelKernel":
        return LevelKernel(self, int(ell))


class LevelKernel:
    """``g(v, w) = h(f_l(v), f_l(w)) - h(f_{l-1}(v°), f_{l-1}(w°))`` on ``(2l+1)``-windows.

    ``v°`` is the inner ``2l-1`` part of ``v``; at ``l = 0`` only the first
    term is present.
    """

    def __init__(self, system: LevelSystem, ell: int):
        if ell < 0:
            raise ValueError("level must be >= 0")
        self.system = system
        self.ell = ell
        self.width = 2 * ell + 1
        self.is_zero = ell > system.process.halfwidth
        up = system.pair_means(ell)
        lo = system.pair_means(ell - 1) if ell >= 1 else np.zeros(1)
        d = np.arange(2 * ell + 2)
        # centring constants E g(V_0, V_d), last entry for independent windows
        self.centers = up[np.minimum(d, up.shape[0] - 1)] - lo[np.minimum(d, lo.shape[0] - 1)]
        self.center_inf = float(self.centers[-1])

    @property
    def kernel(self):
        return self.system.kernel

    def values(self, windows):
        """``(f_l(v), f_{l-1}(v°))``; the second is ``None`` at level 0."""
        windows = np.asarray(windows, dtype=np.float64)
        upper = self.system.f(self.ell, windows)
        if self.ell == 0:
            return upper, None
        return upper, self.system.f(self.ell - 1, windows[..., 1:-1])

    def combine(self, vu, wu, vl=None, wl=None):
        h = self.kernel
        out = h(vu, wu)
        if self.ell >= 1:
            out = out - h(vl, wl)
        return out

    def __call__(self, v, w):
        vu, vl = self.values(v)
        wu, wl = self.values(w)
        return self.combine(vu, wu, vl, wl)

    def projection_from_values(self, vu, vl=None):
        out = self.system.psi(self.ell, vu)
        if self.ell >= 1:
            out = out - self.system.psi(self.ell - 1, vl)
        return out - self.center_inf

    def projection(self, v):
        """``E[g(v, V')] - E g(V, V')`` for an independent window ``V'``."""
        return self.projection_from_values(*self.values(v))

    def center(self, lag):
        lag = np.minimum(np.abs(np.asarray(lag)), self.centers.shape[0] - 1)
        return self.centers[lag]


def level_kernel(kernel: PairKernel, process: ShiftProcess, ell: int, tail_samples=DEFAULT_TAIL_SAMPLES,
                 stream=None, cond_samples=DEFAULT_COND_SAMPLES,
                 center_samples=DEFAULT_CENTER_SAMPLES) -> LevelKernel:
    system = LevelSystem(kernel, process, tail_samples, cond_samples, center_samples, stream)
    return system.level_kernel(ell)


# ---------------------------------------------------------------- block algebra

def _class_of(ell, a, b):
    size = 4 * ell + 2
    if not (1 <= a <= size and 1 <= b <= size):
        raise ValueError(f"block positions must lie in 1..{size}")
    if a < b:
        raise ValueError("block kernels are indexed with a >= b; use (b, a)")
    return "near" if a - b <= 2 * ell else "far"


def _hab_offsets(ell, a, b):
    """Vector offsets ``(o1, o2)`` of the two windows used by ``h_{a,b}``.

    ``h_{a,b}(x, y) = g(x[o1:], y[o2:]) + g(y[o1:], x[o2:])`` with windows
    of length ``2l+1``.
    """
    d = a - b
    if _class_of(ell, a, b) == "near":
        return d, 0
    return d - (2 * ell + 1), 2 * ell + 1


def _block_start(ell, a, b, u):
    size = 4 * ell + 2
    if _class_of(ell, a, b) == "near":
        return u * size + b - ell
    return u * size + b + ell + 1


class BlockKernel:
    """``h_{a,b}`` on pairs of ``(4l+2)``-vectors, optionally Hoeffding-projected."""

    def __init__(self, level: LevelKernel, a: int, b: int, projected=False):
        self.level = level
        self.a, self.b = int(a), int(b)
        self.kind = _class_of(level.ell, self.a, self.b)
        self.offsets = _hab_offsets(level.ell, self.a, self.b)
        self.single = self.a == self.b
        self.projected = projected

    def _windows(self, x):
        w = self.level.width
        o1, o2 = self.offsets
        return x[..., o1:o1 + w], x[..., o2:o2 + w]

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        lev = self.level
        x1, x2 = self._windows(x)
        y1, y2 = self._windows(y)
        vx1, vx2, vy1, vy2 = (lev.values(t) for t in (x1, x2, y1, y2))
        out = lev.combine(vx1[0], vy2[0], vx1[1], vy2[1])
        if not self.single:
            out = out + lev.combine(vy1[0], vx2[0], vy1[1], vx2[1])
        if self.projected:
            out = out - (self._phi(vx1, vx2) + self._phi(vy1, vy2)) - self.terms * lev.center_inf
        return out

    @property
    def terms(self):
        return 1 if self.single else 2

    def _phi(self, v1, v2):
        lev = self.level
        if self.single:
            return lev.projection_from_values(*v1)
        return lev.projection_from_values(*v1) + lev.projection_from_values(*v2)

    def projection(self, x):
        """First projection ``E h_{a,b}(x, Y) - E h_{a,b}(X, Y)``."""
        x1, x2 = self._windows(np.asarray(x, dtype=np.float64))
        return self._phi(self.level.values(x1), self.level.values(x2))


def build_hab(level: LevelKernel, a: int, b: int, projected=False) -> BlockKernel:
    return BlockKernel(level, a, b, projected)


class _Innovations:
    def __init__(self, source, first_index=None):
        if isinstance(source, SamplePath):
            self.eps, self.first = source.innovations, source.first_index
        else:
            self.eps = np.asarray(source, dtype=np.float64)
            self.first = 1 if first_index is None else int(first_index)

    def slice(self, start, stop):
        lo, hi = start - self.first, stop - self.first
        if lo < 0 or hi > self.eps.shape[0]:
            raise ValueError(f"innovations cover {self.first}..{self.first + self.eps.shape[0] - 1}, "
                             f"need {start}..{stop - 1}")
        return self.eps[lo:hi]


def extract_block_vectors(innovations, ell: int, a: int, b: int, u, first_index=None) -> np.ndarray:
    """Block vector ``eps^{a,b}_u`` (or a stack of them for an array of ``u``)."""
    inn = _Innovations(innovations, first_index)
    size = 4 * ell + 2
    us = np.atleast_1d(np.asarray(u, dtype=np.int64))
    out = np.stack([inn.slice(_block_start(ell, a, b, int(v)), _block_start(ell, a, b, int(v)) + size)
                    for v in us]) if us.size else np.empty((0, size))
    return out[0] if np.ndim(u) == 0 else out


def block_pair_indices(ell, a, b, u, v):
    """Data-index pairs ``(i1, j1, i2, j2)`` evaluated by ``h_{a,b}(eps_u, eps_v)``."""
    o1, o2 = _hab_offsets(ell, a, b)
    su, sv = _block_start(ell, a, b, u), _block_start(ell, a, b, v)
    return su + o1 + ell, sv + o2 + ell, sv + o1 + ell, su + o2 + ell


def _classes(ell):
    size = 4 * ell + 2
    return [(a, b) for a in range(1, size + 1) for b in range(1, a + 1)]


def remainder_terms(bi: BlockIndex):
    """Signed index pairs ``(i, j, sign)`` making up each remainder at level ``bi.ell``."""
    n, ell, size, m = bi.n, bi.ell, bi.block_size, bi.m
    top = size * m
    terms = {k: [] for k in REMAINDER_NAMES if k != "Rproj"}

    def add(name, i, j, s=1.0):
        i = np.atleast_1d(np.asarray(i, dtype=np.int64))
        j = np.atleast_1d(np.asarray(j, dtype=np.int64))
        i, j = np.broadcast_arrays(i, j)
        if i.size:
            terms[name].append((i.ravel(), j.ravel(), np.full(i.size, s)))

    if n > top:
        ii, jj = np.triu_indices(n - top, 1)
        add("R11", ii + top + 1, jj + top + 1)
        ii, jj = np.meshgrid(np.arange(1, top + 1), np.arange(top + 1, n + 1), indexing="ij")
        add("R12", ii, jj)
    au, bu = np.triu_indices(size, 1)
    for u in range(m):
        add("R2", u * size + au + 1, u * size + bu + 1)
    vs = np.arange(1, m)
    for a, b in _classes(ell):
        if a - b <= 2 * ell:
            add("R3", a, vs * size + b)
            if a != b:
                add("R3", b, vs * size + a)
        else:
            add("R4", a, (vs + 1) * size + b)
            add("R4", size + b, vs * size + a)
            us = np.arange(0, m - 1)
            add("R5", us * size + a, (us + 1) * size + b)
            add("R5", us * size + a, m * size + b, -1.0)
            add("R6", b, vs * size + a)
            add("R6", vs * size + b, vs * size + a, -1.0)
    out = {}
    for k, parts in terms.items():
        if parts:
            out[k] = tuple(np.concatenate(p) for p in zip(*parts))
        else:
            out[k] = (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
    return out


def pair_coverage(n: int, ell: int) -> np.ndarray:
    """Signed multiplicity of every index pair over all parts of level ``ell``.

    Entry ``[i, j]`` (``i < j``, 1-based, indices up to ``n + 4l+2``) counts
    how often ``H_{i,j}`` enters the decomposition; an exact decomposition
    has 1 on ``i < j <= n`` and 0 elsewhere.
    """
    size = 4 * ell + 2
    top = n + size + 1
    counts = np.zeros((top + 1, top + 1))

    def put(i, j, s):
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        np.add.at(counts, (lo, hi), s)

    if ell == 0:
        ii, jj = np.triu_indices(n, 1)
        put(ii + 1, jj + 1, 1.0)
        return counts
    bi = block_partition(n, ell)
    for i, j, s in remainder_terms(bi).values():
        put(i, j, s)
    for a, b in _classes(ell):
        for u in range(1, bi.m):
            for v in range(u + 1, bi.m):
                i1, j1, i2, j2 = block_pair_indices(ell, a, b, u, v)
                put(np.array([i1]), np.array([j1]), 1.0)
                if a != b:
                    put(np.array([i2]), np.array([j2]), 1.0)
    return counts


# ---------------------------------------------------------------- decomposition

@dataclass
class LevelDecomposition:
    ell: int
    n: int
    linear: float
    degenerate: dict
    remainders: dict
    direct: float
    residual: float
    linear_exact: float = 0.0
    r7: float = 0.0
    block: BlockIndex | None = None
    parts_abs: float = field(default=0.0, repr=False)

    @property
    def degenerate_sum(self) -> float:
        return float(sum(self.degenerate.values()))

    @property
    def total(self) -> float:
        return self.linear + self.degenerate_sum + float(sum(self.remainders.values()))

    @property
    def relative_residual(self) -> float:
        scale = self.parts_abs + abs(self.direct)
        return abs(self.residual) / scale if scale > 0 else abs(self.residual)


def _zero_decomposition(ell, n, bi=None):
    return LevelDecomposition(ell, n, 0.0, {}, {k: 0.0 for k in REMAINDER_NAMES}, 0.0, 0.0, block=bi)


def decompose_level(level: LevelKernel, innovations, n: int, cond_samples=None,
                    first_index=None) -> LevelDecomposition:
    """Exact split of the centred level-``l`` U-statistic of ``X_1..X_n``.

    ``innovations`` is a :class:`SamplePath` or an array of innovations
    starting at index ``first_index``; it must cover ``1-l .. n+5l+2``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if cond_samples is not None and cond_samples != level.system.cond_samples:
        s = level.system
        system = LevelSystem(s.kernel, s.process, s.tail_samples, cond_samples, s.center_samples, s.stream)
        level = system.level_kernel(level.ell)
    ell = level.ell
    bi = block_partition(n, ell) if ell >= 1 else None
    if level.is_zero:
        return _zero_decomposition(ell, n, bi)
    inn = _Innovations(innovations, first_index)
    size = 4 * ell + 2
    top = n + (size if ell >= 1 else 0)
    windows = sliding_window_view(inn.slice(1 - ell, top + ell + 1), 2 * ell + 1)
    fu, fl = level.values(windows)
    g1 = level.projection_from_values(fu, fl)
    h = level.kernel

    def pair_values(i, j):
        # 1-based data indices into fu / fl
        i0, j0 = i - 1, j - 1
        val = h(fu[i0], fu[j0])
        if ell >= 1:
            val = val - h(fl[i0], fl[j0])
        return val - level.center(j - i)

    ii, jj = np.triu_indices(n, 1)
    direct_terms = pair_values(ii + 1, jj + 1)
    direct = float(np.sum(direct_terms))

    if ell == 0:
        # classical split: n sum h1 + U_n(h2), the n-vs-(n-1) gap is Rproj
        g1n = g1[:n]
        deg_terms = direct_terms - g1n[ii] - g1n[jj]
        linear = float(n * np.sum(g1n))
        degenerate = {(1, 1): float(np.sum(deg_terms))}
        rem = {k: 0.0 for k in REMAINDER_NAMES}
        rem["Rproj"] = float(-np.sum(g1n))
        out = LevelDecomposition(0, n, linear, degenerate, rem, direct, 0.0, linear_exact=linear - np.sum(g1n))
        return _close(out, pair_abs=np.abs(deg_terms).sum())

    m = bi.m
    rem = {}
    abs_parts = 0.0
    for name, (i, j, s) in remainder_terms(bi).items():
        vals = s * pair_values(i, j) if i.size else np.zeros(0)
        rem[name] = float(np.sum(vals))
        abs_parts += float(np.abs(vals).sum())
    degenerate = {}
    linear_exact = 0.0
    if m >= 2:
        us = np.arange(1, m)
        upper = np.triu(np.ones((m - 1, m - 1), dtype=bool), 1)
        for a, b in _classes(ell):
            # h^{(2)}_{a,b} on block vectors, read off the per-index level values
            o1, o2 = _hab_offsets(ell, a, b)
            start = _block_start(ell, a, b, us)
            c1, c2 = start + o1 + ell - 1, start + o2 + ell - 1
            t = h(fu[c1][:, None], fu[c2][None, :]) - h(fl[c1][:, None], fl[c2][None, :])
            if a == b:
                phi = g1[c1]
                hab = t - level.center_inf
            else:
                phi = g1[c1] + g1[c2]
                hab = t + t.T - 2.0 * level.center_inf
            vals = (hab - phi[:, None] - phi[None, :])[upper]
            degenerate[(a, b)] = float(np.sum(vals))
            abs_parts += float(np.abs(vals).sum())
            linear_exact += float((m - 2) * np.sum(phi))
    n_cov = size * m
    linear = float(size * m * np.sum(g1[:n_cov + 1]))
    rem["Rproj"] = linear_exact - linear
    r7 = linear - n * float(np.sum(g1[:n]))
    out = LevelDecomposition(ell, n, linear, degenerate, rem, direct, 0.0, linear_exact=linear_exact,
                             r7=r7, block=bi)
    return _close(out, pair_abs=abs_parts)


def _close(dec: LevelDecomposition, pair_abs=0.0):
    dec.residual = dec.direct - dec.total
    dec.parts_abs = float(pair_abs + abs(dec.linear) + abs(dec.linear_exact)
                          + sum(abs(v) for v in dec.remainders.values()))
    return dec


@dataclass
class GeneralizedDecomposition:
    n: int
    levels: list
    u_n: float
    expected_u: float
    residual: float

    @property
    def centered(self) -> float:
        return self.u_n - self.expected_u

    @property
    def total(self) -> float:
        return float(sum(d.total for d in self.levels))

    @property
    def relative_residual(self) -> float:
        scale = abs(self.centered) + sum(d.parts_abs + abs(d.direct) for d in self.levels)
        return abs(self.residual) / scale if scale > 0 else abs(self.residual)

    def remainder_total(self, name) -> float:
        return float(sum(d.remainders.get(name, 0.0) for d in self.levels))

    @property
    def r7(self) -> float:
        return float(sum(d.r7 for d in self.levels))


def path_margin(process: ShiftProcess, max_level: int) -> int:
    return max(process.halfwidth, 5 * max(max_level, 0) + 2)


def decompose_path(system: LevelSystem, path: SamplePath, L_max: int) -> GeneralizedDecomposition:
    n = path.n
    levels = [decompose_level(system.level_kernel(ell), path, n) for ell in range(L_max + 1)]
    # E U_n consistent with the level centring: sum over all levels of the constants
    top = max(L_max, system.process.halfwidth)
    lag = np.arange(1, n)
    mean_lag = np.zeros(n - 1)
    for ell in range(top + 1):
        mean_lag += system.level_kernel(ell).center(lag)
    expected = float(np.sum((n - lag) * mean_lag))
    u_n = u_statistic(system.kernel, path.values)
    residual = (u_n - expected) - float(sum(d.total for d in levels))
    return GeneralizedDecomposition(n, levels, u_n, expected, residual)


def generalized_decomposition(kernel: PairKernel, process: ShiftProcess, n: int, L_max: int | None = None,
                              M=DEFAULT_COND_SAMPLES, stream=None, tail_samples=DEFAULT_TAIL_SAMPLES,
                              center_samples=DEFAULT_CENTER_SAMPLES) -> GeneralizedDecomposition:
    """Decompose ``U_n - E U_n`` over levels ``0..L_max`` (default: the window halfwidth).

    With ``L_max >= W`` the reconstruction is exact up to rounding; smaller
    ``L_max`` leaves the omitted levels in ``residual``.
    """
    stream = as_stream(stream)
    L = process.halfwidth if L_max is None else int(L_max)
    system = LevelSystem(kernel, process, tail_samples, M, center_samples, stream.child("levels"))
    path = generate_path(process, n, stream.child("path"), margin=path_margin(process, L))
    return decompose_path(system, path, L)
