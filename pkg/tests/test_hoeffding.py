import numpy as np
import pytest

from bershift.hoeffding import (LevelSystem, block_partition, build_hab, decompose_level, extract_block_vectors,
                                generalized_decomposition, level_kernel, pair_coverage, path_margin)
from bershift.kernels import abs_diff_kernel, product_kernel, sum_kernel, variance_kernel
from bershift.processes import InnovationSpec, ShiftFunctional, ShiftProcess, generate_path, innovation_range
from bershift.rng import Stream
from bershift.ustat import u_statistic_ind


def _covered_target(n, size):
    t = np.zeros((size, size))
    for i in range(1, n + 1):
        t[i, i + 1:n + 1] = 1.0
    return t


def test_block_partition_examples():
    b = block_partition(100, 1)
    assert (b.block_size, b.m, list(b.residual)) == (6, 16, [97, 98, 99, 100])
    b = block_partition(6, 1)
    assert b.m == 1 and len(b.residual) == 0
    b = block_partition(20, 2)
    assert (b.block_size, b.m, len(b.residual)) == (10, 2, 0)
    assert block_partition(5, 1).skipped


def test_block_coordinates_unique():
    b = block_partition(100, 2)
    seen = set()
    for j in b.covered:
        u, a = b.coordinates(j)
        assert j == u * b.block_size + a and 1 <= a <= b.block_size and 0 <= u < b.m
        seen.add((u, a))
    assert len(seen) == len(b.covered)
    assert set(b.covered) | set(b.residual) == set(range(1, 101))


def test_level_kernel_zero_above_window(ma2_rademacher):
    lk = level_kernel(variance_kernel(), ma2_rademacher, 3)
    v = np.random.default_rng(0).choice([-1.0, 1.0], size=(20, 7))
    w = np.random.default_rng(1).choice([-1.0, 1.0], size=(20, 7))
    assert lk.is_zero
    np.testing.assert_array_equal(lk(v, w), np.zeros(20))


def test_level_kernel_sum_linear(rademacher):
    a = {-2: 0.7, -1: 0.2, 0: 1.0, 1: 0.5, 2: -0.3}
    proc = ShiftProcess(rademacher, ShiftFunctional.linear(a))
    rng = np.random.default_rng(3)
    for ell in (1, 2):
        lk = level_kernel(sum_kernel(), proc, ell)
        v, w = rng.choice([-1.0, 1.0], size=(2, 50, 2 * ell + 1))
        # a_l multiplies the oldest coordinate, a_{-l} the newest
        want = a[ell] * (v[:, 0] + w[:, 0]) + a[-ell] * (v[:, -1] + w[:, -1])
        np.testing.assert_allclose(lk(v, w), want, atol=1e-14)


def test_level_kernel_identity_level0(rademacher):
    proc = ShiftProcess(rademacher, ShiftFunctional.linear({0: 1.0}))
    lk = level_kernel(abs_diff_kernel(0.5), proc, 0)
    x, y = np.array([[1.0], [-1.0]]), np.array([[-1.0], [-1.0]])
    np.testing.assert_array_equal(lk(x, y), abs_diff_kernel(0.5)(x[:, 0], y[:, 0]))


def test_hab_near_class_slicing(ma2_rademacher):
    lk = level_kernel(variance_kernel(), ma2_rademacher, 1)
    hab = build_hab(lk, 3, 1)
    x, y = np.random.default_rng(4).normal(size=(2, 6))
    want = lk(x[2:5], y[0:3]) + lk(y[2:5], x[0:3])
    assert hab(x, y) == pytest.approx(float(want), abs=1e-13)
    assert hab(x, y) == pytest.approx(float(hab(y, x)), abs=1e-13)
    assert build_hab(lk, 2, 2).offsets == (0, 0)


def test_hab_symmetry_all_classes(ma2_rademacher):
    lk = level_kernel(variance_kernel(), ma2_rademacher, 2)
    x, y = np.random.default_rng(5).normal(size=(2, 30, 10))
    for a in range(1, 11):
        for b in range(1, a + 1):
            hab = build_hab(lk, a, b)
            np.testing.assert_allclose(hab(x, y), hab(y, x), atol=1e-12)


def test_hab_argument_errors(ma2_rademacher):
    lk = level_kernel(variance_kernel(), ma2_rademacher, 1)
    with pytest.raises(ValueError):
        build_hab(lk, 1, 3)
    with pytest.raises(ValueError):
        build_hab(lk, 7, 1)


def test_block_vectors_examples():
    eps = np.arange(-5, 60, dtype=float)   # eps_t = t
    first = -5
    np.testing.assert_array_equal(extract_block_vectors(eps, 1, 1, 1, 0, first_index=first), np.arange(0, 6))
    np.testing.assert_array_equal(extract_block_vectors(eps, 1, 1, 1, 1, first_index=first), np.arange(6, 12))
    np.testing.assert_array_equal(extract_block_vectors(eps, 1, 5, 1, 0, first_index=first), np.arange(3, 9))
    with pytest.raises(ValueError):
        extract_block_vectors(eps, 1, 1, 1, 20, first_index=first)


def test_block_vectors_disjoint():
    eps = np.arange(-20, 400, dtype=float)
    for ell in (1, 2, 3):
        size = 4 * ell + 2
        for a in range(1, size + 1):
            for b in range(1, a + 1):
                vecs = extract_block_vectors(eps, ell, a, b, np.arange(0, 8), first_index=-20)
                assert np.unique(vecs).size == vecs.size


@pytest.mark.parametrize("ell", [0, 1, 2])
def test_pair_coverage_exhaustive(ell):
    for n in range(2, 61):
        c = pair_coverage(n, ell)
        np.testing.assert_array_equal(c, _covered_target(n, c.shape[0]))


@pytest.mark.parametrize("n,ell", [(50, 1), (100, 2), (61, 1), (37, 2), (5, 1), (23, 3)])
def test_identity_ma2(ma2_rademacher, n, ell):
    system = LevelSystem(variance_kernel(), ma2_rademacher)
    path = generate_path(ma2_rademacher, n, 11, margin=path_margin(ma2_rademacher, ell))
    dec = decompose_level(system.level_kernel(ell), path, n)
    assert dec.relative_residual <= 1e-9


def test_identity_custom_process(custom_tanh):
    system = LevelSystem(product_kernel(), custom_tanh, tail_samples=128, cond_samples=128, center_samples=5000,
                         stream=2)
    for ell in (0, 1, 2):
        path = generate_path(custom_tanh, 70, 3, margin=path_margin(custom_tanh, ell))
        dec = decompose_level(system.level_kernel(ell), path, 70)
        assert dec.relative_residual <= 1e-9
        assert abs(dec.direct) > 0


def test_skipped_level_goes_to_direct_sum(ma2_rademacher):
    system = LevelSystem(variance_kernel(), ma2_rademacher)
    path = generate_path(ma2_rademacher, 8, 1, margin=20)
    dec = decompose_level(system.level_kernel(2), path, 8)
    assert dec.block.skipped
    assert dec.remainders["R11"] == pytest.approx(dec.direct, abs=1e-12)
    assert dec.linear == 0.0 and dec.degenerate == {}


def test_zero_level(ma2_rademacher):
    system = LevelSystem(variance_kernel(), ma2_rademacher)
    path = generate_path(ma2_rademacher, 40, 1, margin=20)
    dec = decompose_level(system.level_kernel(3), path, 40)
    assert dec.direct == 0 and dec.residual == 0 and dec.linear == 0
    assert all(v == 0 for v in dec.remainders.values())


def test_insufficient_innovations(ma2_rademacher):
    system = LevelSystem(variance_kernel(), ma2_rademacher)
    path = generate_path(ma2_rademacher, 60, 1)      # margin W only
    with pytest.raises(ValueError):
        decompose_level(system.level_kernel(2), path, 60)


def test_classical_split(rademacher):
    proc = ShiftProcess(InnovationSpec.gaussian(), ShiftFunctional.linear({0: 1.0}))
    k = variance_kernel()
    system = LevelSystem(k, proc)
    path = generate_path(proc, 200, 8)
    dec = decompose_level(system.level_kernel(0), path, 200)
    x = path.values
    h1 = (x * x - 1) / 2
    ii, jj = np.triu_indices(200, 1)
    h2 = -x[ii] * x[jj]
    assert dec.linear == pytest.approx(200 * h1.sum(), rel=1e-10)
    assert dec.degenerate[(1, 1)] == pytest.approx(h2.sum(), rel=1e-10)
    assert dec.relative_residual <= 1e-10


def test_fast_blocks_match_block_kernel(ma2_rademacher):
    # the decomposition reads block U-statistics off per-index values; compare
    # with the block kernels evaluated on extracted vectors
    proc = ShiftProcess(InnovationSpec.gaussian(), ma2_rademacher.functional)
    system = LevelSystem(abs_diff_kernel(0.5), proc)
    n, ell = 64, 1
    path = generate_path(proc, n, 5, margin=path_margin(proc, ell))
    lk = system.level_kernel(ell)
    dec = decompose_level(lk, path, n)
    m = dec.block.m
    for (a, b), val in dec.degenerate.items():
        vecs = extract_block_vectors(path, ell, a, b, np.arange(1, m))
        ref = u_statistic_ind(build_hab(lk, a, b, projected=True), vecs)
        assert val == pytest.approx(ref, rel=1e-10, abs=1e-10)


def test_block_kernels_degenerate(ma1_gaussian):
    lk = level_kernel(variance_kernel(), ma1_gaussian, 1)
    rng = np.random.default_rng(9)
    R = 40_000
    for a, b in [(1, 1), (3, 1), (6, 2), (5, 1)]:
        hab2 = build_hab(lk, a, b, projected=True)
        for _ in range(3):
            v = rng.normal(size=6)
            fresh = rng.normal(size=(R, 6))
            vals = hab2(np.broadcast_to(v, fresh.shape), fresh)
            assert abs(vals.mean()) <= 4 * vals.std(ddof=1) / np.sqrt(R) + 1e-12


def test_generalized_decomposition_closes(ma2_rademacher):
    for seed in range(3):
        g = generalized_decomposition(variance_kernel(), ma2_rademacher, 120, stream=seed)
        assert len(g.levels) == 3
        assert g.relative_residual <= 1e-9


def test_generalized_iid_single_level():
    proc = ShiftProcess(InnovationSpec.gaussian(), ShiftFunctional.linear({0: 1.0}))
    g = generalized_decomposition(variance_kernel(), proc, 80, stream=1)
    assert len(g.levels) == 1 and g.relative_residual <= 1e-10


def test_partial_levels_residual_is_tail(ma2_rademacher):
    full = generalized_decomposition(variance_kernel(), ma2_rademacher, 90, stream=4)
    part = generalized_decomposition(variance_kernel(), ma2_rademacher, 90, L_max=1, stream=4)
    np.testing.assert_array_equal(full.levels[0].direct, part.levels[0].direct)
    tail = full.levels[2].total
    assert part.residual == pytest.approx(tail, rel=1e-9, abs=1e-9)
    assert abs(part.residual) <= sum(abs(d.direct) for d in full.levels[2:]) + 1e-9


def test_generalized_custom_mc(custom_tanh):
    g = generalized_decomposition(variance_kernel(), custom_tanh, 60, M=128, tail_samples=128,
                                  center_samples=5000, stream=6)
    assert g.relative_residual <= 1e-9
