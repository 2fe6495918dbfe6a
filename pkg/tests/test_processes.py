import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bershift.errors import ConfigurationError
from bershift.processes import (CUSTOM_EVALUATORS, InnovationSpec, SamplePath, ShiftFunctional,
                                ShiftProcess, generate_path, geometric_functional, innovation_range,
                                sample_innovations, truncated_functional)
from bershift.rng import Stream


def test_rademacher_values_and_determinism(rademacher):
    a = sample_innovations(rademacher, 4, 7)
    b = sample_innovations(rademacher, 4, 7)
    assert set(np.unique(a)) <= {-1.0, 1.0}
    np.testing.assert_array_equal(a, b)


def test_rademacher_mean_frequency(rademacher):
    N = 400
    hits = [abs(sample_innovations(rademacher, N, Stream(3, (k,))).mean()) <= 4 / np.sqrt(N)
            for k in range(200)]
    assert np.mean(hits) >= 0.99


def test_gaussian_and_uniform_moments():
    g = sample_innovations(InnovationSpec.gaussian(0, 1), 10**6, 11)
    assert abs(g.mean()) <= 0.01
    u = sample_innovations(InnovationSpec.uniform(0, 1), 10**6, 12)
    assert abs(u.var() - 1 / 12) <= 0.005


@pytest.mark.parametrize("bad", [lambda: InnovationSpec.gaussian(0, 0), lambda: InnovationSpec.gaussian(0, np.inf),
                                 lambda: InnovationSpec.uniform(1, 1), lambda: InnovationSpec("cauchy")])
def test_invalid_parameters(bad):
    with pytest.raises(ConfigurationError):
        bad()


def test_substreams_differ_and_coordinates_are_stable(rademacher):
    a = innovation_range(rademacher, Stream(5, (1,)), -10, 5000)
    b = innovation_range(rademacher, Stream(5, (2,)), -10, 5000)
    assert not np.array_equal(a, b)
    # eps_t depends only on (stream, t), not on the requested range
    c = innovation_range(rademacher, Stream(5, (1,)), 4000, 4200)
    np.testing.assert_array_equal(a[4010:4210], c)


def test_identity_embedding(rademacher):
    proc = ShiftProcess(rademacher, ShiftFunctional.linear({0: 1.0}))
    path = generate_path(proc, 5, 1)
    np.testing.assert_array_equal(path.values, path.eps(1, 6))


def test_ma1_lag1_autocovariance(ma1_gaussian):
    x = generate_path(ma1_gaussian, 10**5, 2).values
    xc = x - x.mean()
    assert abs(np.dot(xc[:-1], xc[1:]) / x.size - 0.5) <= 0.02


def test_moving_average_convention(rademacher):
    proc = ShiftProcess(rademacher, ShiftFunctional.linear({0: 1.0, 1: 0.5, -2: 0.25}))
    path = generate_path(proc, 30, 4)
    eps = path.eps
    for j in range(1, 31):
        want = eps(j, j + 1)[0] + 0.5 * eps(j - 1, j)[0] + 0.25 * eps(j + 2, j + 3)[0]
        assert path.values[j - 1] == pytest.approx(want, abs=1e-15)


def test_custom_square_constant_path(rademacher):
    proc = ShiftProcess(rademacher, ShiftFunctional.custom(0, lambda v: v[..., 0] ** 2))
    np.testing.assert_array_equal(generate_path(proc, 50, 3).values, np.ones(50))


def test_path_values_recomputable(custom_tanh):
    path = generate_path(custom_tanh, 40, 9)
    w = path.windows(1, 40, 2)
    np.testing.assert_array_equal(custom_tanh.functional(w), path.values)


def test_generate_path_short(ma1_gaussian):
    with pytest.raises(ValueError):
        generate_path(ma1_gaussian, 1, 0)


def test_linear_truncation_geometric():
    proc = ShiftProcess(InnovationSpec.rademacher(), geometric_functional(0.5))
    assert proc.halfwidth >= 30
    assert truncated_functional(proc, 1, [1.0, 1.0, 1.0]) == pytest.approx(2.0, abs=1e-15)


def test_geometric_tail_below_tolerance():
    f = geometric_functional(0.5)
    a = np.abs(f.coeffs)
    w = f.halfwidth
    total = (1 + 0.5) / 0.5
    assert 2 * 0.5 ** (w + 1) / 0.5 < 1e-12 * total
    assert a.sum() == pytest.approx(total, rel=1e-11)


def test_linear_truncation_mean_shift():
    proc = ShiftProcess(InnovationSpec.gaussian(2.0, 1.0), ShiftFunctional.linear({0: 1.0, 1: 0.5, -1: 0.25}))
    # outer coefficients enter through E[eps] = 2
    assert truncated_functional(proc, 0, [3.0]) == pytest.approx(3.0 + 0.75 * 2.0)


def test_custom_truncation_superset_is_exact(custom_tanh):
    w = np.random.default_rng(0).uniform(-1, 1, 7)
    direct = float(custom_tanh.functional(w[1:6]))
    assert truncated_functional(custom_tanh, 3, w) == direct


def test_custom_product_level0_conditional_mean(rademacher):
    proc = ShiftProcess(rademacher, ShiftFunctional.custom(1, CUSTOM_EVALUATORS["product"]))
    M = 4096
    val = truncated_functional(proc, 0, [1.0], tail_samples=M, stream=3)
    # the tail average of eps_{-1} eps_1 has standard deviation 1/sqrt(M)
    assert abs(val) <= 3 / np.sqrt(M)


def test_truncation_length_mismatch(ma1_gaussian):
    with pytest.raises(ValueError):
        truncated_functional(ma1_gaussian, 1, [0.0, 1.0])


def test_linear_truncation_uses_no_randomness(ma1_gaussian):
    a = truncated_functional(ma1_gaussian, 0, [1.5], stream=1)
    b = truncated_functional(ma1_gaussian, 0, [1.5], stream=2)
    assert a == b == 1.5


def test_tower_property(custom_tanh):
    # E[f_2 | inner 3 coordinates] estimated by fresh outer draws converges to f_1
    rng = np.random.default_rng(5)
    inner = rng.uniform(-1, 1, 3)
    f1 = truncated_functional(custom_tanh, 1, inner, tail_samples=4096)
    M = 100_000
    outer = rng.uniform(-1, 1, (M, 2))
    windows = np.column_stack([outer[:, 0], np.tile(inner, (M, 1)), outer[:, 1]])
    vals = custom_tanh.functional(windows)
    se = vals.std(ddof=1) / np.sqrt(M)
    # f1 itself carries tail-average error at M=4096
    tail_se = vals.std() / np.sqrt(4096)
    assert abs(vals.mean() - f1) <= 3 * np.hypot(se, tail_se)


def test_non_integer_offset_rejected():
    with pytest.raises(ConfigurationError):
        ShiftFunctional.linear({0.5: 1.0})


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3), st.integers(0, 2**32))
def test_truncation_consistency_property(extra, seed):
    proc = ShiftProcess(InnovationSpec.uniform(-1, 1), ShiftFunctional.custom(1, CUSTOM_EVALUATORS["max"]))
    ell = 1 + extra
    w = np.random.default_rng(seed).uniform(-1, 1, 2 * ell + 1)
    mid = w[ell - 1:ell + 2]
    assert truncated_functional(proc, ell, w) == float(proc.functional(mid))
