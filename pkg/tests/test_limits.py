import numpy as np
import pytest

from bershift.errors import ConfigurationError, DegenerateVarianceError
from bershift.kernels import PairKernel, sum_kernel, variance_kernel, zero_kernel
from bershift.limits import (clt_experiment, lil_statistic, ll_function, lln_experiment, remainder_decay,
                             sigma_squared, y_value)
from bershift.processes import InnovationSpec, ShiftFunctional, ShiftProcess, generate_path


def test_ll_function():
    assert ll_function(1.0) == 1.0
    assert ll_function(np.exp(np.exp(2.0))) == pytest.approx(2.0)
    xs = np.linspace(0, 1e6, 1000)
    v = ll_function(xs)
    assert np.all(v >= 1) and np.all(np.diff(v) >= 0)
    assert ll_function(0.0) == 1.0


def test_y_values(ma1_gaussian, rademacher):
    w = np.array([[0.3, -1.2, 2.0], [1.0, 1.0, 1.0]])
    # sum kernel: Y is the level-1 functional itself, X = e_j + 0.5 e_{j-1}
    np.testing.assert_allclose(y_value(sum_kernel(), ma1_gaussian, 1, w), w[:, 1] + 0.5 * w[:, 0])
    ident = ShiftProcess(rademacher, ShiftFunctional.linear({0: 1.0}))
    assert y_value(variance_kernel(), ident, 0, [1.0]) == 0.0
    assert y_value(variance_kernel(), ident, 0, [-1.0]) == 0.0
    x = 2.0 * 1.0 + 0.5 * -0.4
    assert y_value(variance_kernel(), ma1_gaussian, 1, [-0.4, 2.0, 7.0]) == pytest.approx((x * x - 1.25) / 2)


def test_y_value_mc(ma1_gaussian):
    mc_kernel = PairKernel("variance_mc", variance_kernel().evaluator)
    x = 1.0 + 0.5 * 0.2
    val = y_value(mc_kernel, ma1_gaussian, 1, [0.2, 1.0, 0.0], M=200_000, center_samples=200_000, stream=1)
    assert val == pytest.approx((x * x - 1.25) / 2, abs=0.02)


def test_sigma_squared_oracles(ma1_gaussian):
    iid = ShiftProcess(InnovationSpec.gaussian(), ShiftFunctional.linear({0: 1.0}))
    s = sigma_squared(variance_kernel(), iid, 2, 200_000, stream=1)
    assert abs(s.sigma2 - 0.5) <= 4 * s.se
    s = sigma_squared(variance_kernel(), ma1_gaussian, 6, 400_000, stream=2)
    assert abs(s.sigma2 - 1.03125) <= 4 * s.se
    s = sigma_squared(sum_kernel(), ma1_gaussian, 6, 400_000, stream=3)
    assert abs(s.sigma2 - 2.25) <= 4 * s.se


def test_sigma_truncation_consistency(ma1_gaussian):
    a = sigma_squared(variance_kernel(), ma1_gaussian, 4, 400_000, stream=4)
    b = sigma_squared(variance_kernel(), ma1_gaussian, 8, 400_000, stream=4)
    assert abs(a.sigma2 - b.sigma2) <= 3 * np.hypot(a.se, b.se)


def test_clt_centering_and_reproducibility(ma1_gaussian):
    r1 = clt_experiment(variance_kernel(), ma1_gaussian, 300, 200, 6, stream=5, sigma_path=100_000)
    r2 = clt_experiment(variance_kernel(), ma1_gaussian, 300, 200, 6, stream=5, sigma_path=100_000, workers=3)
    np.testing.assert_array_equal(r1.statistics, r2.statistics)
    assert r1.summary == r2.summary
    s = r1.summary
    assert abs(s["mean"]) <= 4 * np.sqrt(s["sigma2_hat"] / 200)


def test_clt_degenerate_refusal(rademacher):
    iid = ShiftProcess(rademacher, ShiftFunctional.linear({0: 1.0}))
    with pytest.raises(DegenerateVarianceError, match="degenerate-variance"):
        clt_experiment(variance_kernel(), iid, 100, 50, 2, stream=1, sigma_path=50_000)


def test_classical_recovery():
    # i.i.d. data: n^{-3/2}(U_n - E U_n) has limiting variance Var(h_1(X))
    iid = ShiftProcess(InnovationSpec.gaussian(), ShiftFunctional.linear({0: 1.0}))
    rep = clt_experiment(variance_kernel(), iid, 400, 3000, 2, stream=6, sigma_path=200_000)
    var_h1 = 0.5     # Var((X^2 - 1) / 2) for a standard normal
    assert abs(rep.summary["variance"] / var_h1 - 1) <= 0.07
    assert abs(rep.summary["sigma2_hat"] / var_h1 - 1) <= 0.07


def test_lln_zero_and_sum(ma1_gaussian):
    rep = lln_experiment(zero_kernel(), ma1_gaussian, 1.5, 1000, [250, 500], R=5, stream=1)
    assert np.all(rep.statistics[:, 1:] == 0)
    rep = lln_experiment(sum_kernel(), ma1_gaussian, 1.2, 1000, [250, 500], R=4, stream=2)
    for r in range(4):
        x = generate_path(ma1_gaussian, 1000, rep_stream(2, r)).values
        n = np.arange(1, 1001)
        dev = np.abs((n - 1) * np.cumsum(x)) * n ** -(1 + 1 / 1.2)
        want = [dev[c - 1:].max() for c in (250, 500)]
        np.testing.assert_allclose(rep.statistics[r, 1:], want, rtol=1e-9)


def rep_stream(seed, r):
    from bershift.rng import Stream
    return Stream(seed).child("rep", r)


def test_lln_p_range(ma1_gaussian):
    with pytest.raises(ConfigurationError, match=r"p in \[1,2\)"):
        lln_experiment(variance_kernel(), ma1_gaussian, 2.0, 1000, R=2)


def test_lil_zero_and_sum(ma1_gaussian):
    rep = lil_statistic(zero_kernel(), ma1_gaussian, 600, R=3, stream=1)
    assert np.all(rep.statistics[:, 1:] == 0)
    rep = lil_statistic(sum_kernel(), ma1_gaussian, 600, R=3, stream=3)
    for r in range(3):
        x = generate_path(ma1_gaussian, 600, rep_stream(3, r)).values
        s = np.cumsum(x)
        best = 0.0
        for n in range(2, 601):
            best = max(best, abs((n - 1) * s[n - 1]) / (n ** 1.5 * np.sqrt(ll_function(n))))
        assert rep.statistics[r, 2] == pytest.approx(best, rel=1e-9)


def test_remainder_decay_zero_kernel(ma1_gaussian):
    rep = remainder_decay(zero_kernel(), ma1_gaussian, [40, 80], R=3, theta_R=100, stream=1)
    assert np.all(rep.statistics[:, 2:] == 0)
    assert rep.summary["sum_l_theta_l1"] == 0.0


def test_remainder_decay_small(ma2_rademacher):
    rep = remainder_decay(variance_kernel(), ma2_rademacher, [60, 120], R=4, theta_R=2000, stream=2)
    assert rep.statistics.shape == (8, 11)
    assert np.all(np.isfinite(rep.statistics))
    with pytest.raises(ValueError):
        remainder_decay(variance_kernel(), ma2_rademacher, [120, 60], R=2)
