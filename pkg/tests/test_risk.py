import math

import numpy as np
import pytest

from rupsim import (BaselineConfig, CorrelatedNoiseSpec, LpeConfig, RegressionFunction,
                    dist_var_weight_oracle, mise_mc, oracle_bandwidth,
                    optimal_bandwidth_curve, pointwise_risk_mc, rate_fit,
                    sine_function, zero_function)


def affine_function(a=0.5, b=1.5):
    return RegressionFunction("affine", beta=2.0, holder_const=1.0,
                              _fn=lambda x: a + b * x)


def corr_spec(tau, base, b_x=10):
    return CorrelatedNoiseSpec(b_x=b_x, delta2=tau * b_x, baseline=base)


def test_zero_strength_dist_var_is_noise():
    base = BaselineConfig(f=sine_function(), sigma2=0.5, n=300)
    rep = pointwise_risk_mc(base, corr_spec(0.0, base), LpeConfig(order=1, bandwidth=0.15),
                            x0=0.5, reps_xi=60, reps_data=20, seed=0)
    assert abs(rep.diagnostics["dist_var_raw"]) <= 3 * rep.se_dist


def test_noiseless_affine_zero_risk():
    base = BaselineConfig(f=affine_function(), sigma2=0.0, n=200)
    rep = pointwise_risk_mc(base, corr_spec(0.0, base), LpeConfig(order=1, bandwidth=0.2),
                            x0=0.4, reps_xi=5, reps_data=5, seed=1)
    assert rep.total_mse < 1e-10
    assert rep.bias2 < 1e-10


def test_identity_holds_within_combined_se():
    base = BaselineConfig(f=sine_function(), sigma2=1.0, n=250)
    for tau, h, seed in ((0.0, 0.15, 2), (0.02, 0.2, 3)):
        rep = pointwise_risk_mc(base, corr_spec(tau, base),
                                LpeConfig(order=1, bandwidth=h),
                                x0=0.5, reps_xi=100, reps_data=25, seed=seed)
        assert abs(rep.identity_residual) <= 3 * rep.se_combined
        assert rep.dist_var >= 0.0
        assert rep.diagnostics["dist_var_raw"] >= -3 * rep.se_dist


def test_dist_var_matches_weight_resampling_oracle():
    base = BaselineConfig(f=zero_function(), sigma2=1.0, n=400)
    spec = corr_spec(0.025, base)  # delta2 = 0.25
    lpe = LpeConfig(order=1, bandwidth=0.1)
    rep = pointwise_risk_mc(base, spec, lpe, x0=0.5, reps_xi=150, reps_data=30, seed=4)
    oracle, oracle_se = dist_var_weight_oracle(base, spec, lpe, x0=0.5, reps=1500, seed=5)
    gap = rep.diagnostics["dist_var_raw"] - oracle
    assert abs(gap) <= 3 * math.sqrt(rep.se_dist ** 2 + oracle_se ** 2)


def test_dist_var_nondecreasing_in_delta2():
    base = BaselineConfig(f=zero_function(), sigma2=1.0, n=300)
    lpe = LpeConfig(order=1, bandwidth=0.12)
    reports = [pointwise_risk_mc(base, corr_spec(tau, base), lpe, x0=0.5,
                                 reps_xi=120, reps_data=25, seed=6)
               for tau in (0.0, 0.01, 0.04)]
    for lo, hi in zip(reports, reports[1:]):
        slack = 3 * math.sqrt(lo.se_dist ** 2 + hi.se_dist ** 2)
        assert hi.diagnostics["dist_var_raw"] >= lo.diagnostics["dist_var_raw"] - slack


def test_risk_floor_at_positive_tau():
    # with h fixed near h*(tau), growing n cannot push the risk to zero
    tau = 0.05
    lpe = LpeConfig(order=1, bandwidth=oracle_bandwidth(1000, tau, 2.0))
    reports = {}
    for n in (1000, 8000):
        base = BaselineConfig(f=sine_function(), sigma2=1.0, n=n)
        reports[n] = pointwise_risk_mc(base, corr_spec(tau, base), lpe, x0=0.5,
                                       reps_xi=80, reps_data=10, seed=7)
    assert reports[8000].total_mse > 0.5 * reports[1000].total_mse


def test_pointwise_risk_threads_deterministic():
    base = BaselineConfig(f=sine_function(), sigma2=0.5, n=150)
    kwargs = dict(base=base, spec=corr_spec(0.01, base),
                  lpe=LpeConfig(order=1, bandwidth=0.2), x0=0.5,
                  reps_xi=20, reps_data=8, seed=8)
    a = pointwise_risk_mc(**kwargs, threads=1)
    b = pointwise_risk_mc(**kwargs, threads=4)
    assert a.total_mse == b.total_mse
    assert a.dist_var == b.dist_var


def test_tiny_bandwidth_aborts_with_diagnostic():
    base = BaselineConfig(f=sine_function(), sigma2=0.5, n=40)
    with pytest.raises(RuntimeError, match="local support"):
        pointwise_risk_mc(base, corr_spec(0.0, base),
                          LpeConfig(order=1, bandwidth=0.001), x0=0.5,
                          reps_xi=10, reps_data=5, seed=9)


def test_mise_noiseless_affine_is_zero_everywhere():
    base = BaselineConfig(f=affine_function(), sigma2=0.0, n=300)
    curve = mise_mc(base, corr_spec(0.0, base), LpeConfig(order=1, bandwidth=0.1),
                    h_grid=[0.1, 0.2, 0.4], eval_grid=np.linspace(0.05, 0.95, 51),
                    reps=3, seed=10)
    assert np.all(curve.mise < 1e-14)
    assert curve.argmin_h == 0.4  # plateau resolves to the largest h


def test_mise_smoke_shapes_and_common_seed_reuse():
    base = BaselineConfig(f=sine_function(), sigma2=0.5, n=200)
    h_grid = [0.08, 0.16, 0.32]
    curve = mise_mc(base, corr_spec(0.01, base), LpeConfig(order=1, bandwidth=0.1),
                    h_grid=h_grid, eval_grid=np.linspace(0.05, 0.95, 41),
                    reps=2, seed=11)
    assert len(curve.rows) == len(h_grid)
    assert np.all(np.diff(curve.h) > 0)
    again = mise_mc(base, corr_spec(0.01, base), LpeConfig(order=1, bandwidth=0.1),
                    h_grid=h_grid, eval_grid=np.linspace(0.05, 0.95, 41),
                    reps=2, seed=11)
    assert np.array_equal(curve.mise, again.mise)


def test_mise_threads_bit_identical():
    base = BaselineConfig(f=sine_function(), sigma2=0.5, n=200)
    kwargs = dict(base=base, spec=corr_spec(0.02, base),
                  lpe_base=LpeConfig(order=1, bandwidth=0.1),
                  h_grid=[0.1, 0.2], eval_grid=np.linspace(0.05, 0.95, 31),
                  reps=6, seed=12)
    assert np.array_equal(mise_mc(**kwargs, threads=1).mise,
                          mise_mc(**kwargs, threads=4).mise)


def test_mise_argmin_grows_with_tau():
    base = BaselineConfig(f=sine_function(), sigma2=0.5, n=400)
    h_grid = np.geomspace(0.05, 0.5, 10)
    eval_grid = np.linspace(0.05, 0.95, 61)
    lpe = LpeConfig(order=1, bandwidth=0.1)
    argmins = []
    for tau in (0.0, 0.02):
        curve = mise_mc(base, corr_spec(tau, base), lpe, h_grid, eval_grid,
                        reps=40, seed=13)
        argmins.append(curve.argmin_h)
    assert argmins[1] >= argmins[0]


def test_mise_invalid_h_scored_infinite():
    base = BaselineConfig(f=sine_function(), sigma2=0.5, n=30)
    curve = mise_mc(base, corr_spec(0.0, base), LpeConfig(order=1, bandwidth=0.1),
                    h_grid=[0.004, 0.3], eval_grid=np.linspace(0.05, 0.95, 41),
                    reps=3, seed=14)
    assert np.isinf(curve.mise[0])
    assert np.isfinite(curve.mise[1])
    assert curve.argmin_h == 0.3
    assert 0.004 in curve.meta["failed_h"]


def test_optimal_bandwidth_curve_single_cell():
    base = BaselineConfig(f=sine_function(), sigma2=0.5, n=200)
    rows = optimal_bandwidth_curve(base, LpeConfig(order=1, bandwidth=0.1), b_x=10,
                                   tau_grid=[0.01], n_grid=[200],
                                   h_grid=[0.1, 0.2, 0.4],
                                   eval_grid=np.linspace(0.05, 0.95, 31),
                                   reps=4, seed=15)
    assert len(rows) == 1
    assert rows[0]["n"] == 200 and rows[0]["tau"] == 0.01
    assert rows[0]["h_star"] in (0.1, 0.2, 0.4)


def test_rate_fit_exact_line_and_errors():
    xs = np.array([1.0, 2.0, 3.0, 4.0])
    slope, intercept, r2 = rate_fit(xs, -0.8 * xs + 1.0)
    assert slope == pytest.approx(-0.8, abs=1e-12)
    assert intercept == pytest.approx(1.0, abs=1e-12)
    assert r2 == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        rate_fit([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        rate_fit([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
