import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from riskest import analysis
from riskest.analysis import (bias_bounds, bias_bounds_grid, bias_variance_report, bias_variance_reports, by_inf,
                              cb_inf, ht_divergence_limit, ht_inner_product_exact, ht_inner_product_mc, mc_df,
                              mc_optimism_decomposition, mc_risk, measured_cb_rvar, risk_alpha_curve,
                              rvar_leading_terms, stein_formula_check)
from riskest.gaussian_model import NormalModel
from riskest.predictors import (DesignContext, ForwardStepwise, HardThreshold, Identity, LinearSmoother,
                                SoftThreshold, UnsupportedDivergenceError, Zero)
from riskest.rng import RngSeed


def smoother(n, seed=0):
    A = np.random.default_rng(seed).standard_normal((n, n))
    return 0.15 * (A + A.T) / np.sqrt(n) + 0.4 * np.eye(n)


MODEL = NormalModel(np.linspace(-2, 2, 10), 1.3)


# --- oracles ---------------------------------------------------------------------

def test_mc_risk_simple_rules():
    est = mc_risk(MODEL, Identity(), 0.0, 50_000, RngSeed(1))
    assert est.within(MODEL.n * MODEL.sigma2)
    for a in (0.0, 0.5):
        est = mc_risk(MODEL, Zero(), a, 100, RngSeed(2))
        assert est.value == pytest.approx(MODEL.theta @ MODEL.theta) and est.std_error == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        mc_risk(MODEL, Zero(), 0.0, 1)


def test_mc_risk_linear_smoother():
    S = smoother(MODEL.n)
    r = MODEL.theta - S @ MODEL.theta
    for a in (0.0, 0.7):
        target = r @ r + (1 + a) * MODEL.sigma2 * np.trace(S.T @ S)
        assert mc_risk(MODEL, LinearSmoother(S), a, 50_000, RngSeed(3)).within(target)


def test_oracle_standard_error_scaling():
    ratios = []
    for k in range(4):
        a = mc_risk(MODEL, SoftThreshold(t=1.0), 0.0, 20_000, RngSeed(4).child(k))
        b = mc_risk(MODEL, SoftThreshold(t=1.0), 0.0, 40_000, RngSeed(5).child(k))
        ratios.append(a.std_error / b.std_error)
        assert b.replications == 40_000
    assert all(1.30 <= r <= 1.55 for r in ratios)


def test_mc_df():
    S = smoother(MODEL.n, 1)
    assert mc_df(MODEL, LinearSmoother(S), 0.3, 50_000, RngSeed(6)).within(np.trace(S))
    assert mc_df(MODEL, Zero(), 0.3, 100, RngSeed(7)).value == 0.0
    t, sd = 1.0, MODEL.sigma
    expected = np.sum(stats.norm.cdf((-t - MODEL.theta) / sd) + stats.norm.sf((t - MODEL.theta) / sd))
    assert mc_df(MODEL, SoftThreshold(t=t), 0.0, 100_000, RngSeed(8)).within(expected)


# --- optimism decomposition ----------------------------------------------------------

def test_optimism_linear_smoother():
    S = smoother(MODEL.n, 2)
    alpha = 0.3
    od = mc_optimism_decomposition(MODEL, LinearSmoother(S), alpha, 4000, 10, RngSeed(9), R_direct=50_000)
    tr = np.trace(S)
    assert abs(od.a_alpha / (alpha * MODEL.sigma2) - tr) <= 4 * od.a_se / (alpha * MODEL.sigma2)
    assert abs(od.b_alpha / MODEL.sigma2 - tr) <= 4 * od.b_se / MODEL.sigma2
    assert abs(od.closure_gap) <= 4 * od.closure_se


def test_optimism_zero_rule():
    od = mc_optimism_decomposition(MODEL, Zero(), 0.5, 100, 5, RngSeed(10))
    assert od.a_alpha == 0 and od.b_alpha == 0 and od.total == 0


def test_optimism_soft_threshold_small_alpha_dominance():
    od = mc_optimism_decomposition(MODEL, SoftThreshold(t=1.0), 0.05, 3000, 10, RngSeed(11), R_direct=50_000)
    assert abs(od.closure_gap) <= 4 * od.closure_se
    assert od.b_alpha / od.a_alpha > 10  # order 1/alpha = 20


# --- infinite bootstrap ---------------------------------------------------------------

def test_cb_inf_and_by_inf_simple_rules():
    y = np.random.default_rng(12).standard_normal(8) * 2
    s2, a = 1.5, 0.3
    e = cb_inf(y, Identity(), s2, a, 200_000, RngSeed(13))
    assert e.within(8 * (1 + a) * s2)
    e = by_inf(y, Identity(), s2, a, 200_000, RngSeed(13))
    assert e.within(8 * s2)
    for f in (cb_inf, by_inf):
        z = f(y, Zero(), s2, a, 1000, RngSeed(14))
        assert z.value == pytest.approx(y @ y - 8 * s2) and z.std_error == pytest.approx(0, abs=1e-9)


def test_cb_inf_close_to_by_inf_at_small_alpha():
    y = np.random.default_rng(15).standard_normal(10) * 2
    g = SoftThreshold(t=1.0)
    a = 1e-3
    c = cb_inf(y, g, 1.0, a, 100_000, RngSeed(16))
    b = by_inf(y, g, 1.0, a, 100_000, RngSeed(16))
    # the two share draws; their gap is the training-error difference, of order alpha n sigma2
    assert abs(c.value - b.value) <= 5 * (np.hypot(c.std_error, b.std_error) + 0.05 * 10 * a)


def test_control_variate_keeps_the_mean():
    y = np.array([2.0, -0.3, 1.4, -2.2])
    g = SoftThreshold(t=1.0)
    plain = cb_inf(y, g, 1.0, 0.5, 200_000, RngSeed(17))
    cv = cb_inf(y, g, 1.0, 0.5, 200_000, RngSeed(18), control_variate=True)
    assert abs(plain.value - cv.value) <= 4 * np.hypot(plain.std_error, cv.std_error)
    assert cv.std_error < plain.std_error


# --- hard thresholding closed form ---------------------------------------------------

def test_ht_closed_form_special_cases():
    y = np.array([0.4, -1.7, 2.5])
    for a in (0.01, 0.5, 2.0):
        assert ht_inner_product_exact(y, 0.0, 1.3, a) == pytest.approx(2 * 3 * 1.3**2, rel=1e-12)
    assert ht_inner_product_exact(np.zeros(4), 1.0, 1.0, 1e-8) == pytest.approx(0.0, abs=1e-12)


def test_ht_closed_form_against_brute_force():
    y = np.array([2.0, -0.5])
    exact = ht_inner_product_exact(y, 1.0, 1.0, 0.1)
    mc = ht_inner_product_mc(y, 1.0, 1.0, 0.1, 10_000_000, RngSeed(19))
    assert mc.within(exact)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-4, 4), min_size=1, max_size=6), st.floats(0.2, 3), st.floats(0.3, 3))
def test_ht_limit_chain(y, t, sigma):
    y = np.array(y)
    if np.min(np.abs(np.abs(y) - t)) < 0.1:
        return
    assert abs(ht_inner_product_exact(y, t, sigma, 1e-8) - ht_divergence_limit(y, t, sigma)) <= 1e-6


def test_ht_divergence_limit():
    assert ht_divergence_limit(np.array([2.0, -0.5, -3.0]), 1.0, 1.0) == 4.0
    assert ht_divergence_limit(np.array([2.0, -0.5, -3.0]), 1e6, 1.0) == 0.0
    with pytest.raises(ValueError):
        ht_divergence_limit(np.array([1.0, 0.0]), 1.0, 1.0)


# --- bias, variance --------------------------------------------------------------------

def test_bias_bounds_identity_and_zero():
    n, s2 = MODEL.n, MODEL.sigma2
    for a in (0.1, 1.0):
        bb = bias_bounds(MODEL, Identity(), a, 50_000, RngSeed(20))
        assert abs(bb.true_bias - n * s2 * a) <= 4 * bb.bias_se
        # sd(||Y_a - theta||^2) = sqrt(2n)(1+a) sigma2, so bd1 = n a (1+a) sigma2
        assert bb.bound_bd1 == pytest.approx(n * a * (1 + a) * s2, rel=0.03)
        assert bb.bound_bd1 >= bb.true_bias
        assert bb.relative_bound == pytest.approx(np.sqrt(n) * a / np.sqrt(2))
        zb = bias_bounds(MODEL, Zero(), a, 100, RngSeed(21))
        assert zb.true_bias == 0 and zb.bound_bd1 >= 0


def test_bias_bounds_grid_reports_premise():
    rows = bias_bounds_grid(MODEL, SoftThreshold(t=1.0), [0.05, 0.2, 1.0], 20_000, RngSeed(22))
    assert [r["alpha"] for r in rows] == [0.05, 0.2, 1.0]
    assert all(r["premise_ok"] and r["dominated"] for r in rows)
    with pytest.raises(ValueError):
        bias_bounds_grid(MODEL, Zero(), [0.5, 0.1], 10, RngSeed(0))


def test_bias_variance_zero_rule():
    n, s2 = MODEL.n, MODEL.sigma2
    th2 = MODEL.theta @ MODEL.theta
    reps = bias_variance_reports(MODEL, Zero(), 0.5, 5, 4000, 10, ("CB", "BY"), RngSeed(23), R_oracle=100)
    for rep in reps.values():
        assert rep.ivar2 == 0 and rep.cov12 == 0
        # Var ||Y||^2 = 2 n sigma^4 + 4 sigma2 ||theta||^2
        assert abs(rep.ivar1 - (2 * n * s2**2 + 4 * s2 * th2)) <= 4 * rep.ivar1_se
    assert reps["BY"].rvar == 0.0
    assert reps["CB"].bias == 0.0


def test_bias_variance_linear_smoother_bias_and_closure():
    S = smoother(MODEL.n, 3)
    alpha = 0.5
    rep = bias_variance_report(MODEL, LinearSmoother(S), alpha, 10, 3000, 20, "CB", RngSeed(24), R_oracle=200_000)
    assert abs(rep.bias - alpha * MODEL.sigma2 * np.trace(S.T @ S)) <= 4 * rep.bias_se
    assert rep.ivar == pytest.approx(rep.ivar1 + rep.ivar2 + rep.cov12)
    parts = rep.bias_sq + rep.rvar + rep.ivar
    se = np.sqrt(rep.total_error_se**2 + rep.ivar_se**2 + rep.rvar_se**2 + (2 * abs(rep.bias) * rep.bias_se) ** 2)
    assert abs(parts - rep.total_error) <= 4 * se


def test_bias_variance_input_checks():
    with pytest.raises(ValueError):
        bias_variance_reports(MODEL, Zero(), 0.5, 10, 10, 15, ("BY",), RngSeed(0))
    with pytest.raises(ValueError):
        bias_variance_reports(MODEL, Zero(), 0.5, 2, 10, 5, ("XX",), RngSeed(0))


def test_rvar_leading_terms():
    B, a = 20, 0.5
    lt = rvar_leading_terms(MODEL, Identity(), a, B, 1000, RngSeed(25))
    assert lt.cb_term == 0.0
    lt = rvar_leading_terms(MODEL, Zero(), a, B, 1000, RngSeed(26), g_tilde=Identity())
    assert lt.cb_term * B * a / (4 * MODEL.sigma2) == pytest.approx(
        MODEL.theta @ MODEL.theta + MODEL.n * MODEL.sigma2, abs=4 * lt.cb_se * B * a / (4 * MODEL.sigma2))
    assert lt.by_term == 0.0 and lt.diff_term == pytest.approx(lt.cb_term)


def test_measured_rvar_decreases_in_B_and_alpha():
    out = measured_cb_rvar(MODEL, SoftThreshold(t=1.0), [0.05, 1.0], [5, 20, 80], 100, RngSeed(27))
    assert np.all(np.diff(out, axis=0) < 0) and np.all(np.diff(out, axis=1) < 0)
    # RVar scales like 1/B at fixed alpha
    assert np.allclose(out[:, 0] / out[:, 2], 16, rtol=0.5)


# --- Stein, risk curve -------------------------------------------------------------------

def test_stein_check():
    S = smoother(MODEL.n, 4)
    for g in (LinearSmoother(S), SoftThreshold(t=1.0)):
        sc = stein_formula_check(MODEL, g, 100_000, RngSeed(28))
        assert abs(sc.residual) <= 4 * sc.std_error
    # hard thresholding with theta at the threshold: the jumps carry extra covariance
    model = NormalModel(np.full(6, 1.0), 1.0)
    sc = stein_formula_check(model, HardThreshold(t=1.0), 200_000, RngSeed(29))
    assert sc.residual > 10 * sc.std_error
    with pytest.raises(UnsupportedDivergenceError):
        stein_formula_check(MODEL, ForwardStepwise(k=1, design=DesignContext(np.eye(10))), 10)


def test_risk_alpha_curve():
    grid = [0.0, 0.25, 0.5, 1.0]
    curve = risk_alpha_curve(MODEL, Identity(), grid, 20_000, RngSeed(30))
    for a, e in zip(grid, curve):
        assert e.within(MODEL.n * (1 + a) * MODEL.sigma2)
    vals = [e.value for e in risk_alpha_curve(MODEL, Zero(), grid, 100, RngSeed(31))]
    assert np.ptp(vals) == 0.0
    with pytest.raises(ValueError):
        risk_alpha_curve(MODEL, Zero(), [0.5, 0.2], 10)


def test_risk_alpha_curve_stepwise_smooth():
    gen = np.random.default_rng(32)
    X = gen.standard_normal((20, 10))
    model = NormalModel(X[:, :3] @ [1.0, -0.5, 0.8], 1.0)
    grid = np.round(np.arange(0.0, 0.101, 0.01), 2)
    curve = risk_alpha_curve(model, ForwardStepwise(k=2, design=DesignContext(X)), grid, 20_000, RngSeed(33))
    v = np.array([e.value for e in curve])
    se = max(e.std_error for e in curve)
    assert np.all(np.abs(np.diff(v, 2)) <= 6 * se)
