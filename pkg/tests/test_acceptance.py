"""Acceptance criteria, one test per criterion.

Each test carries a ``criterion`` marker; ``conftest.py`` prints one
PASS/FAIL line per criterion in the terminal summary.  Monte Carlo checks use
4 combined standard errors unless the criterion states otherwise.
"""

import itertools

import numpy as np
import pytest
from scipy import stats

from riskest import analysis, harness, solvers
from riskest.analysis import OracleEstimate
from riskest.gaussian_model import CoupledDrawSet, NormalModel, make_coupled_draws, sample_elevated
from riskest.harness import ExperimentConfig, build_scenario
from riskest.predictors import (DesignContext, ForwardStepwise, HardThreshold, Identity, Lasso, LinearSmoother,
                                Ridge, SoftThreshold, Zero)
from riskest.risk_estimators import (bregman_three_point_check, cb_per_draw, structured_cb_risk, sure)
from riskest.rng import BOOT, DATA, ORACLE, RngSeed

K = 4.0


def note(record_property, **kw):
    for k, v in kw.items():
        record_property(k, f"{v:.4g}" if isinstance(v, float) else v)


# ---------------------------------------------------------------------------
# 1. exact identities
# ---------------------------------------------------------------------------


def _fused_brute_force(y, lam):
    """Minimize the fused lasso objective over every block partition and jump-sign pattern.

    For fixed blocks and jump signs the stationarity conditions give each
    block value in closed form; the optimum is one of these candidates.
    """
    n = y.size
    best, best_theta = np.inf, None
    for cuts in itertools.product((0, 1), repeat=n - 1):
        edges = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        blocks = [(edges[b], edges[b + 1]) for b in range(len(edges) - 1)]
        m = len(blocks)
        for signs in itertools.product((-1.0, 1.0), repeat=m - 1):
            s = (0.0,) + signs + (0.0,)
            theta = np.empty(n)
            for b, (lo, hi) in enumerate(blocks):
                theta[lo:hi] = (y[lo:hi].sum() - lam * (s[b] - s[b + 1])) / (hi - lo)
            obj = solvers.fused_lasso_objective(y, theta, lam)
            if obj < best:
                best, best_theta = obj, theta
    return best, best_theta


@pytest.mark.criterion(1, "exact identities")
def test_c1_exact_identities(record_property):
    gen = np.random.default_rng(101)
    # coupled-draw reconstruction
    worst = 0.0
    for a in (1e-3, 0.05, 0.5, 1.0, 4.0):
        y = gen.standard_normal(30) * 3
        d = make_coupled_draws(y, 2.0, a, 50, RngSeed(7))
        rec = (d.ystar + a * d.ydagger) / (1 + a)
        worst = max(worst, np.max(np.abs(rec - y)))
    assert worst <= 1e-12 * 10
    # SURE of the identity
    for n, s2 in ((1, 0.3), (30, 2.0)):
        assert sure(gen.standard_normal(n), Identity(), s2).value == pytest.approx(n * s2, rel=1e-14)
    # fused lasso DP against exhaustive search on every grid point with n <= 5
    n_checked, gap = 0, 0.0
    for n in range(1, 6):
        for y in itertools.product((-1.0, 0.0, 1.0), repeat=n):
            y = np.array(y)
            for lam in (0.0, 0.3, 0.5, 1.0, 2.0):
                obj, theta = _fused_brute_force(y, lam)
                fit = solvers.solve_fused_lasso_1d(y, lam)
                assert solvers.fused_lasso_objective(y, fit, lam) <= obj + 1e-12
                gap = max(gap, np.max(np.abs(fit - theta)))
                n_checked += 1
    assert gap <= 1e-9
    # lasso KKT
    kkt = 0.0
    for (n, p), frac in itertools.product(((20, 10), (50, 100), (100, 200)), (0.5, 0.1, 0.02)):
        X = gen.standard_normal((n, p))
        y = X[:, :3] @ [1.0, -2.0, 0.5] + gen.standard_normal(n)
        lam = frac * solvers.lasso_lambda_max(X, y)
        kkt = max(kkt, solvers.lasso_kkt_residual(X, y, solvers.solve_lasso(X, y, lam), lam))
        lams = solvers.log_lambda_grid(solvers.lasso_lambda_max(X, y), 20, 0.01)
        for lam_k, b in zip(lams, solvers.lasso_path(X, y, lams)):
            kkt = max(kkt, solvers.lasso_kkt_residual(X, y, b, lam_k))
    assert kkt <= 1e-8
    note(record_property, reconstruction=worst, fused_cases=n_checked, fused_gap=gap, kkt=kkt)


# ---------------------------------------------------------------------------
# 2. CB unbiasedness for Risk_alpha
# ---------------------------------------------------------------------------

C2_DATASETS = 20_000


@pytest.fixture(scope="module")
def c2_truth():
    cfg = ExperimentConfig(n=50, p=100, s=5, snr=0.4, seed=21, cv_folds=5, cv_n_lambda=20)
    return cfg, build_scenario(cfg)


def _c2_predictors(cfg, truth):
    ctx = truth.design
    t = float(np.sqrt(truth.sigma2))
    return {
        "identity": Identity(), "zero": Zero(), "ridge": Ridge(lam=5.0, design=ctx),
        "lasso": Lasso(lam=0.31, design=ctx), "stepwise": ForwardStepwise(k=2, design=ctx),
        "soft": SoftThreshold(t=t), "hard": HardThreshold(t=t),
        "lasso_cv": harness.make_predictors(cfg, truth, ["lasso_cv"])[0],
    }


@pytest.mark.criterion(2, "CB unbiased for Risk_alpha")
@pytest.mark.parametrize("name", ["identity", "zero", "ridge", "lasso", "stepwise", "soft", "hard", "lasso_cv"])
def test_c2_cb_unbiased(c2_truth, name, record_property):
    cfg, truth = c2_truth
    g = _c2_predictors(cfg, truth)[name]
    model = truth.model
    B = 1 if name == "lasso_cv" else 4
    seed = RngSeed(22).child(list(_c2_predictors(cfg, truth)).index(name))
    worst = 0.0
    for i, a in enumerate((0.05, 0.5, 1.0)):
        Y = sample_elevated(model, 0.0, seed.generator(DATA, i), size=C2_DATASETS)
        om = model.sigma * seed.generator(BOOT, i).standard_normal((C2_DATASETS, B, model.n))
        G = g.predict_many((Y[:, None, :] + np.sqrt(a) * om).reshape(-1, model.n)).reshape(om.shape)
        # per-draw CB terms, written out directly from the coupled pair
        test = np.sum((Y[:, None, :] - om / np.sqrt(a) - G) ** 2, axis=2)
        cb = (test - np.sum(om**2, axis=2) / a - model.n * model.sigma2).mean(axis=1)
        # the library per-draw terms must agree on a few datasets
        for r in range(3):
            d = CoupledDrawSet.from_omega(Y[r], a, om[r])
            np.testing.assert_allclose(cb_per_draw(d, g, model.sigma2, fitted=G[r]).mean(), cb[r], rtol=1e-10)
        est = OracleEstimate.from_samples(cb)
        oracle = analysis.mc_risk(model, g, a, 20_000, seed.child(ORACLE, i))
        z = (est.value - oracle.value) / np.hypot(est.std_error, oracle.std_error)
        worst = max(worst, abs(z))
        record_property(f"z_alpha{a:g}", f"{z:.2f}")
        assert abs(z) <= K, f"{name} alpha={a}: CB {est.value:.3f} +- {est.std_error:.3f} vs {oracle.value:.3f}"


# ---------------------------------------------------------------------------
# 3. noiseless limit
# ---------------------------------------------------------------------------


@pytest.mark.criterion(3, "cb_inf -> SURE as alpha -> 0")
@pytest.mark.parametrize("name", ["soft", "lasso"])
def test_c3_noiseless_limit(name, record_property):
    n, s2, a = 20, 1.0, 1e-3
    gen = np.random.default_rng(303)
    if name == "soft":
        model = NormalModel(np.linspace(-2, 2, n), s2)
        g = SoftThreshold(t=1.0)
    else:
        X = gen.standard_normal((n, 10))
        model = NormalModel(X[:, :3] @ [1.5, -1.0, 0.7], s2)
        g = Lasso(lam=0.3, design=DesignContext(X))
    seed = RngSeed(31)
    hits = 0
    for r in range(100):
        y = sample_elevated(model, 0.0, seed.generator(DATA, r))
        est = analysis.cb_inf(y, g, s2, a, 100_000, seed.child(BOOT, r))
        tol = 5 * (est.std_error + 0.05 * n * s2 * a)
        hits += abs(est.value - sure(y, g, s2).value) < tol
    note(record_property, within=hits)
    assert hits >= 95


# ---------------------------------------------------------------------------
# 4. hard-threshold closed form
# ---------------------------------------------------------------------------


@pytest.mark.criterion(4, "hard-threshold closed form")
def test_c4_hard_threshold_closed_form(record_property):
    gen = RngSeed(41).generator(ORACLE)
    zs = []
    for c in range(50):
        m = int(gen.integers(1, 6))
        y = gen.uniform(-3, 3, m)
        t, sig, a = gen.uniform(0.2, 2.0), gen.uniform(0.5, 2.0), gen.uniform(0.02, 1.0)
        exact = analysis.ht_inner_product_exact(y, t, sig, a)
        mc = analysis.ht_inner_product_mc(y, t, sig, a, 10_000_000, RngSeed(42).child(c))
        zs.append((exact - mc.value) / mc.std_error)
    zs = np.array(zs)
    worst_limit = 0.0
    for c in range(50):
        t, sig = gen.uniform(0.2, 2.0), gen.uniform(0.5, 2.0)
        y = gen.uniform(-3, 3, int(gen.integers(1, 6)))
        y = y[np.abs(np.abs(y) - t) >= 0.1]
        if y.size == 0:
            continue
        lim = 2 * sig**2 * np.count_nonzero(np.abs(y) > t)
        worst_limit = max(worst_limit, abs(analysis.ht_inner_product_exact(y, t, sig, 1e-8) - lim))
    note(record_property, max_abs_z=float(np.abs(zs).max()), limit_gap=worst_limit)
    assert np.all(np.abs(zs) <= K)
    assert worst_limit <= 1e-6


# ---------------------------------------------------------------------------
# 5. optimism decomposition
# ---------------------------------------------------------------------------


@pytest.mark.criterion(5, "optimism decomposition")
def test_c5_optimism_decomposition(record_property):
    n = 20
    model = NormalModel(np.linspace(-2, 2, n), 1.0)
    A = np.random.default_rng(51).standard_normal((n, n))
    S = 0.1 * (A + A.T) / np.sqrt(n) + 0.5 * np.eye(n)
    X = np.random.default_rng(52).standard_normal((n, 10))
    preds = {"soft": SoftThreshold(t=1.0), "hard": HardThreshold(t=1.0), "smoother": LinearSmoother(S),
             "lasso": Lasso(lam=0.3, design=DesignContext(X))}
    worst = 0.0
    for j, (name, g) in enumerate(preds.items()):
        for i, a in enumerate((0.1, 0.5)):
            od = analysis.mc_optimism_decomposition(model, g, a, 4000, 10, RngSeed(53).child(j, i), R_direct=100_000)
            z = od.closure_gap / od.closure_se
            worst = max(worst, abs(z))
            assert abs(z) <= K, f"{name} alpha={a}: closure z={z:.2f}"
            if name == "smoother":
                tr = np.trace(S)
                assert abs(od.a_alpha - a * tr) <= K * od.a_se
                assert abs(od.b_alpha - tr) <= K * od.b_se
    note(record_property, max_closure_z=worst)


# ---------------------------------------------------------------------------
# 6. bias bound
# ---------------------------------------------------------------------------


@pytest.mark.criterion(6, "bias bound BD1 dominates")
def test_c6_bias_bound(record_property):
    cfg = harness.load_config(harness.bundled_config("appendixF"))
    rows = harness.appendix_bias_table(cfg, build_scenario(cfg))
    assert sorted({r["k"] for r in rows}) == [3, 10, 90]
    assert {r["alpha"] for r in rows} == set(harness.PAPER_ALPHAS)
    ratio = max(abs(r["true_bias"]) / r["bound_bd1"] for r in rows)
    note(record_property, max_bias_over_bound=ratio)
    for r in rows:
        assert abs(r["true_bias"]) <= r["bound_bd1"], r


# ---------------------------------------------------------------------------
# 7. reducible variance scaling
# ---------------------------------------------------------------------------


@pytest.mark.criterion(7, "RVar scales like 1/(B alpha)")
def test_c7_rvar_scaling(record_property):
    cfg = harness.load_config(harness.bundled_config("appendixF"))
    assert len(cfg.rvar_Bs) == 5 and len(cfg.alphas) == 6
    truth = build_scenario(cfg)
    g = Lasso(lam=0.31, design=truth.design)
    meas = analysis.measured_cb_rvar(truth.model, g, cfg.alphas, cfg.rvar_Bs, cfg.rvar_R, RngSeed(71))
    x = np.log(1.0 / np.outer(cfg.alphas, cfg.rvar_Bs)).ravel()
    slope = stats.linregress(x, np.log(meas).ravel()).slope
    note(record_property, slope=float(slope))
    assert abs(slope - 1.0) <= 0.15


# ---------------------------------------------------------------------------
# 8. irreducible variance components
# ---------------------------------------------------------------------------


@pytest.mark.criterion(8, "IVar components of CB and BY")
def test_c8_ivar_components(record_property):
    cfg = ExperimentConfig(n=50, p=100, s=100, snr=2.0, seed=81, cv_folds=5, cv_n_lambda=20)
    truth = build_scenario(cfg)
    g = harness.make_predictors(cfg, truth, ["lasso_cv"])[0]
    # as alpha -> 0 CB's conditional training term tends to BY's, so the factor
    # of two is checked on the upper half of the alpha grid
    for i, a in enumerate((0.5, 1.0)):
        reps = analysis.bias_variance_reports(truth.model, g, a, 20, 300, 40, ("CB", "BY"), RngSeed(82).child(i),
                                              R_oracle=2000)
        cb, by = reps["CB"], reps["BY"]
        # the inner-product term is shared, so both reports carry the same IVar2
        z2 = (cb.ivar2 - by.ivar2) / np.hypot(cb.ivar2_se, by.ivar2_se)
        ratio = by.ivar1 / cb.ivar1
        note(record_property, **{f"ivar2_z_{a:g}": float(z2), f"ivar1_ratio_{a:g}": float(ratio)})
        assert abs(z2) <= K
        assert ratio >= 2.0


# ---------------------------------------------------------------------------
# 9. BY bias pattern on the Figure-1 scenario
# ---------------------------------------------------------------------------


def _fig1(predictors, alphas, reps, oracle_R, **kw):
    cfg = ExperimentConfig(n=100, p=200, s=5, snr=0.4, B=100, reps=reps, alphas=alphas, seed=1,
                           predictors=predictors, oracle_R=oracle_R, cv_folds=5, cv_n_lambda=20, **kw)
    return {(r["predictor"].split("(")[0], r["estimator"], r["alpha"]): r
            for r in harness.run_figure1(cfg).tables["summary"]}


@pytest.mark.criterion(9, "BY bias sign pattern")
def test_c9_by_bias_pattern(record_property):
    ridge = _fig1(("ridge:lam=5",), harness.PAPER_ALPHAS, 200, 20_000)
    z_ridge = [ridge["ridge", "BY", a]["z_vs_risk"] for a in harness.PAPER_ALPHAS]
    rest = _fig1(("lasso:lam=0.31", "forward_stepwise:k=2"), (1.0,), 200, 20_000)
    cv = _fig1(("lasso_cv",), (1.0,), 60, 5_000)
    z_lasso = rest["lasso", "BY", 1.0]["z_vs_risk_alpha"]
    z_step = rest["forward_stepwise", "BY", 1.0]["z_vs_risk_alpha"]
    z_cv = cv["lasso_cv", "BY", 1.0]["z_vs_risk_alpha"]
    note(record_property, ridge_max_abs_z=float(np.max(np.abs(z_ridge))), lasso_z=z_lasso,
         stepwise_z=z_step, lasso_cv_z=z_cv)
    assert np.all(np.abs(z_ridge) <= K)
    assert z_lasso > K
    assert z_step < -K
    assert z_cv < -K


# ---------------------------------------------------------------------------
# 10. structured CB
# ---------------------------------------------------------------------------


@pytest.mark.criterion(10, "structured CB")
def test_c10_structured_cb(record_property):
    n, a, m = 5, 0.5, 20_000
    i = np.arange(n)
    Sigma = 0.6 ** np.abs(i[:, None] - i[None, :]) * np.outer(1 + 0.2 * i, 1 + 0.2 * i)
    theta = np.array([2.0, -1.0, 0.5, 0.0, 1.5])
    L = np.linalg.cholesky(Sigma)
    gen = RngSeed(101).generator(DATA)
    Y = theta + gen.standard_normal((m, n)) @ L.T
    worst = 0.0
    for j, (gname, g) in enumerate((("identity", Identity()), ("soft", SoftThreshold(t=1.0)))):
        for k, (aname, A) in enumerate((("I", np.eye(n)), ("Sigma", Sigma))):
            est = OracleEstimate.from_samples(np.array([
                structured_cb_risk(Y[r], Sigma, A, a, 2, g, RngSeed(102).child(j, k, r)).value for r in range(m)]))
            # oracle: E ||theta - g(Y_alpha)||_A^2 with Y_alpha ~ N(theta, (1 + alpha) Sigma)
            Ya = theta + np.sqrt(1 + a) * RngSeed(103).generator(ORACLE, j, k).standard_normal((400_000, n)) @ L.T
            E = theta - g.predict_many(Ya)
            loss = np.einsum("ij,ij->i", E, np.linalg.solve(A, E.T).T)
            oracle = OracleEstimate.from_samples(loss)
            z = (est.value - oracle.value) / np.hypot(est.std_error, oracle.std_error)
            worst = max(worst, abs(z))
            assert abs(z) <= K, f"{gname}, A={aname}: z={z:.2f}"
    note(record_property, max_abs_z=worst)


# ---------------------------------------------------------------------------
# 11. Bregman three-point identity
# ---------------------------------------------------------------------------


@pytest.mark.criterion(11, "Bregman three-point identity")
def test_c11_bregman(record_property):
    def sq(x):
        return np.sum(x**2, axis=1)

    def negent(x):
        return np.sum(x * np.log(x), axis=1)

    def normal_sampler(gen, m):
        return (1 + gen.standard_normal((m, 3)), 1 + gen.standard_normal((m, 3)),
                1 + 0.5 * gen.standard_normal((m, 3)))

    def lognormal_sampler(gen, m):
        # U, V ~ LN(0, 0.3^2); W ~ LN(0.04, 0.1^2) has the same mean exp(0.045)
        return (np.exp(0.3 * gen.standard_normal((m, 2))), np.exp(0.3 * gen.standard_normal((m, 2))),
                np.exp(0.04 + 0.1 * gen.standard_normal((m, 2))))

    checks = [
        bregman_three_point_check(sq, lambda x: 2 * x, normal_sampler, SoftThreshold(t=0.5), 100_000, RngSeed(111)),
        bregman_three_point_check(negent, lambda x: np.log(x) + 1, lognormal_sampler, np.sqrt, 100_000, RngSeed(112)),
    ]
    zs = [c.residual / c.std_error for c in checks] + [c.general_residual / c.general_std_error for c in checks]
    note(record_property, max_abs_z=float(np.max(np.abs(zs))))
    assert np.all(np.abs(zs) <= K)


# ---------------------------------------------------------------------------
# 12. denoising selection
# ---------------------------------------------------------------------------


@pytest.mark.criterion(12, "CB-selected lambda close to SURE-selected")
def test_c12_denoise_selection(record_property):
    cfg = harness.load_config(harness.bundled_config("denoise"))
    res = harness.run_denoise(cfg)
    ratios = {r["estimator"]: r["ratio_to_sure"] for r in res.tables["summary"] if r["estimator"] != "SURE"}
    assert set(ratios) == {f"CB_{a:g}" for a in (0.05, 0.1, 0.2, 0.5)}
    note(record_property, **{k: float(v) for k, v in ratios.items()})
    assert all(abs(v - 1) <= 0.10 for v in ratios.values())
