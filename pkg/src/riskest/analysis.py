"""Monte Carlo oracles and closed-form probes.

Oracles draw from the ORACLE stream of the supplied seed.  Functions that
compare several noise levels reuse the same standard normals at each level
(common random numbers), so differences across alpha are estimated with
much smaller error than the levels themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .gaussian_model import CoupledDrawSet, NormalModel, sample_elevated
from .predictors import Predictor, UnsupportedDivergenceError
from .risk_estimators import by_risk, cb_per_draw
from .rng import BOOT, DATA, INNER, ORACLE, as_generator

CHUNK = 4096


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    std_error: float
    replications: int

    @classmethod
    def from_samples(cls, x) -> "OracleEstimate":
        x = np.asarray(x, dtype=float)
        return cls(float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size)), int(x.size))

    def within(self, target: float, k: float = 4.0, extra_se: float = 0.0) -> bool:
        return abs(self.value - target) <= k * np.hypot(self.std_error, extra_se)


def _chunks(R, size=CHUNK):
    for start in range(0, R, size):
        yield min(size, R - start)


def _losses(model: NormalModel, g: Predictor, alpha: float, R: int, gen) -> tuple[np.ndarray, np.ndarray]:
    """Losses ||theta - g(Y_alpha)||^2 and the draws' squared noise norms."""
    loss = np.empty(R)
    noise = np.empty(R)
    i = 0
    for m in _chunks(R):
        Y = sample_elevated(model, alpha, gen, size=m)
        loss[i:i + m] = np.sum((model.theta - g.predict_many(Y)) ** 2, axis=1)
        noise[i:i + m] = np.sum((Y - model.theta) ** 2, axis=1)
        i += m
    return loss, noise


def mc_risk(model: NormalModel, g: Predictor, alpha: float = 0.0, R: int = 100_000, rng=None) -> OracleEstimate:
    """Monte Carlo Risk_alpha(g) = E||theta - g(Y_alpha)||^2 (alpha = 0 gives the risk)."""
    if R < 2:
        raise ValueError("need R >= 2")
    loss, _ = _losses(model, g, alpha, int(R), as_generator(rng, ORACLE))
    return OracleEstimate.from_samples(loss)


def mc_df(model: NormalModel, g: Predictor, alpha: float = 0.0, R: int = 100_000, rng=None) -> OracleEstimate:
    """Monte Carlo df_alpha(g) = sum_i Cov(Y_alpha,i, g_i(Y_alpha)) / ((1 + alpha) sigma2).

    The noise is centered at the known theta, the fitted values at their
    sample mean, which makes the 1/(R-1) normalization exact.
    """
    R = int(R)
    if R < 2:
        raise ValueError("need R >= 2")
    gen = as_generator(rng, ORACLE)
    E = np.empty((R, model.n))
    G = np.empty((R, model.n))
    i = 0
    for m in _chunks(R):
        Y = sample_elevated(model, alpha, gen, size=m)
        E[i:i + m] = Y - model.theta
        G[i:i + m] = g.predict_many(Y)
        i += m
    terms = np.einsum("ij,ij->i", E, G - G.mean(axis=0)) * (R / (R - 1))
    return OracleEstimate.from_samples(terms / ((1 + alpha) * model.sigma2))


@dataclass(frozen=True)
class OptimismDecomposition:
    """Elevated optimism sum_i Cov(Y*_i, g_i(Y*)) split as a_alpha + b_alpha.

    a_alpha is the mean within-dataset bootstrap covariance and b_alpha the
    covariance between Y and the bootstrap-averaged fit.  ``total`` is a
    direct estimate from independent Y_alpha draws.  (Multiply by 2 for the
    optimism of the training error.)
    """

    a_alpha: float
    b_alpha: float
    total: float
    a_se: float
    b_se: float
    sum_se: float
    total_se: float
    alpha: float

    @property
    def closure_gap(self) -> float:
        return self.a_alpha + self.b_alpha - self.total

    @property
    def closure_se(self) -> float:
        return float(np.hypot(self.sum_se, self.total_se))


def mc_optimism_decomposition(model: NormalModel, g: Predictor, alpha: float, R_outer: int,
                              B_inner: int, rng=None, R_direct: int | None = None) -> OptimismDecomposition:
    if R_outer < 2 or B_inner < 2:
        raise ValueError("need R_outer >= 2 and B_inner >= 2")
    R, Bi = int(R_outer), int(B_inner)
    gdata = as_generator(rng, DATA)
    gboot = as_generator(rng, BOOT)
    Y = sample_elevated(model, 0.0, gdata, size=R)
    a = np.empty(R)
    M = np.empty((R, model.n))
    ra = np.sqrt(alpha)
    for r in range(R):
        ys = Y[r] + ra * model.sigma * gboot.standard_normal((Bi, model.n))
        G = g.predict_many(ys)
        a[r] = np.sum((ys - ys.mean(axis=0)) * G) / (Bi - 1)
        M[r] = G.mean(axis=0)
    b = np.einsum("ij,ij->i", Y - model.theta, M - M.mean(axis=0)) * (R / (R - 1))
    direct = mc_df(model, g, alpha, R if R_direct is None else R_direct, as_generator(rng, ORACLE))
    s2a = (1 + alpha) * model.sigma2
    se = lambda x: float(x.std(ddof=1) / np.sqrt(x.size))
    return OptimismDecomposition(
        a_alpha=float(a.mean()), b_alpha=float(b.mean()), total=direct.value * s2a,
        a_se=se(a), b_se=se(b), sum_se=se(a + b), total_se=direct.std_error * s2a, alpha=float(alpha),
    )


# ---------------------------------------------------------------------------
# Infinite-bootstrap versions
# ---------------------------------------------------------------------------


def _inf_terms(y, g, sigma2, alpha, B_big, rng, control_variate):
    y = np.asarray(y, dtype=float)
    gen = as_generator(rng, INNER)
    ra = np.sqrt(alpha)
    gy = g.predict(y) if control_variate else None
    train = np.empty(B_big)
    inner = np.empty(B_big)
    i = 0
    for m in _chunks(B_big):
        om = np.sqrt(sigma2) * gen.standard_normal((m, y.size))
        G = g.predict_many(y + ra * om)
        train[i:i + m] = np.sum((y - G) ** 2, axis=1)
        if control_variate:
            G = G - gy  # <omega, g(y)> has conditional mean zero
        inner[i:i + m] = (2 / ra) * np.einsum("ij,ij->i", om, G)
        i += m
    return y, train, inner


def cb_inf(y, g: Predictor, sigma2: float, alpha: float, B_big: int = 100_000, rng=None,
           control_variate: bool = False) -> OracleEstimate:
    """Infinite-bootstrap CB: E[||Y-dagger - g(Y*)||^2 - ||omega||^2/alpha | y] - n sigma2.

    Evaluated through the equivalent form
    E||y - g(y + sqrt(alpha) omega)||^2 + (2/sqrt(alpha)) E<omega, g(y + sqrt(alpha) omega)> - n sigma2,
    which drops a mean-zero term.  ``control_variate`` additionally subtracts
    <omega, g(y)>, also mean zero, which helps greatly at small alpha.
    """
    y, train, inner = _inf_terms(y, g, sigma2, alpha, int(B_big), rng, control_variate)
    return OracleEstimate.from_samples(train + inner - y.size * sigma2)


def by_inf(y, g: Predictor, sigma2: float, alpha: float, B_big: int = 100_000, rng=None,
           control_variate: bool = False) -> OracleEstimate:
    """Infinite-bootstrap BY: ||y - g(y)||^2 + (2/sqrt(alpha)) E<omega, g(y + sqrt(alpha) omega)> - n sigma2."""
    y, _, inner = _inf_terms(y, g, sigma2, alpha, int(B_big), rng, control_variate)
    train = float(np.sum((y - g.predict(y)) ** 2))
    return OracleEstimate.from_samples(train + inner - y.size * sigma2)


# ---------------------------------------------------------------------------
# Hard thresholding in closed form
# ---------------------------------------------------------------------------


def _Phi(z):
    z = np.asarray(z, dtype=float)
    return np.where(z > 37, 1.0, np.where(z < -37, 0.0, ndtr(z)))


def _phi(z):
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) > 37, 0.0, np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi))


def ht_inner_product_exact(y, t: float, sigma: float, alpha: float) -> float:
    """(2/sqrt(alpha)) sum_i E[omega_i z_i 1{|z_i| > t}], z = y + sqrt(alpha) omega, omega ~ N(0, sigma^2 I).

    By Gaussian integration by parts each summand is
    sigma t / sqrt(alpha) [phi((t + y_i)/s) + phi((t - y_i)/s)] + sigma^2 [Phi((-y_i - t)/s) + Phi((y_i - t)/s)]
    with s = sqrt(alpha) sigma, and the total carries a factor 2.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not t >= 0:
        raise ValueError("t must be nonnegative")
    y = np.asarray(y, dtype=float)
    s = np.sqrt(alpha) * sigma
    dens = _phi((t + y) / s) + _phi((t - y) / s)
    tail = _Phi((-y - t) / s) + _Phi((y - t) / s)
    return float(2 * np.sum(sigma * t / np.sqrt(alpha) * dens + sigma**2 * tail))


def ht_inner_product_mc(y, t: float, sigma: float, alpha: float, M: int, rng=None) -> OracleEstimate:
    """Brute-force Monte Carlo of the quantity in :func:`ht_inner_product_exact`."""
    y = np.asarray(y, dtype=float)
    gen = as_generator(rng, ORACLE)
    ra = np.sqrt(alpha)
    # chunks of whole draws keep memory flat for M ~ 1e7
    vals = []
    for m in _chunks(int(M), 1 << 18):
        om = sigma * gen.standard_normal((m, y.size))
        z = y + ra * om
        vals.append((2 / ra) * np.sum(om * np.where(np.abs(z) > t, z, 0.0), axis=1))
    return OracleEstimate.from_samples(np.concatenate(vals))


def ht_divergence_limit(y, t: float, sigma: float) -> float:
    """Noiseless limit 2 sigma^2 #{|y_i| > t} of :func:`ht_inner_product_exact`."""
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) == t):
        raise ValueError("some |y_i| equals t; the limit is undefined there")
    return float(2 * sigma**2 * np.count_nonzero(np.abs(y) > t))


# ---------------------------------------------------------------------------
# Bias
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BiasBounds:
    alpha: float
    true_bias: float
    bias_se: float
    bound_bd1: float
    bound_bd2_leading: float
    relative_bound: float
    relative_bias: float
    loss_sd_alpha: float
    loss_sd_0: float
    var_se_alpha: float


def bias_bounds_from_losses(L0, La, n: int, alpha: float) -> BiasBounds:
    """Bias and bounds from paired loss samples at noise levels 0 and alpha."""
    L0, La = np.asarray(L0, float), np.asarray(La, float)
    R = L0.size
    d = La - L0
    c = np.sqrt(n) * alpha / np.sqrt(2)
    sd_a, sd_0 = La.std(ddof=1), L0.std(ddof=1)
    dev = (La - La.mean()) ** 2
    return BiasBounds(
        alpha=float(alpha), true_bias=float(d.mean()), bias_se=float(d.std(ddof=1) / np.sqrt(R)),
        bound_bd1=float(c * sd_a), bound_bd2_leading=float(c * sd_0), relative_bound=float(c),
        relative_bias=float(d.mean() / L0.mean()), loss_sd_alpha=float(sd_a), loss_sd_0=float(sd_0),
        var_se_alpha=float(dev.std(ddof=1) / np.sqrt(R)),
    )


def bias_bounds(model: NormalModel, g: Predictor, alpha: float, R: int, rng=None,
                _base=None) -> BiasBounds:
    """Measured bias Risk_alpha - Risk next to its variance-based upper bounds.

    bound_bd1 = sqrt(n) alpha / sqrt(2) * sd(||theta - g(Y_alpha)||^2); the
    leading-order bound uses the sd at alpha = 0.  Both noise levels share
    their underlying normals when ``rng`` is a seed (not a Generator).
    """
    if R < 2:
        raise ValueError("need R >= 2")
    L0 = _base if _base is not None else _losses(model, g, 0.0, int(R), as_generator(rng, ORACLE))[0]
    La = _losses(model, g, alpha, int(R), as_generator(rng, ORACLE))[0]
    return bias_bounds_from_losses(L0, La, model.n, alpha)


def premise_rows(bounds: list[BiasBounds], L0) -> list[dict]:
    """Attach the monotone-variance premise and the dominance verdict to each row.

    ``premise_ok`` turns False once the loss variance is seen to drop (by
    more than 3 standard errors) between consecutive grid points.
    """
    L0 = np.asarray(L0, float)
    prev_var = L0.var(ddof=1)
    prev_se = ((L0 - L0.mean()) ** 2).std(ddof=1) / np.sqrt(L0.size)
    ok = True
    rows = []
    for bb in bounds:
        var = bb.loss_sd_alpha**2
        if var < prev_var - 3 * np.hypot(bb.var_se_alpha, prev_se):
            ok = False
        prev_var, prev_se = var, bb.var_se_alpha
        row = dict(bb.__dict__)
        row["premise_ok"] = ok
        row["dominated"] = abs(bb.true_bias) <= bb.bound_bd1
        rows.append(row)
    return rows


def bias_bounds_grid(model: NormalModel, g: Predictor, alphas, R: int, rng=None) -> list[dict]:
    """:func:`bias_bounds` over a sorted grid, with the premise of the bound checked.

    Rows where the premise fails are reported, never dropped.
    """
    alphas = np.asarray(alphas, dtype=float)
    if np.any(np.diff(alphas) < 0) or np.any(alphas < 0):
        raise ValueError("alpha grid must be sorted and nonnegative")
    L0 = _losses(model, g, 0.0, int(R), as_generator(rng, ORACLE))[0]
    return premise_rows([bias_bounds(model, g, float(a), R, rng, _base=L0) for a in alphas], L0)


def risk_alpha_curve(model: NormalModel, g: Predictor, alpha_grid, R: int, rng=None) -> list[OracleEstimate]:
    """mc_risk along a sorted alpha grid with common random numbers."""
    grid = np.asarray(alpha_grid, dtype=float)
    if np.any(np.diff(grid) < 0) or np.any(grid < 0):
        raise ValueError("alpha grid must be sorted and nonnegative")
    return [mc_risk(model, g, float(a), R, rng) for a in grid]


# ---------------------------------------------------------------------------
# Stein's formula
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SteinCheck:
    covariance_df: float
    divergence_mean: float
    residual: float
    std_error: float
    R: int


def stein_formula_check(model: NormalModel, g: Predictor, R: int, rng=None) -> SteinCheck:
    """sum_i Cov(Y_i, g_i(Y)) / sigma2 against E[div g(Y)] on the same draws."""
    if not g.has_analytic_divergence:
        raise UnsupportedDivergenceError(f"{g.kind} has no analytic divergence")
    R = int(R)
    gen = as_generator(rng, ORACLE)
    E = np.empty((R, model.n))
    G = np.empty((R, model.n))
    div = np.empty(R)
    i = 0
    for m in _chunks(R):
        Y = sample_elevated(model, 0.0, gen, size=m)
        E[i:i + m] = Y - model.theta
        G[i:i + m] = g.predict_many(Y)
        div[i:i + m] = [g.divergence(y) for y in Y]
        i += m
    cov = np.einsum("ij,ij->i", E, G - G.mean(axis=0)) * (R / (R - 1)) / model.sigma2
    r = cov - div
    return SteinCheck(float(cov.mean()), float(div.mean()), float(r.mean()),
                      float(r.std(ddof=1) / np.sqrt(R)), R)


# ---------------------------------------------------------------------------
# Variance of CB and BY
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BiasVarianceReport:
    """Error decomposition of a bootstrap risk estimator with B draws.

    ``total_error`` is the measured mean squared error against Risk(g), to
    compare with bias_sq + rvar + ivar.  ``cov12`` is twice the covariance of
    the two conditional-mean terms, so ivar = ivar1 + ivar2 + cov12.
    """

    estimator: str
    alpha: float
    B: int
    bias: float
    bias_sq: float
    rvar: float
    ivar: float
    ivar1: float
    ivar2: float
    cov12: float
    total_error: float
    bias_se: float
    rvar_se: float
    ivar_se: float
    ivar1_se: float
    ivar2_se: float
    cov12_se: float
    total_error_se: float
    risk: float
    risk_alpha: float
    R_outer: int
    B_inner: int


def _var_se(x):
    d = (x - x.mean()) ** 2
    return float(d.std(ddof=1) / np.sqrt(x.size))


def _cov_se(x, y):
    d = (x - x.mean()) * (y - y.mean())
    return float(d.std(ddof=1) / np.sqrt(x.size))


def bias_variance_reports(model: NormalModel, g: Predictor, alpha: float, B: int, R_outer: int,
                          B_inner: int, estimators=("CB", "BY"), rng=None, R_oracle: int = 100_000,
                          oracle: tuple | None = None) -> dict[str, BiasVarianceReport]:
    """Bias, reducible and irreducible variance of CB and/or BY at (alpha, B).

    For each of ``R_outer`` datasets, ``B_inner`` draws estimate the
    conditional (infinite-bootstrap) mean, split into the training term and
    the (2/sqrt(alpha)) inner-product term; their across-dataset variances
    are corrected for the finite inner sample.  RVar for CB is the mean
    conditional variance of one per-draw term divided by B; for BY the
    B-draw estimate is recomputed on disjoint blocks of the inner draws, so
    ``B_inner`` must be at least 2B.  All requested estimators share the
    datasets, the draws and the fits.  ``oracle`` may pass precomputed
    (Risk, Risk_alpha) estimates.
    """
    estimators = tuple(e.upper() for e in estimators)
    if not estimators or any(e not in ("CB", "BY") for e in estimators):
        raise ValueError("estimators must be drawn from 'CB' and 'BY'")
    R, Bi, B = int(R_outer), int(B_inner), int(B)
    if R < 2 or Bi < 2:
        raise ValueError("need R_outer >= 2 and B_inner >= 2")
    if Bi < B or ("BY" in estimators and Bi < 2 * B):
        raise ValueError("B_inner too small for the requested B")
    n, s2 = model.n, model.sigma2
    ra = np.sqrt(alpha)
    Y = sample_elevated(model, 0.0, as_generator(rng, DATA), size=R)
    gboot = as_generator(rng, BOOT)
    acc = {e: {k: np.empty(R) for k in ("T1", "v1", "c12", "rv", "est")} for e in estimators}
    T2 = np.empty(R)
    v2 = np.empty(R)
    for r in range(R):
        y = Y[r]
        om = model.sigma * gboot.standard_normal((Bi, n))
        G = g.predict_many(y + ra * om)
        t2 = (2 / ra) * np.einsum("ij,ij->i", om, G)
        T2[r], v2[r] = t2.mean(), t2.var(ddof=1)
        for e in estimators:
            a = acc[e]
            if e == "CB":
                t1 = np.sum((y - G) ** 2, axis=1)
                pd = cb_per_draw(CoupledDrawSet.from_omega(y, alpha, om), g, s2, fitted=G)
                a["rv"][r] = pd.var(ddof=1) / B
                a["est"][r] = pd[:B].mean()
            else:
                t1 = np.full(Bi, np.sum((y - g.predict(y)) ** 2))
                vals = np.array([
                    by_risk(y, g, s2, alpha, CoupledDrawSet.from_omega(y, alpha, om[k * B:(k + 1) * B]),
                            fitted=G[k * B:(k + 1) * B]).value
                    for k in range(Bi // B)
                ])
                a["rv"][r] = vals.var(ddof=1)
                a["est"][r] = vals[0]
            a["T1"][r], a["v1"][r] = t1.mean(), t1.var(ddof=1)
            a["c12"][r] = np.mean((t1 - t1.mean()) * (t2 - t2.mean())) * Bi / (Bi - 1)
    if oracle is None:
        base = mc_risk(model, g, 0.0, R_oracle, rng)
        elev = mc_risk(model, g, alpha, R_oracle, rng)
    else:
        base, elev = oracle
    ivar2 = T2.var(ddof=1) - v2.mean() / Bi
    out = {}
    for e in estimators:
        a = acc[e]
        T1, est = a["T1"], a["est"]
        ivar1 = T1.var(ddof=1) - a["v1"].mean() / Bi
        cov12 = 2 * (np.cov(T1, T2, ddof=1)[0, 1] - a["c12"].mean() / Bi)
        if e == "CB":
            bias = elev.value - base.value
            bias_se = np.hypot(elev.std_error, base.std_error)
        else:
            bias = est.mean() - base.value
            bias_se = np.hypot(est.std(ddof=1) / np.sqrt(R), base.std_error)
        err2 = (est - base.value) ** 2
        out[e] = BiasVarianceReport(
            estimator=e, alpha=float(alpha), B=B,
            bias=float(bias), bias_sq=float(bias**2), rvar=float(a["rv"].mean()),
            ivar=float(ivar1 + ivar2 + cov12), ivar1=float(ivar1), ivar2=float(ivar2), cov12=float(cov12),
            total_error=float(err2.mean()),
            bias_se=float(bias_se), rvar_se=float(a["rv"].std(ddof=1) / np.sqrt(R)),
            ivar_se=_var_se(T1 + T2), ivar1_se=_var_se(T1), ivar2_se=_var_se(T2),
            cov12_se=2 * _cov_se(T1, T2), total_error_se=float(err2.std(ddof=1) / np.sqrt(R)),
            risk=base.value, risk_alpha=elev.value, R_outer=R, B_inner=Bi,
        )
    return out


def bias_variance_report(model: NormalModel, g: Predictor, alpha: float, B: int, R_outer: int,
                         B_inner: int, estimator: str = "CB", rng=None, R_oracle: int = 100_000,
                         oracle: tuple | None = None) -> BiasVarianceReport:
    """Single-estimator form of :func:`bias_variance_reports`."""
    return bias_variance_reports(model, g, alpha, B, R_outer, B_inner, (estimator,), rng,
                                 R_oracle, oracle)[estimator.upper()]


@dataclass(frozen=True)
class RvarLeadingTerms:
    cb_term: float
    by_term: float
    diff_term: float | None
    cb_se: float
    by_se: float
    diff_se: float | None
    alpha: float
    B: int


def rvar_leading_terms(model: NormalModel, g: Predictor, alpha: float, B: int, R: int, rng=None,
                       g_tilde: Predictor | None = None) -> RvarLeadingTerms:
    """Leading 1/(B alpha) terms of the reducible variance of CB and BY.

    cb_term = 4 sigma2 E||Y - g(Y)||^2 / (B alpha), by_term = 4 sigma2
    E||g(Y)||^2 / (B alpha); with ``g_tilde``, diff_term bounds the reducible
    variance of CB(g) - CB(g_tilde) on shared draws.
    """
    if R < 2:
        raise ValueError("need R >= 2")
    gen = as_generator(rng, ORACLE)
    c = 4 * model.sigma2 / (B * alpha)
    a, b, d = [], [], []
    for m in _chunks(int(R)):
        Y = sample_elevated(model, 0.0, gen, size=m)
        G = g.predict_many(Y)
        a.append(np.sum((Y - G) ** 2, axis=1))
        b.append(np.sum(G**2, axis=1))
        if g_tilde is not None:
            d.append(np.sum((G - g_tilde.predict_many(Y)) ** 2, axis=1))
    cb, by = OracleEstimate.from_samples(np.concatenate(a)), OracleEstimate.from_samples(np.concatenate(b))
    df = OracleEstimate.from_samples(np.concatenate(d)) if d else None
    return RvarLeadingTerms(
        cb_term=c * cb.value, by_term=c * by.value, diff_term=None if df is None else c * df.value,
        cb_se=c * cb.std_error, by_se=c * by.std_error, diff_se=None if df is None else c * df.std_error,
        alpha=float(alpha), B=int(B),
    )


def measured_cb_rvar(model: NormalModel, g: Predictor, alphas, Bs, R: int, rng=None) -> np.ndarray:
    """Reducible variance of CB on an (alpha, B) grid, shape (len(alphas), len(Bs)).

    For each dataset the first B of max(Bs) draws give an unbiased estimate
    s^2/B of the conditional variance of the B-draw estimate; the datasets
    and draws are shared across the grid.
    """
    alphas = np.asarray(alphas, dtype=float)
    Bs = np.asarray(Bs, dtype=int)
    if Bs.min() < 2:
        raise ValueError("each B must be at least 2")
    Bmax = int(Bs.max())
    Y = sample_elevated(model, 0.0, as_generator(rng, DATA), size=int(R))
    gboot = as_generator(rng, BOOT)
    out = np.zeros((alphas.size, Bs.size))
    for r in range(int(R)):
        om = model.sigma * gboot.standard_normal((Bmax, model.n))
        for i, a in enumerate(alphas):
            pd = cb_per_draw(CoupledDrawSet.from_omega(Y[r], a, om), g, model.sigma2)
            for j, B in enumerate(Bs):
                out[i, j] += pd[:B].var(ddof=1) / B
    return out / int(R)
