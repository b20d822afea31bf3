"""Risk and degrees-of-freedom estimators.

CB is computed from a :class:`CoupledDrawSet`: the rule is trained on each
``Y*`` and tested against the paired ``Y-dagger``.  BY and Efron reuse the
same ``Y*`` rows to form bootstrap covariances, so a single draw set can be
shared between all of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .gaussian_model import CoupledDrawSet, cholesky_factor, make_structured_coupled_draws
from .predictors import DimensionError, Predictor, UnsupportedDivergenceError
from .rng import INNER, as_generator

CB_VARIANTS = ("cb_default", "cb_raw_pair", "cb_exact_mean")
BY_VARIANTS = ("by_covariance", "by_breiman_increment", "by_ye_per_coordinate")


@dataclass(frozen=True, eq=False)
class RiskEstimate:
    estimator: str
    value: float
    alpha: float
    B: int
    variant: str | None = None
    per_draw: np.ndarray | None = field(default=None, repr=False)
    checksum: str | None = None

    @property
    def std_error(self) -> float:
        """Standard error of ``value`` over the bootstrap draws (nan when B < 2)."""
        if self.per_draw is None or self.per_draw.size < 2:
            return float("nan")
        return float(self.per_draw.std(ddof=1) / np.sqrt(self.per_draw.size))

    def summary(self) -> dict:
        out = {"estimator": self.estimator, "value": self.value, "alpha": self.alpha,
               "B": self.B, "variant": self.variant}
        if self.per_draw is not None:
            pd = self.per_draw
            out["per_draw_summary"] = {
                "mean": float(pd.mean()),
                "sd": float(pd.std(ddof=1)) if pd.size > 1 else None,
                "min": float(pd.min()),
                "max": float(pd.max()),
                "std_error": None if pd.size < 2 else self.std_error,
            }
        if self.checksum is not None:
            out["draw_checksum"] = self.checksum
        return out


@dataclass(frozen=True)
class DfEstimate:
    value: float
    method: str
    alpha: float
    B: int | None = None


def _check_dims(y, g: Predictor):
    n = g.expected_n
    if n is not None and np.asarray(y).shape[-1] != n:
        raise DimensionError(f"data length {np.asarray(y).shape[-1]} does not match the rule ({n})")


def _sq(a) -> np.ndarray:
    return np.einsum("ij,ij->i", a, a)


# ---------------------------------------------------------------------------
# Coupled bootstrap
# ---------------------------------------------------------------------------


def cb_per_draw(draws: CoupledDrawSet, g: Predictor, sigma2: float, variant="cb_default",
                fitted=None) -> np.ndarray:
    """Per-draw CB terms; their mean is the CB estimate.

    ``fitted`` may hold precomputed ``g(Y*)`` rows.
    """
    if variant not in CB_VARIANTS:
        raise ValueError(f"unknown CB variant {variant!r}")
    _check_dims(draws.y, g)
    a, n = draws.alpha, draws.n
    G = g.predict_many(draws.ystar) if fitted is None else fitted
    test = _sq(draws.ydagger - G)
    if variant == "cb_default":
        return test - _sq(draws.omega) / a - n * sigma2
    if variant == "cb_raw_pair":
        return test + _sq(draws.ystar) - _sq(draws.ydagger) - n * (1 + a) * sigma2
    return test + n * sigma2 * (a - 1 / a) - n * (1 + a) * sigma2


def cb_risk(draws: CoupledDrawSet, g: Predictor, sigma2: float, variant="cb_default",
            fitted=None) -> RiskEstimate:
    """CB estimate of Risk_alpha(g) = E||theta - g(Y_alpha)||^2, Y_alpha ~ N(theta, (1+alpha) sigma2 I).

    The three variants differ only in the term that centers the test error;
    all have the same expectation.
    """
    pd = cb_per_draw(draws, g, sigma2, variant, fitted)
    return RiskEstimate("CB", float(pd.mean()), draws.alpha, draws.B, variant, pd, draws.checksum())


def _cov_terms(draws: CoupledDrawSet, G, variant):
    """Per-draw covariance contributions, shape (B, n); column means are Cov*_i."""
    B = draws.B
    if B < 2:
        raise ValueError("bootstrap covariances need B >= 2")
    if variant == "by_breiman_increment":
        center = draws.y
    else:
        center = draws.ystar.mean(axis=0)
    return (B / (B - 1)) * (draws.ystar - center) * G


def bootstrap_cov(draws: CoupledDrawSet, g: Predictor, variant="by_covariance", fitted=None) -> np.ndarray:
    """Empirical covariances Cov*_i between Y*_i and g_i(Y*) over the draws (1/(B-1))."""
    G = g.predict_many(draws.ystar) if fitted is None else fitted
    return _cov_terms(draws, G, variant).mean(axis=0)


def _training_error(y, g):
    y = np.asarray(y, dtype=float)
    return float(np.sum((y - g.predict(y)) ** 2))


def by_risk(y, g: Predictor, sigma2: float, alpha: float, draws: CoupledDrawSet,
            variant="by_covariance", fitted=None) -> RiskEstimate:
    """Breiman-Ye estimate ||y - g(y)||^2 + (2/alpha) sum_i Cov*_i - n sigma2.

    ``by_breiman_increment`` centers the covariances at y instead of the
    bootstrap mean; ``by_ye_per_coordinate`` replaces the 1/alpha factor by
    sigma2 / (s*_i)^2 coordinate by coordinate.
    """
    if variant not in BY_VARIANTS:
        raise ValueError(f"unknown BY variant {variant!r}")
    y = np.asarray(y, dtype=float)
    if not np.array_equal(y, draws.y):
        raise ValueError("draws were not generated from y")
    if not np.isclose(alpha, draws.alpha, rtol=1e-12, atol=0):
        raise ValueError(f"draws were generated at alpha={draws.alpha}, not {alpha}")
    _check_dims(y, g)
    G = g.predict_many(draws.ystar) if fitted is None else fitted
    terms = _cov_terms(draws, G, variant)
    if variant == "by_ye_per_coordinate":
        s2 = draws.ystar.var(axis=0, ddof=1)
        opt = 2 * sigma2 * (terms / s2).sum(axis=1)
    else:
        opt = (2 / alpha) * terms.sum(axis=1)
    pd = _training_error(y, g) - y.size * sigma2 + opt
    return RiskEstimate("BY", float(pd.mean()), float(alpha), draws.B, variant, pd, draws.checksum())


def efron_risk(y, g: Predictor, sigma2: float, draws: CoupledDrawSet, fitted=None) -> RiskEstimate:
    """Efron's estimate ||y - g(y)||^2 + 2 sum_i Cov*_i - n sigma2 (no 1/alpha)."""
    y = np.asarray(y, dtype=float)
    if not np.array_equal(y, draws.y):
        raise ValueError("draws were not generated from y")
    _check_dims(y, g)
    G = g.predict_many(draws.ystar) if fitted is None else fitted
    opt = 2 * _cov_terms(draws, G, "by_covariance").sum(axis=1)
    pd = _training_error(y, g) - y.size * sigma2 + opt
    return RiskEstimate("Efron", float(pd.mean()), draws.alpha, draws.B, "by_covariance", pd,
                        draws.checksum())


def sure(y, g: Predictor, sigma2: float) -> RiskEstimate:
    """Stein's unbiased risk estimate ||y - g(y)||^2 + 2 sigma2 div g(y) - n sigma2."""
    if not g.has_analytic_divergence:
        raise UnsupportedDivergenceError(f"{g.kind} has no analytic divergence; SURE is unavailable")
    y = np.asarray(y, dtype=float)
    _check_dims(y, g)
    val = _training_error(y, g) + 2 * sigma2 * g.divergence(y) - y.size * sigma2
    return RiskEstimate("SURE", float(val), 0.0, 0)


# ---------------------------------------------------------------------------
# Degrees of freedom
# ---------------------------------------------------------------------------


def cb_df(draws: CoupledDrawSet, g: Predictor, sigma2: float, alpha: float | None = None,
          variant="cb_default", fitted=None) -> DfEstimate:
    """Unbiased estimate of df_alpha(g), the degrees of freedom at noise level (1+alpha) sigma2."""
    a = draws.alpha if alpha is None else float(alpha)
    if not np.isclose(a, draws.alpha, rtol=1e-12, atol=0):
        raise ValueError(f"draws were generated at alpha={draws.alpha}, not {alpha}")
    G = g.predict_many(draws.ystar) if fitted is None else fitted
    cb = cb_per_draw(draws, g, sigma2, variant, fitted=G).mean()
    train = _sq(draws.ystar - G).mean()
    s2a = sigma2 * (1 + a)
    return DfEstimate(float((cb - train + draws.n * s2a) / (2 * s2a)), "cb_df", a, draws.B)


def ye_df(y, g: Predictor, sigma2: float, alpha: float, draws: CoupledDrawSet,
          variant="by_covariance", fitted=None) -> DfEstimate:
    """Bootstrap df estimate sum_i Cov*_i / (sigma2 alpha).

    With ``variant="by_ye_per_coordinate"`` each Cov*_i is divided by the
    bootstrap variance (s*_i)^2 instead.
    """
    if variant not in BY_VARIANTS:
        raise ValueError(f"unknown BY variant {variant!r}")
    if not np.array_equal(np.asarray(y, dtype=float), draws.y):
        raise ValueError("draws were not generated from y")
    cov = bootstrap_cov(draws, g, variant, fitted)
    if variant == "by_ye_per_coordinate":
        val = np.sum(cov / draws.ystar.var(axis=0, ddof=1))
    else:
        val = cov.sum() / (sigma2 * alpha)
    return DfEstimate(float(val), "ye_df", float(alpha), draws.B)


def sure_df(y, g: Predictor) -> DfEstimate:
    if not g.has_analytic_divergence:
        raise UnsupportedDivergenceError(f"{g.kind} has no analytic divergence")
    return DfEstimate(float(g.divergence(y)), "sure_divergence", 0.0)


# ---------------------------------------------------------------------------
# Correlated noise: Y ~ N(theta, Sigma), loss ||x||_A^2 = x' A^{-1} x
# ---------------------------------------------------------------------------


def structured_cb_from_draws(draws: CoupledDrawSet, Sigma, A, g: Predictor) -> RiskEstimate:
    """CB estimate of E||theta - g(Y_alpha)||_A^2 with Y_alpha ~ N(theta, (1+alpha) Sigma).

    ``draws`` must have omega ~ N(0, Sigma).
    """
    _check_dims(draws.y, g)
    LA = cholesky_factor(A, "A")
    LS = cholesky_factor(Sigma, "Sigma")
    if LA.shape[0] != draws.n or LS.shape[0] != draws.n:
        raise DimensionError("A and Sigma must be n x n")

    def qform(R):  # rows r -> r' A^{-1} r
        Z = solve_triangular(LA, R.T, lower=True)
        return np.einsum("ij,ij->j", Z, Z)

    trace = float(np.sum(solve_triangular(LA, LS, lower=True) ** 2))
    G = g.predict_many(draws.ystar)
    pd = qform(draws.ydagger - G) - qform(draws.omega) / draws.alpha - trace
    return RiskEstimate("CB_structured", float(pd.mean()), draws.alpha, draws.B, "cb_default", pd,
                        draws.checksum())


def structured_cb_risk(y, Sigma, A, alpha: float, B: int, g: Predictor, rng=None) -> RiskEstimate:
    draws = make_structured_coupled_draws(y, Sigma, alpha, B, rng)
    return structured_cb_from_draws(draws, Sigma, A, g)


# ---------------------------------------------------------------------------
# Bregman three-point identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BregmanCheck:
    """Monte Carlo check of the Bregman three-point identities.

    ``residual`` is E[D(V, g(U))] - E[D(W, g(U))] - E[phi(U)] + E[phi(W)],
    estimated sample by sample.  ``general_residual`` checks the first-order
    identity (with E[grad phi(g(U))]) using independent sample blocks for its
    two sides.
    """

    lhs: float
    rhs: float
    residual: float
    std_error: float
    general_residual: float
    general_std_error: float
    M: int


def bregman_divergence(phi, grad_phi, a, b) -> np.ndarray:
    """Row-wise D_phi(a, b) = phi(a) - phi(b) - <grad phi(b), a - b>."""
    return phi(a) - phi(b) - np.einsum("ij,ij->i", grad_phi(b), a - b)


def bregman_three_point_check(phi, grad_phi, triple_sampler, g, M: int, rng=None) -> BregmanCheck:
    """Check both Bregman three-point identities by simulation.

    ``phi`` maps rows to values, ``grad_phi`` rows to gradients, and
    ``triple_sampler(gen, m)`` returns three (m, n) arrays U, V, W of
    independent draws with U, V identically distributed and E[V] = E[W].
    ``g`` is a Predictor or any callable on a stack of rows.
    """
    M = int(M)
    if M < 6:
        raise ValueError("need M >= 6")
    gen = as_generator(rng, INNER)
    fit = g.predict_many if isinstance(g, Predictor) else g

    U, V, W = (np.atleast_2d(np.asarray(a, dtype=float)) for a in triple_sampler(gen, M))
    gU = fit(U)
    pV, pU, pW = phi(V), phi(U), phi(W)
    DV = bregman_divergence(phi, grad_phi, V, gU)
    DW = bregman_divergence(phi, grad_phi, W, gU)
    for arr in (pV, pU, pW, DV, DW):
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("phi produced non-finite values on the sampled triples")
    lhs = DV.mean()
    rhs = DW.mean() + pU.mean() - pW.mean()
    # DV - DW - pU + pW reduces to phi(V) - phi(U) - <grad phi(g(U)), V - W>
    r = DV - DW - pU + pW
    se = r.std(ddof=1) / np.sqrt(M)

    # general form: split the sample into three independent blocks
    m = M // 3
    s1, s2, s3 = slice(0, m), slice(m, 2 * m), slice(2 * m, 3 * m)
    left = (DV - DW)[s1]
    dphi = (pV - pW)[s2]
    grad = grad_phi(gU[s2])
    diff = W[s3] - V[s3]
    mg, md = grad.mean(axis=0), diff.mean(axis=0)
    gen_res = left.mean() - dphi.mean() - mg @ md
    var_ip = (md @ np.cov(grad.T, ddof=1).reshape(mg.size, mg.size) @ md
              + mg @ np.cov(diff.T, ddof=1).reshape(mg.size, mg.size) @ mg) / m
    # dphi and the gradient share block 2, so their covariance enters too
    cross = np.cov(dphi, grad @ md, ddof=1)[0, 1] / m
    gen_se = np.sqrt(left.var(ddof=1) / m + dphi.var(ddof=1) / m + var_ip + 2 * cross)
    return BregmanCheck(float(lhs), float(rhs), float(r.mean()), float(se), float(gen_res),
                        float(gen_se), M)
