"""Prediction rules g: R^n -> R^n and their divergences.

Every rule exposes ``predict(y)`` for one data vector and ``predict_many(Y)``
for a stack of vectors (rows), which is what the bootstrap estimators call.
Regression rules carry a :class:`DesignContext`; the module-level
:func:`predict` and :func:`divergence` accept one as an argument too.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import solvers
from .solvers import SolverError

KINDS = (
    "identity",
    "zero",
    "linear_smoother",
    "ridge",
    "lasso",
    "lasso_cv",
    "forward_stepwise",
    "soft_threshold",
    "hard_threshold",
    "fused_lasso_1d",
)


class DimensionError(ValueError):
    """Data, design, or smoother dimensions disagree."""


class MissingContextError(DimensionError):
    """A regression rule was used without a design matrix."""


class UnsupportedDivergenceError(TypeError):
    """The rule has no analytic divergence (SURE is unavailable)."""


@dataclass(frozen=True, eq=False)
class DesignContext:
    """Feature matrix X (n x p) and, in simulations, the true coefficients."""

    X: np.ndarray
    beta_true: np.ndarray | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2:
            raise DimensionError(f"X must be a matrix, got shape {X.shape}")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.beta_true is not None:
            b = np.array(self.beta_true, dtype=float)
            if b.shape != (X.shape[1],):
                raise DimensionError(f"beta_true must have length {X.shape[1]}")
            b.setflags(write=False)
            object.__setattr__(self, "beta_true", b)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _as_rows(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        return Y[None, :]
    if Y.ndim != 2:
        raise DimensionError(f"expected a vector or a matrix of rows, got shape {Y.shape}")
    return Y


@dataclass(frozen=True, eq=False)
class Predictor:
    """Base class.  Subclasses set ``kind`` and implement ``_predict_rows``."""

    kind = "abstract"
    has_analytic_divergence = False
    needs_design = False

    def __call__(self, y):
        return self.predict(y)

    def _check(self, Y):
        Y = _as_rows(Y)
        n = self.expected_n
        if n is not None and Y.shape[1] != n:
            raise DimensionError(f"{self.kind} expects vectors of length {n}, got {Y.shape[1]}")
        return Y

    @property
    def expected_n(self) -> int | None:
        return None

    def predict(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.ndim != 1:
            raise DimensionError("predict takes a single data vector; use predict_many")
        return self._predict_rows(self._check(y))[0]

    def predict_many(self, Y) -> np.ndarray:
        """Apply the rule to each row of ``Y``."""
        return self._predict_rows(self._check(Y))

    def divergence(self, y) -> float:
        raise UnsupportedDivergenceError(f"{self.kind} has no analytic divergence")

    def with_design(self, ctx: DesignContext | None) -> "Predictor":
        return self

    @property
    def params(self) -> dict:
        return {}

    def describe(self) -> str:
        inner = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.kind}({inner})" if inner else self.kind


@dataclass(frozen=True, eq=False)
class Identity(Predictor):
    kind = "identity"
    has_analytic_divergence = True

    def _predict_rows(self, Y):
        return Y.copy()

    def divergence(self, y):
        return float(np.asarray(y).size)


@dataclass(frozen=True, eq=False)
class Zero(Predictor):
    kind = "zero"
    has_analytic_divergence = True

    def _predict_rows(self, Y):
        return np.zeros_like(Y)

    def divergence(self, y):
        return 0.0


@dataclass(frozen=True, eq=False)
class LinearSmoother(Predictor):
    """g(y) = S y for a fixed n x n matrix S."""

    S: np.ndarray
    kind = "linear_smoother"
    has_analytic_divergence = True

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DimensionError(f"smoother must be square, got shape {S.shape}")
        S.setflags(write=False)
        object.__setattr__(self, "S", S)

    @property
    def expected_n(self):
        return self.S.shape[0]

    def _predict_rows(self, Y):
        return Y @ self.S.T

    def divergence(self, y):
        self._check(y)
        return float(np.trace(self.S))


# ---------------------------------------------------------------------------
# Thresholding rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SoftThreshold(Predictor):
    t: float = 1.0
    kind = "soft_threshold"
    has_analytic_divergence = True

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError(f"threshold must be nonnegative, got {self.t}")

    @property
    def params(self):
        return {"t": self.t}

    def _predict_rows(self, Y):
        return np.sign(Y) * np.maximum(np.abs(Y) - self.t, 0.0)

    def divergence(self, y):
        return float(np.count_nonzero(np.abs(np.asarray(y, float)) > self.t))


@dataclass(frozen=True, eq=False)
class HardThreshold(Predictor):
    """Keep y_i when |y_i| > t, else 0.

    The reported divergence is the almost-everywhere count #{|y_i| > t}.  The
    rule jumps at +-t, so SURE built on this count is biased.
    """

    t: float = 1.0
    kind = "hard_threshold"
    has_analytic_divergence = True

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError(f"threshold must be nonnegative, got {self.t}")

    @property
    def params(self):
        return {"t": self.t}

    def _predict_rows(self, Y):
        return np.where(np.abs(Y) > self.t, Y, 0.0)

    def divergence(self, y):
        return float(np.count_nonzero(np.abs(np.asarray(y, float)) > self.t))


@dataclass(frozen=True, eq=False)
class FusedLasso1D(Predictor):
    """Exact 1-D fused lasso (total variation denoising) at penalty ``lam``."""

    lam: float = 1.0
    kind = "fused_lasso_1d"
    has_analytic_divergence = True

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")

    @property
    def params(self):
        return {"lam": self.lam}

    def _predict_rows(self, Y):
        return solvers.solve_fused_lasso_1d(Y, self.lam)

    def divergence(self, y):
        return float(solvers.fused_groups(self.predict(y)))


# ---------------------------------------------------------------------------
# Regression rules: fitted values X beta_hat(y)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Regression(Predictor):
    design: DesignContext | None = None
    needs_design = True

    @property
    def X(self) -> np.ndarray:
        if self.design is None:
            raise MissingContextError(f"{self.kind} needs a design matrix")
        return self.design.X

    @property
    def expected_n(self):
        if self.design is None:
            raise MissingContextError(f"{self.kind} needs a design matrix")
        return self.design.n

    def with_design(self, ctx):
        if ctx is None:
            return self
        if not isinstance(ctx, DesignContext):
            ctx = DesignContext(ctx)
        return replace(self, design=ctx)

    def coef(self, y) -> np.ndarray:
        """Fitted coefficient vector for one data vector."""
        return self.coef_many(self._check(np.asarray(y, float)))[0]

    def _predict_rows(self, Y):
        return self.coef_many(Y) @ self.X.T


@dataclass(frozen=True, eq=False)
class Ridge(_Regression):
    """Minimizer of (1/(2n)) ||y - X b||^2 + (lam/2) ||b||^2.

    The fit is the linear smoother S = X (X'X + n lam I)^{-1} X'.
    """

    lam: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    kind = "ridge"
    has_analytic_divergence = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"ridge lambda must be positive, got {self.lam}")

    def with_design(self, ctx):
        out = super().with_design(ctx)
        if out is not self:
            object.__setattr__(out, "_cache", {})
        return out

    @property
    def params(self):
        return {"lam": self.lam}

    @property
    def smoother(self) -> np.ndarray:
        S = self._cache.get("S")
        if S is None:
            X = self.X
            n = X.shape[0]
            # kernel form: X (X'X + n lam I)^{-1} X' = K (K + n lam I)^{-1}, K = X X'
            K = X @ X.T
            S = np.linalg.solve(K + n * self.lam * np.eye(n), K).T
            S = (S + S.T) / 2
            S.setflags(write=False)
            self._cache["S"] = S
        return S

    def coef_many(self, Y):
        X = self.X
        n, p = X.shape
        return np.linalg.solve(X.T @ X + n * self.lam * np.eye(p), X.T @ Y.T).T

    def _predict_rows(self, Y):
        return Y @ self.smoother

    def divergence(self, y):
        self._check(y)
        return float(np.trace(self.smoother))


@dataclass(frozen=True, eq=False)
class Lasso(_Regression):
    """Minimizer of (1/(2n)) ||y - X b||^2 + lam ||b||_1 (no intercept)."""

    lam: float = 1.0
    tol: float = solvers.LASSO_TOL
    max_iter: int = solvers.LASSO_MAX_ITER
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    kind = "lasso"
    has_analytic_divergence = True

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")

    def with_design(self, ctx):
        out = super().with_design(ctx)
        if out is not self:
            object.__setattr__(out, "_cache", {})
        return out

    @property
    def params(self):
        return {"lam": self.lam}

    @property
    def gram(self) -> np.ndarray:
        G = self._cache.get("G")
        if G is None:
            X = self.X
            G = np.ascontiguousarray(X.T @ X / X.shape[0])
            self._cache["G"] = G
        return G

    def coef_many(self, Y):
        X = self.X
        C = Y @ X / X.shape[0]
        B0 = None
        if Y.shape[0] > 1:
            # bootstrap rows cluster around their mean; start every solve there
            c0 = C.mean(axis=0, keepdims=True)
            b0 = solvers.lasso_gram_batch(self.gram, c0, self.lam, tol=self.tol, max_iter=self.max_iter)
            B0 = np.repeat(b0, Y.shape[0], axis=0)
        return solvers.lasso_gram_batch(self.gram, C, self.lam, B0, tol=self.tol, max_iter=self.max_iter)

    def divergence(self, y):
        """Size of the active set (the rank of X_A for generic designs)."""
        return float(np.count_nonzero(self.coef(y)))


@dataclass(frozen=True, eq=False)
class LassoCV(_Regression):
    """Lasso with lambda chosen by K-fold cross-validation, then refit on all rows.

    Deterministic given ``folds`` (one label in 0..K-1 per row).  Without an
    explicit ``lambda_grid`` the grid is rebuilt from each data vector's own
    lambda_max, so selection is part of the rule.
    """

    folds: np.ndarray | None = None
    lambda_grid: np.ndarray | None = None
    n_lambda: int = 50
    ratio: float = 0.01
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    kind = "lasso_cv"

    def __post_init__(self):
        if self.folds is not None:
            f = np.array(self.folds, dtype=int)
            f.setflags(write=False)
            object.__setattr__(self, "folds", f)

    def with_design(self, ctx):
        out = super().with_design(ctx)
        if out is not self:
            object.__setattr__(out, "_cache", {})
        return out

    @property
    def params(self):
        k = None if self.folds is None else int(self.folds.max() + 1)
        return {"folds": k, "n_lambda": self.n_lambda, "ratio": self.ratio}

    def _grams(self):
        g = self._cache.get("grams")
        if g is None:
            if self.folds is None:
                raise ValueError("lasso_cv needs an explicit fold assignment")
            if self.folds.shape != (self.X.shape[0],):
                raise DimensionError("fold assignment must label every row of X")
            g = solvers._fold_grams(self.X, self.folds)
            self._cache["grams"] = g
        return g

    def fit(self, y) -> solvers.CVFit:
        y = self._check(np.asarray(y, float))[0]
        return solvers.solve_lasso_cv(self.X, y, self.folds, self.lambda_grid,
                                      n_lambda=self.n_lambda, ratio=self.ratio, _grams=self._grams())

    def coef_many(self, Y):
        grams = self._grams()
        out = np.empty((Y.shape[0], self.X.shape[1]))
        for b, y in enumerate(Y):
            out[b] = solvers.solve_lasso_cv(self.X, y, self.folds, self.lambda_grid,
                                            n_lambda=self.n_lambda, ratio=self.ratio, _grams=grams).beta
        return out


@dataclass(frozen=True, eq=False)
class ForwardStepwise(_Regression):
    """k steps of greedy forward selection, least-squares refit on the selected set."""

    k: int = 1
    kind = "forward_stepwise"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"k must be a nonnegative integer, got {self.k}")

    @property
    def params(self):
        return {"k": self.k}

    def coef_many(self, Y):
        return np.stack([solvers.solve_forward_stepwise(self.X, y, self.k) for y in Y])

    def _predict_rows(self, Y):
        X = self.X
        return np.stack([solvers.forward_stepwise_path(X, y, self.k)[1][self.k] for y in Y])


# ---------------------------------------------------------------------------
# Functional interface and construction from text specs
# ---------------------------------------------------------------------------


def predict(g: Predictor, y, ctx: DesignContext | None = None) -> np.ndarray:
    """g(y); ``ctx`` supplies (or replaces) the design of a regression rule."""
    return g.with_design(ctx).predict(y)


def divergence(g: Predictor, y, ctx: DesignContext | None = None) -> float:
    g = g.with_design(ctx)
    if not g.has_analytic_divergence:
        raise UnsupportedDivergenceError(f"{g.kind} has no analytic divergence")
    return g.divergence(y)


_CLASSES = {
    "identity": Identity,
    "zero": Zero,
    "linear_smoother": LinearSmoother,
    "ridge": Ridge,
    "lasso": Lasso,
    "lasso_cv": LassoCV,
    "forward_stepwise": ForwardStepwise,
    "soft_threshold": SoftThreshold,
    "hard_threshold": HardThreshold,
    "fused_lasso_1d": FusedLasso1D,
}

_ALIASES = {"stepwise": "forward_stepwise", "fs": "forward_stepwise", "soft": "soft_threshold",
            "hard": "hard_threshold", "fused": "fused_lasso_1d"}


def make_predictor(kind: str, design: DesignContext | None = None, **params) -> Predictor:
    kind = _ALIASES.get(kind, kind)
    if kind not in _CLASSES:
        raise ValueError(f"unknown predictor kind {kind!r}; choose from {', '.join(KINDS)}")
    cls = _CLASSES[kind]
    if "lambda" in params:
        params["lam"] = params.pop("lambda")
    g = cls(**params)
    return g.with_design(design)


def parse_predictor_spec(spec: str, design: DesignContext | None = None, folds=None) -> Predictor:
    """Build a rule from text such as ``"lasso:lam=0.31"`` or ``"forward_stepwise:k=2"``.

    For ``lasso_cv`` the integer parameter ``folds`` is a fold count; the
    actual assignment must be passed as ``folds``.
    """
    kind, _, rest = spec.strip().partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"bad predictor parameter {item!r} in {spec!r}")
        key = key.strip()
        params[key] = int(val) if key in ("k", "n_lambda") else float(val)
    kind = _ALIASES.get(kind.strip(), kind.strip())
    if kind == "lasso_cv":
        params.pop("folds", None)
        if folds is not None:
            params["folds"] = folds
    return make_predictor(kind, design, **params)


__all__ = [
    "KINDS", "DimensionError", "MissingContextError", "UnsupportedDivergenceError", "SolverError",
    "DesignContext", "Predictor", "Identity", "Zero", "LinearSmoother", "SoftThreshold",
    "HardThreshold", "FusedLasso1D", "Ridge", "Lasso", "LassoCV", "ForwardStepwise",
    "predict", "divergence", "make_predictor", "parse_predictor_spec",
]
