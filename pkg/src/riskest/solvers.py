"""Solvers behind the regression and denoising predictors.

Conventions: lasso and ridge minimize ``(1/(2n)) ||y - X b||^2 + penalty``
with no intercept and no column standardization.  Ridge uses the penalty
``(lam/2) ||b||^2``, so its fit is ``X (X'X + n lam I)^{-1} X' y``.
"""

from __future__ import annotations

import warnings

import numpy as np
from numba import njit


class SolverError(RuntimeError):
    """A solver failed to reach its convergence tolerance."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


LASSO_TOL = 1e-10
LASSO_MAX_ITER = 100_000


# ---------------------------------------------------------------------------
# Lasso: coordinate descent on the Gram matrix
# ---------------------------------------------------------------------------


@njit(cache=True)
def _kkt_from_corr(q, beta, lam):
    worst = 0.0
    for j in range(q.size):
        if beta[j] > 0:
            r = abs(q[j] - lam)
        elif beta[j] < 0:
            r = abs(q[j] + lam)
        else:
            r = abs(q[j]) - lam
        if r > worst:
            worst = r
    return worst


@njit(cache=True)
def _cd_inplace(G, c, lam, beta, tol, max_iter):
    """Cyclic coordinate descent; ``beta`` is the warm start and is overwritten.

    Returns the number of sweeps used, or -1 on non-convergence.
    """
    p = G.shape[0]
    q = c - G @ beta
    for it in range(1, max_iter + 1):
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            z = q[j] + gjj * beta[j]
            if z > lam:
                new = (z - lam) / gjj
            elif z < -lam:
                new = (z + lam) / gjj
            else:
                new = 0.0
            d = new - beta[j]
            if d != 0.0:
                for k in range(p):
                    q[k] -= d * G[k, j]
                beta[j] = new
        if _kkt_from_corr(q, beta, lam) <= tol:
            # incremental updates drift; confirm on freshly computed correlations
            q = c - G @ beta
            if _kkt_from_corr(q, beta, lam) <= tol:
                return it
    return -1


@njit(cache=True)
def _cd_batch(G, C, lam, B0, tol, max_iter):
    m = C.shape[0]
    out = B0.copy()
    status = np.empty(m, dtype=np.int64)
    for i in range(m):
        b = out[i].copy()
        status[i] = _cd_inplace(G, C[i], lam, b, tol, max_iter)
        out[i] = b
    return out, status


@njit(cache=True)
def _chol_append(L, k, G, order, j):
    """Grow the Cholesky factor of G[order[:k], order[:k]] by column j.

    Returns False when the new column is (numerically) in the span.
    """
    w = np.empty(k)
    for u in range(k):
        acc = G[order[u], j]
        for v in range(u):
            acc -= L[u, v] * w[v]
        w[u] = acc / L[u, u]
    d = G[j, j]
    for u in range(k):
        d -= w[u] * w[u]
    if d <= 1e-12 * G[j, j]:
        return False
    for u in range(k):
        L[k, u] = w[u]
    L[k, k] = np.sqrt(d)
    return True


@njit(cache=True)
def _chol_solve(L, k, b):
    x = b[:k].copy()
    for u in range(k):
        acc = x[u]
        for v in range(u):
            acc -= L[u, v] * x[v]
        x[u] = acc / L[u, u]
    for u in range(k - 1, -1, -1):
        acc = x[u]
        for v in range(u + 1, k):
            acc -= L[v, u] * x[v]
        x[u] = acc / L[u, u]
    return x


@njit(cache=True)
def _homotopy(G, c, lam_min, max_steps, max_active):
    """Exact lasso path by homotopy (LARS with the lasso drop rule).

    The active Gram block is kept as an incrementally grown Cholesky factor;
    drops rebuild it.  Returns knot lambdas, knot coefficients, and a status
    flag (0 reached ``lam_min``, 1 stopped early on a singular active set or
    the step limit).
    """
    p = G.shape[0]
    cap = min(max_steps + 1, 64)
    lams = np.empty(cap)
    betas = np.zeros((cap, p))
    q = c.copy()
    beta = np.zeros(p)
    active = np.zeros(p, dtype=np.bool_)
    s = np.zeros(p)
    j0 = 0
    for j in range(p):
        if abs(c[j]) > abs(c[j0]):
            j0 = j
    lam = abs(c[j0])
    lams[0] = lam
    if lam <= lam_min or lam == 0.0:
        return lams[:1], betas[:1], 0
    kmax = min(max_active, p) + 1
    L = np.zeros((kmax, kmax))
    order = np.empty(kmax, dtype=np.int64)
    sA = np.empty(kmax)
    if not _chol_append(L, 0, G, order, j0):
        return lams[:1], betas[:1], 1
    order[0] = j0
    active[j0] = True
    s[j0] = 1.0 if c[j0] > 0 else -1.0
    k = 1
    nk = 1
    last_drop = -1
    a = np.empty(p)
    for step in range(max_steps):
        for u in range(k):
            sA[u] = s[order[u]]
        dA = _chol_solve(L, k, sA)
        a[:] = 0.0
        for u in range(k):
            row = order[u]  # G is symmetric; walk rows for contiguous access
            du = dA[u]
            for j in range(p):
                a[j] += G[row, j] * du
        delta = lam - lam_min
        event = -1
        join = False
        for j in range(p):
            if active[j]:
                continue
            # a just-dropped variable sits on the face it left; it may only
            # re-enter through the opposite one during the next segment
            den = 1.0 - a[j]
            if den > 1e-12 and not (j == last_drop and s[j] > 0):
                t = (lam - q[j]) / den
                if 0.0 < t < delta:
                    delta = t
                    event = j
                    join = True
            den = 1.0 + a[j]
            if den > 1e-12 and not (j == last_drop and s[j] < 0):
                t = (lam + q[j]) / den
                if 0.0 < t < delta:
                    delta = t
                    event = j
                    join = True
        drop_pos = -1
        for u in range(k):
            j = order[u]
            if dA[u] * beta[j] < 0.0:
                t = -beta[j] / dA[u]
                if 0.0 < t < delta:
                    delta = t
                    event = j
                    join = False
                    drop_pos = u
        for u in range(k):
            beta[order[u]] += delta * dA[u]
        for j in range(p):
            q[j] -= delta * a[j]
        lam -= delta
        last_drop = -1
        if event >= 0:
            if join:
                if k + 1 > max_active or not _chol_append(L, k, G, order, event):
                    lams, betas, nk = _push_knot(lams, betas, nk, lam, beta, max_steps)
                    return lams[:nk], betas[:nk], 1
                order[k] = event
                k += 1
                active[event] = True
                s[event] = 1.0 if q[event] > 0 else -1.0
            else:
                active[event] = False
                beta[event] = 0.0
                last_drop = event
                for u in range(drop_pos, k - 1):
                    order[u] = order[u + 1]
                k -= 1
                # rows above the dropped one are unchanged
                for u in range(drop_pos, k):
                    _chol_append(L, u, G, order, order[u])
        lams, betas, nk = _push_knot(lams, betas, nk, lam, beta, max_steps)
        if event < 0:
            return lams[:nk], betas[:nk], 0
    return lams[:nk], betas[:nk], 1


@njit(cache=True)
def _push_knot(lams, betas, nk, lam, beta, max_steps):
    cap = lams.size
    if nk == cap:
        cap = 2 * cap
        lams2 = np.empty(cap)
        lams2[:nk] = lams[:nk]
        betas2 = np.zeros((cap, betas.shape[1]))
        betas2[:nk] = betas[:nk]
        lams = lams2
        betas = betas2
    lams[nk] = lam
    betas[nk] = beta
    return lams, betas, nk + 1


@njit(cache=True)
def _interp_path(knot_lams, knot_betas, grid):
    """Evaluate a piecewise-linear path at each grid lambda (grid decreasing)."""
    L = grid.size
    p = knot_betas.shape[1]
    out = np.zeros((L, p))
    m = knot_lams.size
    k = 0
    for g in range(L):
        lam = grid[g]
        if lam >= knot_lams[0]:
            continue
        while k + 1 < m and knot_lams[k + 1] > lam:
            k += 1
        if k + 1 >= m:
            out[g] = knot_betas[m - 1]
        else:
            w = (knot_lams[k] - lam) / (knot_lams[k] - knot_lams[k + 1])
            out[g] = knot_betas[k] + w * (knot_betas[k + 1] - knot_betas[k])
    return out


@njit(cache=True)
def _path_on_grid(G, c, grid, max_active, polish, tol, max_iter):
    """Lasso coefficients on a decreasing grid.

    The homotopy path is exact; grid points past an early stop are filled by
    warm-started coordinate descent, and ``polish`` runs CD everywhere so the
    KKT tolerance is certified.
    """
    kl, kb, status = _homotopy(G, c, grid[grid.size - 1], 8 * G.shape[0] + 50, max_active)
    out = _interp_path(kl, kb, grid)
    last = kl[kl.size - 1]
    ok = 0
    for g in range(grid.size):
        early = status == 1 and grid[g] < last
        if not (early or polish):
            continue
        if early:
            b = out[g - 1].copy() if g > 0 else np.zeros(G.shape[0])
        else:
            b = out[g].copy()
        if _cd_inplace(G, c, grid[g], b, tol, max_iter) < 0:
            ok = -1
        out[g] = b
    return out, ok


def lasso_lambda_max(X, y) -> float:
    """Smallest lambda at which the zero vector solves the lasso."""
    X = np.asarray(X, dtype=float)
    return float(np.max(np.abs(X.T @ y)) / X.shape[0])


def lasso_kkt_residual(X, y, beta, lam) -> float:
    """Max-norm violation of the lasso subgradient conditions, from scratch."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    q = X.T @ (np.asarray(y, dtype=float) - X @ beta) / n
    viol = np.where(beta > 0, np.abs(q - lam),
                    np.where(beta < 0, np.abs(q + lam), np.maximum(np.abs(q) - lam, 0.0)))
    return float(viol.max(initial=0.0))


def solve_lasso(X, y, lam, *, beta0=None, tol=LASSO_TOL, max_iter=LASSO_MAX_ITER):
    """Minimize (1/(2n)) ||y - X b||^2 + lam ||b||_1 by coordinate descent."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    G = X.T @ X / n
    c = X.T @ y / n
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    it = _cd_inplace(G, c, float(lam), beta, tol, max_iter)
    if it < 0:
        raise SolverError(f"lasso did not converge in {max_iter} sweeps", max_iter)
    return beta


def lasso_gram_batch(G, C, lam, B0=None, *, tol=LASSO_TOL, max_iter=LASSO_MAX_ITER):
    """Solve one lasso per row of C = Y X / n sharing the Gram matrix G = X'X / n."""
    C = np.ascontiguousarray(C, dtype=float)
    B0 = np.zeros_like(C) if B0 is None else np.ascontiguousarray(B0, dtype=float)
    out, status = _cd_batch(np.ascontiguousarray(G), C, float(lam), B0, tol, max_iter)
    if np.any(status < 0):
        raise SolverError(f"lasso did not converge in {max_iter} sweeps", max_iter)
    return out


def lasso_path(X, y, lams, *, tol=LASSO_TOL, max_iter=LASSO_MAX_ITER):
    """Coefficients along a decreasing lambda sequence with warm starts; shape (L, p)."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    lams = np.asarray(lams, dtype=float)
    if lams.size == 0:
        return np.zeros((0, p))
    if np.any(np.diff(lams) > 0):
        raise ValueError("lambda sequence must be decreasing")
    G = X.T @ X / n
    c = X.T @ np.asarray(y, float) / n
    out, ok = _path_on_grid(G, c, lams, min(n, p), True, tol, max_iter)
    if ok < 0:
        raise SolverError(f"lasso did not converge in {max_iter} sweeps", max_iter)
    return out


def log_lambda_grid(lam_max, n_lambda=50, ratio=1e-3):
    """``n_lambda`` log-spaced values from ``lam_max`` down to ``ratio * lam_max``."""
    return lam_max * np.logspace(0.0, np.log10(ratio), int(n_lambda))


# ---------------------------------------------------------------------------
# Lasso tuned by cross-validation
# ---------------------------------------------------------------------------


def make_folds(n, n_folds=10, rng=None):
    """Balanced fold labels 0..n_folds-1 in random order."""
    if n_folds < 2 or n_folds > n:
        raise ValueError(f"need 2 <= n_folds <= n, got {n_folds} with n={n}")
    from .rng import FOLDS, as_generator

    labels = np.arange(n) % n_folds
    return as_generator(rng, FOLDS).permutation(labels)


@njit(cache=True)
def _cv_select(X, y, Gs, train_masks, n_train, lams, tol, max_iter):
    """Held-out squared error along the grid, summed over folds; -1 status on failure."""
    K = Gs.shape[0]
    n, p = X.shape
    L = lams.size
    err = np.zeros(L)
    for f in range(K):
        c = np.zeros(p)
        for i in range(n):
            if train_masks[f, i]:
                for j in range(p):
                    c[j] += X[i, j] * y[i]
        c /= n_train[f]
        path, ok = _path_on_grid(Gs[f], c, lams, min(int(n_train[f]), p), False, tol, max_iter)
        if ok < 0:
            return err, -1
        for k in range(L):
            b = path[k]
            for i in range(n):
                if not train_masks[f, i]:
                    r = y[i]
                    for j in range(p):
                        if b[j] != 0.0:
                            r -= X[i, j] * b[j]
                    err[k] += r * r
    return err, 0


class CVFit:
    __slots__ = ("lam", "beta", "cv_error", "lambdas")

    def __init__(self, lam, beta, cv_error, lambdas):
        self.lam, self.beta, self.cv_error, self.lambdas = lam, beta, cv_error, lambdas


def _fold_grams(X, folds):
    folds = np.asarray(folds, dtype=int)
    labels = np.arange(folds.max() + 1)
    masks = np.stack([folds != f for f in labels])
    n_train = masks.sum(axis=1).astype(float)
    if folds.min() < 0 or np.any(n_train == X.shape[0]):
        raise ValueError("fold labels must be 0..K-1 and no fold may have zero rows")
    if labels.size < 2:
        raise ValueError("need at least two folds")
    Gs = np.stack([X[m].T @ X[m] / m.sum() for m in masks])
    return Gs, masks, n_train


def solve_lasso_cv(X, y, fold_assignment, lambda_grid=None, *, n_lambda=50, ratio=0.01,
                   tol=LASSO_TOL, max_iter=LASSO_MAX_ITER, _grams=None) -> CVFit:
    """Choose lambda by K-fold CV (minimum mean held-out error), then refit on all rows.

    Ties go to the larger lambda.  Without an explicit grid, ``n_lambda``
    log-spaced values from the data's lambda_max down to ``ratio * lambda_max``
    are used, as glmnet does.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if np.asarray(fold_assignment).shape != (n,):
        raise ValueError("fold_assignment must label every row")
    if lambda_grid is None:
        lams = log_lambda_grid(lasso_lambda_max(X, y), n_lambda, ratio)
    else:
        lams = np.unique(np.asarray(lambda_grid, dtype=float))[::-1]
        if lams.size == 0:
            raise ValueError("lambda grid is empty")
        if lams[-1] < 0:
            raise ValueError("lambda grid has negative entries")
    Gs, masks, n_train = _grams if _grams is not None else _fold_grams(X, fold_assignment)
    err, status = _cv_select(X, y, Gs, masks, n_train, lams, tol, max_iter)
    if status < 0:
        raise SolverError("lasso did not converge inside cross-validation", max_iter)
    err = err / n
    # first index attaining the minimum is the largest lambda (grid is decreasing)
    k = int(np.flatnonzero(err <= err.min())[0])
    path = lasso_path(X, y, lams[: k + 1], tol=tol, max_iter=max_iter)
    return CVFit(float(lams[k]), path[-1], err, lams)


# ---------------------------------------------------------------------------
# Forward stepwise
# ---------------------------------------------------------------------------


def forward_stepwise_path(X, y, kmax):
    """Greedy forward selection.

    At each step the unselected column with the largest |x_j' r| (r the
    current least-squares residual) enters; ties go to the lowest index.
    Returns ``(order, fits)`` where ``fits[k]`` is the k-step fitted vector.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if not 0 <= kmax <= min(n, p):
        raise ValueError(f"k must lie in [0, {min(n, p)}], got {kmax}")
    Q = np.empty((n, kmax))
    fits = np.zeros((kmax + 1, n))
    order = []
    excluded = np.zeros(p, dtype=bool)
    col_norms = np.linalg.norm(X, axis=0)
    fit = np.zeros(n)
    r = y.copy()
    k = 0
    while k < kmax:
        scores = np.abs(X.T @ r)
        scores[excluded] = -np.inf
        j = int(np.argmax(scores))
        if not np.isfinite(scores[j]):
            break
        v = X[:, j].copy()
        for _ in range(2):  # reorthogonalize once for stability
            v -= Q[:, :k] @ (Q[:, :k].T @ v)
        nv = np.linalg.norm(v)
        excluded[j] = True
        if nv <= 1e-10 * max(col_norms[j], 1e-300):
            warnings.warn(f"column {j} is collinear with the selected set; skipped",
                          RuntimeWarning, stacklevel=2)
            continue
        Q[:, k] = v / nv
        fit = fit + Q[:, k] * (Q[:, k] @ y)
        r = y - fit
        order.append(j)
        k += 1
        fits[k] = fit
    if k < kmax:
        fits[k + 1:] = fit
    return np.array(order, dtype=int), fits


def solve_forward_stepwise(X, y, k):
    """Coefficients of the k-step forward stepwise model (least squares on the selected set)."""
    X = np.asarray(X, dtype=float)
    order, _ = forward_stepwise_path(X, y, k)
    beta = np.zeros(X.shape[1])
    if order.size:
        beta[order] = np.linalg.lstsq(X[:, order], y, rcond=None)[0]
    return beta


# ---------------------------------------------------------------------------
# 1-D fused lasso (total variation denoising) by dynamic programming
# ---------------------------------------------------------------------------


@njit(cache=True)
def _tv1d_dp(y, lam):
    # Exact O(n) dynamic program: the derivative of each partial objective is
    # piecewise linear; knots are stored in x with slope/intercept increments
    # in a, b, and the back-pointers tm/tp clip each coordinate to its successor.
    n = y.size
    beta = np.empty(n)
    if n == 1 or lam == 0.0:
        beta[:] = y
        return beta
    x = np.empty(2 * n)
    a = np.empty(2 * n)
    b = np.empty(2 * n)
    tm = np.empty(n - 1)
    tp = np.empty(n - 1)

    tm[0] = -lam + y[0]
    tp[0] = lam + y[0]
    l = n - 1
    r = n
    x[l] = tm[0]
    x[r] = tp[0]
    a[l] = 1.0
    b[l] = -y[0] + lam
    a[r] = -1.0
    b[r] = y[0] + lam
    afirst = 1.0
    bfirst = -lam - y[1]
    alast = -1.0
    blast = -lam + y[1]

    for k in range(1, n - 1):
        alo = afirst
        blo = bfirst
        lo = l
        while lo <= r:
            if alo * x[lo] + blo > -lam:
                break
            alo += a[lo]
            blo += b[lo]
            lo += 1
        ahi = alast
        bhi = blast
        hi = r
        while hi >= lo:
            if -ahi * x[hi] - bhi < lam:
                break
            ahi += a[hi]
            bhi += b[hi]
            hi -= 1
        tm[k] = (-lam - blo) / alo
        l = lo - 1
        x[l] = tm[k]
        tp[k] = (lam + bhi) / (-ahi)
        r = hi + 1
        x[r] = tp[k]
        a[l] = alo
        b[l] = blo + lam
        a[r] = ahi
        b[r] = bhi + lam
        afirst = 1.0
        bfirst = -lam - y[k + 1]
        alast = -1.0
        blast = -lam + y[k + 1]

    alo = afirst
    blo = bfirst
    lo = l
    while lo <= r:
        if alo * x[lo] + blo > 0.0:
            break
        alo += a[lo]
        blo += b[lo]
        lo += 1
    beta[n - 1] = -blo / alo
    for k in range(n - 2, -1, -1):
        if beta[k + 1] > tp[k]:
            beta[k] = tp[k]
        elif beta[k + 1] < tm[k]:
            beta[k] = tm[k]
        else:
            beta[k] = beta[k + 1]
    return beta


@njit(cache=True)
def _tv1d_batch(Y, lam):
    out = np.empty_like(Y)
    for i in range(Y.shape[0]):
        out[i] = _tv1d_dp(Y[i], lam)
    return out


def solve_fused_lasso_1d(y, lam):
    """Exact minimizer of 0.5 ||y - t||^2 + lam * sum |t_{i+1} - t_i|."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim == 2:
        return _tv1d_batch(y, float(lam))
    if y.size == 0:
        return y.copy()
    return _tv1d_dp(y, float(lam))


def fused_groups(fit, tol=1e-9) -> int:
    """Number of maximal constant runs in a piecewise-constant fit."""
    fit = np.asarray(fit, dtype=float)
    if fit.size == 0:
        return 0
    scale = max(1.0, float(np.max(np.abs(fit))))
    return 1 + int(np.count_nonzero(np.abs(np.diff(fit)) > tol * scale))


def fused_lasso_objective(y, theta, lam) -> float:
    y = np.asarray(y, float)
    theta = np.asarray(theta, float)
    return 0.5 * float(np.sum((y - theta) ** 2)) + lam * float(np.sum(np.abs(np.diff(theta))))
