"""Simulation experiments: CB versus BY, df paths, denoising, bias/variance studies.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding the per-repetition rows plus summary
tables; :func:`write_result` turns that into CSV files and a JSON sidecar.
Every random quantity is keyed by (seed, stream, indices), so output does
not depend on the thread count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import analysis, solvers
from .gaussian_model import CoupledDrawSet, NormalModel, make_coupled_draws, sample_elevated
from .predictors import (DesignContext, FusedLasso1D, Lasso, Predictor, SolverError,
                         parse_predictor_spec)
from .risk_estimators import by_risk, cb_df, cb_per_draw, sure, ye_df
from .rng import BOOT, DATA, FOLDS, ORACLE, SCENARIO, RngSeed

FIGURE1_PREDICTORS = ("ridge:lam=5", "lasso:lam=0.31", "forward_stepwise:k=2", "lasso_cv")
PAPER_ALPHAS = (0.05, 0.1, 0.2, 0.5, 0.8, 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "figure1"
    n: int = 100
    p: int = 200
    s: int = 5
    snr: float = 0.4
    B: int = 100
    alphas: tuple = PAPER_ALPHAS
    reps: int = 100
    seed: int = 0
    predictors: tuple = FIGURE1_PREDICTORS
    scale_factor: float = 1.0
    oracle_R: int = 100_000
    draws: str = "shared"  # or "independent": BY gets its own omega draws
    cv_folds: int = 10
    cv_n_lambda: int = 50
    cv_ratio: float = 0.01
    threads: int = 1
    # df paths
    df_alpha: float = 0.1
    path_n_lambda: int = 50
    path_ratio: float = 1e-3
    stepwise_kmax: int = 0  # 0 means min(n, p) - 1
    # denoising
    denoise_length: int = 256
    denoise_levels: tuple = (0.0, 4.0, 2.0, 6.0)
    denoise_snr: float = 4.0
    denoise_alphas: tuple = (0.05, 0.1, 0.2, 0.5)
    denoise_n_lambda: int = 30
    denoise_lambda_min: float = 0.05
    denoise_lambda_max: float = 50.0
    # appendix F
    bias_ks: tuple = (3, 10, 90)
    bias_R: int = 2000
    rvar_lam: float = 0.31
    rvar_Bs: tuple = (10, 20, 50, 100, 200)
    rvar_R: int = 100
    ivar_predictor: str = "lasso_cv"
    ivar_s: int = 200
    ivar_snr: float = 2.0
    ivar_R: int = 200
    ivar_B_inner: int = 40

    def __post_init__(self):
        for name in ("alphas", "predictors", "denoise_levels", "denoise_alphas", "bias_ks", "rvar_Bs"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not 0 < self.scale_factor:
            raise ValueError("scale_factor must be positive")
        if self.s > self.p:
            raise ValueError(f"s = {self.s} exceeds p = {self.p}")
        if any(not a > 0 for a in self.alphas):
            raise ValueError("all alphas must be positive")
        if self.reps < 2:
            raise ValueError("reps must be at least 2")
        if self.draws not in ("shared", "independent"):
            raise ValueError("draws must be 'shared' or 'independent'")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    def scaled(self) -> "ExperimentConfig":
        """Apply ``scale_factor`` to n, p, s and reps (s is kept at most p)."""
        if self.scale_factor == 1.0:
            return self
        f = self.scale_factor
        n = max(2, round(self.n * f))
        p = max(1, round(self.p * f))
        s = min(self.s, p) if self.s < self.p else p
        return replace(self, n=n, p=p, s=s, reps=max(2, round(self.reps * f)), scale_factor=1.0)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in fields(self)}

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("threads")  # wall time only
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Config files: "key = value" lines, '#' comments, dotted keys for sections
# ---------------------------------------------------------------------------

_LIST_SEP = {"predictors": ";"}


def _coerce(name: str, text: str):
    f = {f.name: f for f in fields(ExperimentConfig)}.get(name)
    if f is None:
        raise KeyError(f"unknown config key {name!r}")
    default = getattr(ExperimentConfig(), name)
    text = text.strip()
    if isinstance(default, tuple):
        sep = _LIST_SEP.get(name, ",")
        items = [t.strip() for t in text.split(sep) if t.strip()]
        if name == "predictors":
            return tuple(items)
        conv = int if default and isinstance(default[0], int) else float
        return tuple(conv(t) for t in items)
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(float(text)) if "e" in text.lower() else int(text)
    if isinstance(default, float):
        return float(text)
    return text


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        name = key.strip().replace(".", "_")
        out[name] = _coerce(name, val)
    return out


def load_config(path=None, overrides=(), **kw) -> ExperimentConfig:
    """Read a config file, then apply ``key=value`` overrides and keyword arguments."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_config_text(fh.read()))
    for item in overrides:
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"override {item!r} is not key=value")
        name = key.strip().replace(".", "_")
        values[name] = _coerce(name, val)
    values.update(kw)
    return ExperimentConfig(**values)


def bundled_config(name: str) -> str:
    """Path of a config shipped with the package (e.g. ``"figure1.desk"``)."""
    here = os.path.join(os.path.dirname(__file__), "configs")
    path = os.path.join(here, name if name.endswith(".desk") else name + ".desk")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no bundled config named {name!r}")
    return path


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScenarioTruth:
    X: np.ndarray
    beta: np.ndarray
    sigma2: float
    theta: np.ndarray

    @property
    def model(self) -> NormalModel:
        return NormalModel(self.theta, self.sigma2)

    @property
    def design(self) -> DesignContext:
        return DesignContext(self.X, self.beta)


def build_scenario(cfg: ExperimentConfig, rng=None) -> ScenarioTruth:
    """Gaussian design, s nonzero Unif(-1, 1) coefficients in the first s slots, sigma2 from SNR."""
    if cfg.s < 1:
        raise ValueError("s = 0 gives zero signal, so the SNR cannot fix sigma2")
    seed = RngSeed(cfg.seed) if rng is None else rng
    gen = seed.generator(SCENARIO) if isinstance(seed, RngSeed) else np.random.default_rng(seed)
    X = gen.standard_normal((cfg.n, cfg.p))
    beta = np.zeros(cfg.p)
    beta[: cfg.s] = gen.uniform(-1.0, 1.0, cfg.s)
    theta = X @ beta
    v = theta.var()  # empirical variance over the n entries
    if not v > 0:
        raise ValueError("signal has zero empirical variance")
    return ScenarioTruth(X, beta, float(v / cfg.snr), theta)


def experiment_folds(cfg: ExperimentConfig) -> np.ndarray:
    return solvers.make_folds(cfg.n, cfg.cv_folds, RngSeed(cfg.seed).generator(FOLDS))


def make_predictors(cfg: ExperimentConfig, truth: ScenarioTruth, specs=None) -> list[Predictor]:
    folds = experiment_folds(cfg) if cfg.n >= cfg.cv_folds else None
    out = []
    for spec in cfg.predictors if specs is None else specs:
        g = parse_predictor_spec(spec, truth.design, folds=folds)
        if g.kind == "lasso_cv":
            g = replace(g, n_lambda=cfg.cv_n_lambda, ratio=cfg.cv_ratio)
        out.append(g)
    return out


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    predictor: str
    estimator: str
    alpha: float
    rep: int
    estimate: float
    oracle_risk: float
    oracle_risk_alpha: float
    draw_checksum: str = ""


@dataclass
class ExperimentResult:
    name: str
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    info: dict = field(default_factory=dict)


def _map_ordered(fn, items, threads):
    """Apply ``fn`` to items on a pool; results come back in input order."""
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _fmt(v):
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_result(result: ExperimentResult, out_dir) -> list[str]:
    """Write ``<name>.csv`` (rows), ``<name>_<table>.csv`` and ``<name>.json``; return the paths."""
    os.makedirs(out_dir, exist_ok=True)
    h = result.config.config_hash()
    paths = []
    if result.rows or not result.tables:
        path = os.path.join(out_dir, f"{result.name}.csv")
        header = [f.name for f in fields(ResultRow)] + ["config_hash"]
        _write_csv(path, header, ([getattr(r, k) for k in header[:-1]] + [h] for r in result.rows))
        paths.append(path)
    for tname, trows in result.tables.items():
        path = os.path.join(out_dir, f"{result.name}_{tname}.csv")
        header = list(trows[0].keys()) if trows else []
        _write_csv(path, header + ["config_hash"], ([r[k] for k in header] + [h] for r in trows))
        paths.append(path)
    side = os.path.join(out_dir, f"{result.name}.json")
    with open(side, "w") as fh:
        json.dump({"experiment": result.name, "config_hash": h, "config": result.config.to_dict(),
                   "failures": result.failures, "info": result.info}, fh, indent=2, sort_keys=True,
                  default=float)
        fh.write("\n")
    paths.append(side)
    return paths


# ---------------------------------------------------------------------------
# CB versus BY (figures 1 and 2)
# ---------------------------------------------------------------------------


def _oracles(cfg, model, g, j):
    seed = RngSeed(cfg.seed).child(ORACLE, j)
    base = analysis.mc_risk(model, g, 0.0, cfg.oracle_R, seed)
    elev = [analysis.mc_risk(model, g, a, cfg.oracle_R, seed) for a in cfg.alphas]
    return base, elev


def _cb_by_rows(cfg, scenario_id, truth, preds):
    model = truth.model
    seed = RngSeed(cfg.seed)
    oracles = [_oracles(cfg, model, g, j) for j, g in enumerate(preds)]

    def one_rep(r):
        y = sample_elevated(model, 0.0, seed.generator(DATA, r))
        rows, fails = [], []
        for j, g in enumerate(preds):
            base, elev = oracles[j]
            for i, a in enumerate(cfg.alphas):
                d = make_coupled_draws(y, model.sigma2, a, cfg.B, seed.generator(BOOT, r, i))
                if cfg.draws == "shared":
                    d_by = d
                else:
                    d_by = make_coupled_draws(y, model.sigma2, a, cfg.B, seed.generator(BOOT, r, i, 1))
                try:
                    G = g.predict_many(d.ystar)
                    cb = float(cb_per_draw(d, g, model.sigma2, fitted=G).mean())
                    Gby = G if d_by is d else g.predict_many(d_by.ystar)
                    by = by_risk(y, g, model.sigma2, a, d_by, fitted=Gby).value
                except SolverError as exc:
                    fails.append({"rep": r, "predictor": g.describe(), "alpha": a, "error": str(exc)})
                    continue
                for est, val, dd in (("CB", cb, d), ("BY", by, d_by)):
                    rows.append(ResultRow(scenario_id, g.describe(), est, float(a), r, float(val),
                                          base.value, elev[i].value, dd.checksum()))
        return rows, fails

    out = _map_ordered(one_rep, range(cfg.reps), cfg.threads)
    rows = [row for rr, _ in out for row in rr]
    fails = [f for _, ff in out for f in ff]
    summary = _summarize(rows, oracles, preds, cfg)
    return rows, fails, summary


def _summarize(rows, oracles, preds, cfg):
    table = []
    for j, g in enumerate(preds):
        base, elev = oracles[j]
        for i, a in enumerate(cfg.alphas):
            for est in ("CB", "BY"):
                v = np.array([r.estimate for r in rows
                              if r.predictor == g.describe() and r.estimator == est and r.alpha == a])
                if v.size < 2:
                    continue
                m, sd = v.mean(), v.std(ddof=1)
                se = sd / np.sqrt(v.size)
                table.append({
                    "predictor": g.describe(), "estimator": est, "alpha": float(a), "reps": int(v.size),
                    "mean": float(m), "sd": float(sd), "se": float(se),
                    "oracle_risk": base.value, "oracle_risk_se": base.std_error,
                    "oracle_risk_alpha": elev[i].value, "oracle_risk_alpha_se": elev[i].std_error,
                    "z_vs_risk": float((m - base.value) / np.hypot(se, base.std_error)),
                    "z_vs_risk_alpha": float((m - elev[i].value) / np.hypot(se, elev[i].std_error)),
                })
    return table


def run_figure1(cfg: ExperimentConfig) -> ExperimentResult:
    """CB and BY for each predictor and alpha, with Risk and Risk_alpha oracles."""
    cfg = cfg.scaled()
    truth = build_scenario(cfg)
    preds = make_predictors(cfg, truth)
    rows, fails, summary = _cb_by_rows(cfg, f"s{cfg.s}_snr{cfg.snr:g}", truth, preds)
    return ExperimentResult("figure1", cfg, rows, {"summary": summary}, fails,
                            {"sigma2": truth.sigma2, "n": cfg.n, "p": cfg.p})


def run_figure2(cfg: ExperimentConfig) -> ExperimentResult:
    """As :func:`run_figure1` for the CV-tuned lasso only; the summary carries per-alpha SDs."""
    cfg = cfg.scaled()
    if cfg.predictors != ("lasso_cv",):
        cfg = replace(cfg, predictors=("lasso_cv",))
    truth = build_scenario(cfg)
    preds = make_predictors(cfg, truth)
    rows, fails, summary = _cb_by_rows(cfg, f"s{cfg.s}_snr{cfg.snr:g}", truth, preds)
    return ExperimentResult("figure2", cfg, rows, {"summary": summary}, fails,
                            {"sigma2": truth.sigma2, "n": cfg.n, "p": cfg.p})


# ---------------------------------------------------------------------------
# Degrees of freedom along lasso and stepwise paths
# ---------------------------------------------------------------------------


def _lasso_path_fits(X, Y, lams):
    return np.stack([solvers.lasso_path(X, y, lams) @ X.T for y in Y], axis=1)  # (L, m, n)


def _stepwise_path_fits(X, Y, kmax):
    return np.stack([solvers.forward_stepwise_path(X, y, kmax)[1] for y in Y], axis=1)  # (K+1, m, n)


def _mc_path_df(model, fit_fn, alpha, R, seed):
    """df_alpha at every path point from R shared draws; returns values and SEs."""
    gen = seed.generator(ORACLE)
    E, F = [], []
    for m in analysis._chunks(int(R), 512):
        Y = sample_elevated(model, alpha, gen, size=m)
        E.append(Y - model.theta)
        F.append(fit_fn(Y))
    E = np.concatenate(E)
    F = np.concatenate(F, axis=1)
    R = E.shape[0]
    terms = np.einsum("ij,kij->ki", E, F - F.mean(axis=1, keepdims=True)) * (R / (R - 1))
    terms /= (1 + alpha) * model.sigma2
    return terms.mean(axis=1), terms.std(axis=1, ddof=1) / np.sqrt(R)


def run_df_figure(cfg: ExperimentConfig) -> ExperimentResult:
    """cb_df and ye_df along the lasso and forward stepwise paths, with Monte Carlo df."""
    cfg = cfg.scaled()
    truth = build_scenario(cfg)
    model = truth.model
    X = truth.X
    seed = RngSeed(cfg.seed)
    a = cfg.df_alpha
    pilot = sample_elevated(model, 0.0, seed.generator(SCENARIO, 1))
    lams = solvers.log_lambda_grid(solvers.lasso_lambda_max(X, pilot), cfg.path_n_lambda, cfg.path_ratio)
    kmax = cfg.stepwise_kmax or min(cfg.n, cfg.p) - 1
    paths = {
        "lasso": (lambda Y: _lasso_path_fits(X, Y, lams), [f"lasso:lam={l:.6g}" for l in lams]),
        "forward_stepwise": (lambda Y: _stepwise_path_fits(X, Y, kmax),
                             [f"forward_stepwise:k={k}" for k in range(kmax + 1)]),
    }
    oracle = {}
    for j, (name, (fn, _)) in enumerate(paths.items()):
        oracle[name] = (_mc_path_df(model, fn, 0.0, cfg.oracle_R, seed.child(ORACLE, j)),
                        _mc_path_df(model, fn, a, cfg.oracle_R, seed.child(ORACLE, j)))

    def one_rep(r):
        y = sample_elevated(model, 0.0, seed.generator(DATA, r))
        d = make_coupled_draws(y, model.sigma2, a, cfg.B, seed.generator(BOOT, r))
        rows, support = [], {}
        for name, (fn, labels) in paths.items():
            Fstar = fn(d.ystar)  # (P, B, n)
            Fy = fn(y[None, :])[:, 0]
            (df0, _), (dfa, _) = oracle[name]
            if name == "lasso":
                support[name] = np.count_nonzero(solvers.lasso_path(X, y, lams), axis=1)
            else:
                support[name] = np.arange(kmax + 1)
            for k, label in enumerate(labels):
                g = _FixedFits(Fstar[k], Fy[k])
                v_cb = cb_df(d, g, model.sigma2, a, fitted=Fstar[k]).value
                v_ye = ye_df(y, g, model.sigma2, a, d, fitted=Fstar[k]).value
                for est, v in (("cb_df", v_cb), ("ye_df", v_ye)):
                    rows.append(ResultRow(f"df_{name}", label, est, float(a), r, float(v),
                                          float(df0[k]), float(dfa[k]), d.checksum()))
        return rows, support

    out = _map_ordered(one_rep, range(cfg.reps), cfg.threads)
    rows = [row for rr, _ in out for row in rr]
    table = []
    for name, (_, labels) in paths.items():
        (df0, se0), (dfa, sea) = oracle[name]
        sizes = np.mean([s[name] for _, s in out], axis=0)
        for k, label in enumerate(labels):
            for est in ("cb_df", "ye_df"):
                v = np.array([row.estimate for row in rows
                              if row.predictor == label and row.estimator == est and row.scenario == f"df_{name}"])
                m, se = v.mean(), v.std(ddof=1) / np.sqrt(v.size)
                table.append({
                    "path": name, "point": label, "estimator": est, "mean_support": float(sizes[k]),
                    "mean": float(m), "se": float(se), "mc_df": float(df0[k]), "mc_df_se": float(se0[k]),
                    "mc_df_alpha": float(dfa[k]), "mc_df_alpha_se": float(sea[k]),
                    "within_4se": bool(abs(m - dfa[k]) <= 4 * np.hypot(se, sea[k])),
                })
    return ExperimentResult("df", cfg, rows, {"summary": table}, [], {"sigma2": truth.sigma2, "kmax": kmax})


@dataclass(frozen=True, eq=False)
class _FixedFits(Predictor):
    """Stand-in rule whose fits were computed elsewhere (one point of a path)."""

    star: np.ndarray = None
    at_y: np.ndarray = None
    kind = "path_point"

    def _predict_rows(self, Y):
        if Y.shape[0] == 1:
            return self.at_y[None, :]
        return self.star


# ---------------------------------------------------------------------------
# 1-D fused lasso denoising
# ---------------------------------------------------------------------------


def denoise_signal(length=256, levels=(0.0, 4.0, 2.0, 6.0)) -> np.ndarray:
    """Piecewise-constant test signal: equal-length segments at the given levels."""
    levels = np.asarray(levels, dtype=float)
    idx = np.minimum(np.arange(length) * levels.size // length, levels.size - 1)
    return levels[idx]


def run_denoise(cfg: ExperimentConfig) -> ExperimentResult:
    """SURE and CB_alpha curves over a lambda grid for the 1-D fused lasso.

    The summary table holds, per estimator, the mean oracle risk of the
    lambda it selects; the ``selection`` table has the per-repetition picks.
    """
    theta = denoise_signal(cfg.denoise_length, cfg.denoise_levels)
    sigma2 = float(theta.var() / cfg.denoise_snr)
    model = NormalModel(theta, sigma2)
    seed = RngSeed(cfg.seed)
    lams = np.geomspace(cfg.denoise_lambda_min, cfg.denoise_lambda_max, cfg.denoise_n_lambda)
    lams = np.concatenate([[0.0], lams])
    preds = [FusedLasso1D(lam=float(l)) for l in lams]
    alphas = cfg.denoise_alphas
    risk = []
    risk_a = []
    for j, g in enumerate(preds):
        s = seed.child(ORACLE, j)
        risk.append(analysis.mc_risk(model, g, 0.0, cfg.oracle_R, s))
        risk_a.append([analysis.mc_risk(model, g, a, cfg.oracle_R, s) for a in alphas])
    R0 = np.array([o.value for o in risk])

    def one_rep(r):
        y = sample_elevated(model, 0.0, seed.generator(DATA, r))
        rows = []
        sure_curve = np.array([sure(y, g, sigma2).value for g in preds])
        for j, g in enumerate(preds):
            rows.append(ResultRow("denoise", g.describe(), "SURE", 0.0, r, float(sure_curve[j]),
                                  risk[j].value, risk[j].value, ""))
        picks = {"SURE": int(np.argmin(sure_curve))}
        for i, a in enumerate(alphas):
            d = make_coupled_draws(y, sigma2, a, cfg.B, seed.generator(BOOT, r, i))
            curve = np.array([cb_per_draw(d, g, sigma2).mean() for g in preds])
            for j, g in enumerate(preds):
                rows.append(ResultRow("denoise", g.describe(), "CB", float(a), r, float(curve[j]),
                                      risk[j].value, risk_a[j][i].value, d.checksum()))
            picks[f"CB_{a:g}"] = int(np.argmin(curve))
        return rows, picks

    out = _map_ordered(one_rep, range(cfg.reps), cfg.threads)
    rows = [row for rr, _ in out for row in rr]
    selection = []
    for r, (_, picks) in enumerate(out):
        for est, j in picks.items():
            selection.append({"rep": r, "estimator": est, "lambda": float(lams[j]),
                              "oracle_risk": float(R0[j])})
    summary = []
    sure_mean = np.mean([R0[p["SURE"]] for _, p in out])
    for est in out[0][1]:
        sel = np.array([R0[p[est]] for _, p in out])
        summary.append({"estimator": est, "mean_selected_risk": float(sel.mean()),
                        "ratio_to_sure": float(sel.mean() / sure_mean),
                        "median_lambda": float(np.median([lams[p[est]] for _, p in out])),
                        "best_oracle_risk": float(R0.min())})
    curve_check = []
    for i, a in enumerate(alphas):
        for j, g in enumerate(preds):
            v = np.array([row.estimate for row in rows
                          if row.estimator == "CB" and row.alpha == a and row.predictor == g.describe()])
            m, se = v.mean(), v.std(ddof=1) / np.sqrt(v.size)
            o = risk_a[j][i]
            curve_check.append({"alpha": float(a), "lambda": float(lams[j]), "cb_mean": float(m),
                                "cb_se": float(se), "oracle_risk_alpha": o.value,
                                "oracle_se": o.std_error,
                                "z": float((m - o.value) / np.hypot(se, o.std_error))})
    return ExperimentResult("denoise", cfg, rows,
                            {"summary": summary, "selection": selection, "curves": curve_check}, [],
                            {"sigma2": sigma2, "lambdas": lams.tolist()})


# ---------------------------------------------------------------------------
# Bias bounds, reducible variance grid, irreducible variance components
# ---------------------------------------------------------------------------


def appendix_bias_table(cfg, truth) -> list[dict]:
    """Bias and its bounds for stepwise at each k in ``cfg.bias_ks``, sharing one path per draw."""
    model = truth.model
    X = truth.X
    ks = [k for k in cfg.bias_ks if k <= min(cfg.n, cfg.p)]
    kmax = max(ks)
    seed = RngSeed(cfg.seed).child(ORACLE, 100)

    def losses(alpha):
        gen = seed.generator(ORACLE)
        L = np.empty((len(ks), cfg.bias_R))
        i = 0
        for m in analysis._chunks(cfg.bias_R, 256):
            Y = sample_elevated(model, alpha, gen, size=m)
            F = _stepwise_path_fits(X, Y, kmax)[ks]
            L[:, i:i + m] = np.sum((model.theta - F) ** 2, axis=2)
            i += m
        return L

    L0 = losses(0.0)
    La = {a: losses(a) for a in cfg.alphas}
    table = []
    for u, k in enumerate(ks):
        bounds = [analysis.bias_bounds_from_losses(L0[u], La[a][u], model.n, a) for a in cfg.alphas]
        for row in analysis.premise_rows(bounds, L0[u]):
            table.append({"k": k, **row})
    return table


def appendix_rvar_table(cfg, truth) -> tuple[list[dict], dict]:
    """Measured CB reducible variance on the (B, alpha) grid next to its leading term."""
    model = truth.model
    g = Lasso(lam=cfg.rvar_lam, design=truth.design)
    seed = RngSeed(cfg.seed).child(ORACLE, 200)
    meas = analysis.measured_cb_rvar(model, g, cfg.alphas, cfg.rvar_Bs, cfg.rvar_R, seed)
    table = []
    for i, a in enumerate(cfg.alphas):
        for j, B in enumerate(cfg.rvar_Bs):
            lt = analysis.rvar_leading_terms(model, g, a, B, max(cfg.rvar_R, 1000), seed)
            table.append({"alpha": float(a), "B": int(B), "rvar": float(meas[i, j]),
                          "cb_leading_term": lt.cb_term, "by_leading_term": lt.by_term})
    x = np.log([1 / (r["B"] * r["alpha"]) for r in table])
    yv = np.log([r["rvar"] for r in table])
    slope, intercept = np.polyfit(x, yv, 1)
    return table, {"rvar_slope": float(slope), "rvar_intercept": float(intercept)}


def appendix_ivar_table(cfg) -> list[dict]:
    cfg2 = replace(cfg, s=min(cfg.ivar_s, cfg.p), snr=cfg.ivar_snr)
    truth = build_scenario(cfg2)
    g = make_predictors(cfg2, truth, [cfg.ivar_predictor])[0]
    model = truth.model
    table = []
    for i, a in enumerate(cfg.alphas):
        seed = RngSeed(cfg.seed).child(ORACLE, 300, i)
        oracle = (analysis.mc_risk(model, g, 0.0, cfg.oracle_R, RngSeed(cfg.seed).child(ORACLE, 301)),
                  analysis.mc_risk(model, g, a, cfg.oracle_R, RngSeed(cfg.seed).child(ORACLE, 301)))
        reps = analysis.bias_variance_reports(model, g, a, cfg.B, cfg.ivar_R, cfg.ivar_B_inner,
                                              ("CB", "BY"), seed, oracle=oracle)
        for rep in reps.values():
            table.append(asdict(rep))
    return table


def run_appendixF(cfg: ExperimentConfig) -> ExperimentResult:
    """Three tables: stepwise bias bounds, the CB reducible-variance grid, IVar components."""
    cfg = cfg.scaled()
    truth = build_scenario(cfg)
    bias = appendix_bias_table(cfg, truth)
    rvar, fit = appendix_rvar_table(cfg, truth)
    ivar = appendix_ivar_table(cfg)
    return ExperimentResult("appendixF", cfg, [], {"bias": bias, "rvar": rvar, "ivar": ivar}, [],
                            {"sigma2": truth.sigma2, **fit})


# ---------------------------------------------------------------------------
# Analysis tables on a normal-means problem
# ---------------------------------------------------------------------------


def analysis_theta(n: int) -> np.ndarray:
    """Mean vector for the analysis tables: evenly spaced on [-2, 2]."""
    return np.linspace(-2.0, 2.0, n)


def run_analyze(cfg: ExperimentConfig) -> ExperimentResult:
    """Stein's formula, optimism decomposition, bias bounds and the hard-threshold closed form.

    Uses the normal-means model theta = linspace(-2, 2, n), sigma2 = 1, with
    soft and hard thresholding at t = 1 and the smoother S = I/2.
    """
    from .predictors import HardThreshold, LinearSmoother, SoftThreshold

    n = cfg.n
    model = NormalModel(analysis_theta(n), 1.0)
    seed = RngSeed(cfg.seed)
    preds = {"soft_threshold:t=1": SoftThreshold(t=1.0), "hard_threshold:t=1": HardThreshold(t=1.0),
             "linear_smoother:S=I/2": LinearSmoother(0.5 * np.eye(n))}
    R = cfg.oracle_R
    stein = []
    for j, (name, g) in enumerate(preds.items()):
        sc = analysis.stein_formula_check(model, g, R, seed.child(ORACLE, 400, j))
        stein.append({"predictor": name, "covariance_df": sc.covariance_df,
                      "divergence_mean": sc.divergence_mean, "residual": sc.residual,
                      "std_error": sc.std_error, "within_4se": abs(sc.residual) <= 4 * sc.std_error})
    optimism = []
    for j, name in enumerate(("soft_threshold:t=1", "linear_smoother:S=I/2")):
        for i, a in enumerate(cfg.alphas):
            od = analysis.mc_optimism_decomposition(model, preds[name], a, max(cfg.reps, 2), max(cfg.B, 2),
                                                    seed.child(ORACLE, 500, j, i))
            optimism.append({"predictor": name, "alpha": float(a), "a_alpha": od.a_alpha,
                             "b_alpha": od.b_alpha, "total": od.total, "a_se": od.a_se, "b_se": od.b_se,
                             "closure_gap": od.closure_gap, "closure_se": od.closure_se,
                             "b_over_a": od.b_alpha / od.a_alpha if od.a_alpha else float("nan")})
    bias = []
    for j, name in enumerate(("soft_threshold:t=1", "hard_threshold:t=1")):
        for row in analysis.bias_bounds_grid(model, preds[name], sorted(cfg.alphas), R,
                                             seed.child(ORACLE, 600, j)):
            bias.append({"predictor": name, **row})
    ht = []
    gen = seed.generator(ORACLE, 700)
    for c in range(20):
        m = int(gen.integers(1, 6))
        y = gen.uniform(-3, 3, m)
        t, sig, a = float(gen.uniform(0.2, 2)), float(gen.uniform(0.5, 2)), float(gen.uniform(0.05, 1))
        exact = analysis.ht_inner_product_exact(y, t, sig, a)
        mc = analysis.ht_inner_product_mc(y, t, sig, a, R, seed.child(ORACLE, 701, c))
        ht.append({"config": c, "n": m, "t": t, "sigma": sig, "alpha": a, "exact": exact,
                   "mc": mc.value, "mc_se": mc.std_error,
                   "within_4se": abs(exact - mc.value) <= 4 * mc.std_error})
    return ExperimentResult("analyze", cfg, [],
                            {"stein": stein, "optimism": optimism, "bias_bounds": bias, "ht_closed_form": ht},
                            [], {"n": n, "sigma2": 1.0})


RUNNERS = {
    "analyze": run_analyze,
    "figure1": run_figure1,
    "figure2": run_figure2,
    "df": run_df_figure,
    "denoise": run_denoise,
    "appendixF": run_appendixF,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    try:
        runner = RUNNERS[cfg.experiment]
    except KeyError:
        raise ValueError(f"unknown experiment {cfg.experiment!r}; choose from {', '.join(RUNNERS)}") from None
    return runner(cfg)
