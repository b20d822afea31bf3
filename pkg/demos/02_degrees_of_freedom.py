"""
Degrees of freedom along a lasso path
=====================================

CB gives an unbiased estimate of df_alpha, the degrees of freedom at the
elevated noise level.  Ye's bootstrap df uses the same draws.  For the lasso
the divergence of the fit equals the size of its active set, so the average
support size is a third, noise-free reference.

Run:  python3 demos/02_degrees_of_freedom.py
"""

from riskest import harness

cfg = harness.ExperimentConfig(n=60, p=120, s=5, snr=2.0, B=50, reps=40, df_alpha=0.1, path_n_lambda=12,
                               oracle_R=2000, stepwise_kmax=12, seed=3)
res = harness.run_df_figure(cfg)

rows = {}
for r in res.tables["summary"]:
    rows.setdefault((r["path"], r["point"]), {})[r["estimator"]] = r

for path in ("lasso", "forward_stepwise"):
    print(f"\n{path}")
    print(f"{'point':30s} {'support':>7s} {'cb_df':>7s} {'ye_df':>7s} {'MC df_a':>7s}")
    for (p, point), est in rows.items():
        if p != path:
            continue
        cb, ye = est["cb_df"], est["ye_df"]
        print(f"{point:30s} {cb['mean_support']:7.2f} {cb['mean']:7.2f} {ye['mean']:7.2f} {cb['mc_df_alpha']:7.2f}")

# Stepwise df exceeds the step count k: the greedy search spends extra
# degrees of freedom choosing which variable enters.
