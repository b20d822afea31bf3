"""
Choosing the fused lasso penalty
================================

A piecewise-constant signal of length 256 with four levels is observed in
Gaussian noise.  For each penalty on a grid we compute SURE, which is exact
for the fused lasso since its divergence is the number of fused groups, and
the CB curve at several alpha.  Each curve picks a penalty; we compare the
true risk of the picks.

Run:  python3 demos/03_denoising.py
"""

from riskest import harness

cfg = harness.load_config(harness.bundled_config("denoise"), ["reps=10", "B=50", "oracle.R=500"])
res = harness.run_denoise(cfg)
print(f"sigma^2 = {res.info['sigma2']:.3f}")
print(f"best risk on the grid = {res.tables['summary'][0]['best_oracle_risk']:.2f}\n")
print(f"{'curve':8s} {'median lambda':>13s} {'risk of pick':>12s} {'ratio to SURE':>13s}")
for row in res.tables["summary"]:
    print(f"{row['estimator']:8s} {row['median_lambda']:13.3f} {row['mean_selected_risk']:12.2f} "
          f"{row['ratio_to_sure']:13.3f}")

# CB curves estimate Risk_alpha rather than Risk, yet their minimizers land
# near SURE's: raising the noise level moves the curve more than its argmin.
