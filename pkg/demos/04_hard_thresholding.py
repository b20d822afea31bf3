"""
Hard thresholding: where SURE breaks
====================================

Hard thresholding jumps at +-t, so it is not weakly differentiable and
SURE with the almost-everywhere divergence #{|y_i| > t} is biased.  The
Stein check below compares the covariance form of df with the mean
divergence.  CB needs no derivative; its small-alpha limit is given in
closed form and can be compared with the naive divergence.

Run:  python3 demos/04_hard_thresholding.py
"""

import numpy as np

from riskest import analysis
from riskest.gaussian_model import NormalModel, sample_data
from riskest.predictors import HardThreshold, SoftThreshold
from riskest.risk_estimators import sure
from riskest.rng import RngSeed

model = NormalModel(np.full(10, 1.0), 1.0)  # means sitting on the threshold

for g in (SoftThreshold(t=1.0), HardThreshold(t=1.0)):
    sc = analysis.stein_formula_check(model, g, 100_000, RngSeed(1))
    print(f"{g.describe():28s} cov df = {sc.covariance_df:6.3f}   mean divergence = {sc.divergence_mean:6.3f}"
          f"   residual = {sc.residual:6.3f} +- {sc.std_error:.3f}")

# The expected inner product in the CB estimate has a closed form for hard
# thresholding.  For fixed y it tends to 2 sigma^2 #{|y_i| > t}, the term SURE
# uses, so CB at a tiny alpha inherits SURE's bias.  At moderate alpha the
# noise added to y crosses the threshold and the jumps are counted.
y = sample_data(model, RngSeed(2))
print("\ny =", np.round(y, 3))
print(f"2 sigma^2 #(|y| > t) = {analysis.ht_divergence_limit(y, 1.0, 1.0):.3f}")
for a in (1.0, 0.1, 0.01, 1e-4, 1e-8):
    print(f"alpha = {a:<7g} closed form = {analysis.ht_inner_product_exact(y, 1.0, 1.0, a):8.3f}")

g = HardThreshold(t=1.0)
risk = analysis.mc_risk(model, g, 0.0, 100_000, RngSeed(3))
sures = [sure(sample_data(model, RngSeed(4).child(r)), g, 1.0).value for r in range(5000)]
print(f"\nRisk = {risk.value:.3f} +- {risk.std_error:.3f};  mean SURE = {np.mean(sures):.3f} "
      f"+- {np.std(sures) / np.sqrt(len(sures)):.3f}")
