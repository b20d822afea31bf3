"""Coupled bootstrap risk estimation for the Gaussian normal means problem."""

from .analysis import (BiasVarianceReport, OptimismDecomposition, OracleEstimate, bias_bounds,
                       bias_variance_report, by_inf, cb_inf, ht_divergence_limit, ht_inner_product_exact,
                       mc_df, mc_optimism_decomposition, mc_risk, risk_alpha_curve, rvar_leading_terms,
                       stein_formula_check)
from .gaussian_model import (CoupledDrawSet, FactorizationError, NormalModel, StructuredNormalModel,
                             make_coupled_draws, make_structured_coupled_draws, sample_data,
                             sample_elevated)
from .predictors import DesignContext, Predictor, divergence, make_predictor, predict
from .risk_estimators import (DfEstimate, RiskEstimate, bregman_three_point_check, by_risk, cb_df,
                              cb_risk, efron_risk, structured_cb_risk, sure, ye_df)
from .rng import RngSeed

__version__ = "0.1.0"
