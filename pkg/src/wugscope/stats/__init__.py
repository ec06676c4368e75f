"""Correlation tests, special functions and the mixed-effects frequency analysis."""

from .correlation import pearson, spearman
from .mixed import (
    MixedModelFit,
    ObservationSet,
    aic_log_odds,
    compare_models,
    fit_mixed,
    fit_mixed_null,
    likelihood_ratio_test,
)
from .observations import Exclusions, FormScore, build_observations
from .special import betainc, chi2_sf, gammainc, gammaincc, t_two_sided

__all__ = [
    "Exclusions", "FormScore", "MixedModelFit", "ObservationSet", "aic_log_odds",
    "betainc", "build_observations", "chi2_sf", "compare_models", "fit_mixed",
    "fit_mixed_null", "gammainc", "gammaincc", "likelihood_ratio_test", "pearson",
    "spearman", "t_two_sided",
]
