"""Semi-automatic ABC: priors, features, pilot regression and ABC-MCMC."""
from .features import EmptyPatternError, PatternSummary, feature_names, features, features_from, summarize
from .lasso import LassoFit, RankDeficientError, lasso_select, ols_fit
from .mcmc import AbcNonConvergence, PosteriorSamples, abc_mcmc, posterior_predictive, run_chains
from .pilot import PERCENTILES, PilotResult, distance, fit_regression, pilot_run
from .priors import (
    GAMMA_CLAMP,
    Beta,
    Gamma,
    ParamPrior,
    PriorSpec,
    Uniform,
    inverse_transform,
    parse_prior,
    to_transformed,
    transform_params,
)

__all__ = [
    "EmptyPatternError",
    "PatternSummary",
    "feature_names",
    "features",
    "features_from",
    "summarize",
    "LassoFit",
    "RankDeficientError",
    "lasso_select",
    "ols_fit",
    "AbcNonConvergence",
    "PosteriorSamples",
    "abc_mcmc",
    "posterior_predictive",
    "run_chains",
    "PERCENTILES",
    "PilotResult",
    "distance",
    "fit_regression",
    "pilot_run",
    "GAMMA_CLAMP",
    "Beta",
    "Gamma",
    "ParamPrior",
    "PriorSpec",
    "Uniform",
    "inverse_transform",
    "parse_prior",
    "to_transformed",
    "transform_params",
]
