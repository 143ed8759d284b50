"""Bayesian crowd regression with active learning and Robust-UCB annotator selection."""

from ._core import (
    BanditState,
    CrowdDataset,
    PaymentScheme,
    PrecisionPosterior,
    WeightPosterior,
    det_shrinkage,
    error_contraction_bounds,
    fit_centers,
    fit_variational,
    instance_score,
    normalize,
    optimal_effort,
    payment,
    predictive,
    regret_bound,
    rmse,
    run_experiment,
    run_fit,
    select_instance,
    transform,
    truncated_mean,
    truncation_threshold,
)

__all__ = [
    "BanditState",
    "CrowdDataset",
    "PaymentScheme",
    "PrecisionPosterior",
    "WeightPosterior",
    "det_shrinkage",
    "error_contraction_bounds",
    "fit_centers",
    "fit_variational",
    "instance_score",
    "normalize",
    "optimal_effort",
    "payment",
    "predictive",
    "regret_bound",
    "rmse",
    "run_experiment",
    "run_fit",
    "select_instance",
    "transform",
    "truncated_mean",
    "truncation_threshold",
]
