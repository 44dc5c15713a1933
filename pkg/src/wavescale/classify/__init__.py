"""Classifiers, model selection, PCA baseline and accuracy curves."""

from .evaluate import EvalReport, RepeatResult, best_report, evaluate_repeats, feature_curve, pca_curve, repeat_splits
from .models import FAMILIES, ModelSpec, SingularCovarianceError, fit, make_model, predict
from .pca import PcaProjection, pca_fit, pca_inverse, pca_transform
from .selection import (
    child_seed,
    hyperparam_search,
    kfold_cv,
    seed_label,
    sample_specs,
    standardize_train_test,
    stratified_folds,
    stratified_split,
)

__all__ = [
    "EvalReport", "RepeatResult", "best_report", "evaluate_repeats", "feature_curve", "pca_curve",
    "repeat_splits", "FAMILIES", "ModelSpec", "SingularCovarianceError", "fit", "make_model", "predict",
    "PcaProjection", "pca_fit", "pca_inverse", "pca_transform", "child_seed", "hyperparam_search",
    "kfold_cv", "seed_label", "sample_specs", "standardize_train_test", "stratified_folds", "stratified_split",
]
