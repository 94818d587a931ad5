"""Forests, metrics and fold assignment used by the selection pipeline."""

from threadcred.learn.forest import ForestConfig, ForestModel, predict_proba, train_forest
from threadcred.learn.kernels import BACKEND
from threadcred.learn.metrics import (
    RocCurve,
    accuracy,
    chi2_p,
    chi2_test,
    confusion_table,
    roc_auc,
    roc_curve,
    stratified_kfold,
)

__all__ = [
    "BACKEND",
    "ForestConfig",
    "ForestModel",
    "RocCurve",
    "accuracy",
    "chi2_p",
    "chi2_test",
    "confusion_table",
    "predict_proba",
    "roc_auc",
    "roc_curve",
    "stratified_kfold",
    "train_forest",
]
