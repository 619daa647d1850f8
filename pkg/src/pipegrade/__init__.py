"""pipegrade: condition-rating toolkit for wastewater pipe segments.

Pipeline: CSV ingest and cleaning -> ordinal rank encoding -> normality
screening -> KNN classification with a K sweep (plus a Naive Bayes
baseline) -> multiclass evaluation reporting. See the CLI (``pipegrade``)
for the end-to-end driver.
"""

from ._kernels import active_name as kernel_backend
from .baselines import NbModel, nb_fit, nb_posteriors, nb_predict
from .encoding import (
    EncodedDataset,
    EncodingError,
    FactorSchema,
    FeatureVector,
    default_schema,
    encode,
    encode_dataset,
    load_schema,
    project,
)
from .ingest import CleaningReport, CleaningRules, PipeRecord, clean, load_records
from .knn import KnnModel, SplitSpec, distance, fit, misclassification, predict, split, sweep_k
from .metrics import (
    ClassScores,
    ConfusionMatrix,
    class_scores,
    confusion,
    overall_accuracy,
    report,
)
from .screening import ScreeningReport, screen, shapiro_wilk, sw_coefficients
from .synthgen import DistSpec, GenSpec, PlantedRule, generate

__version__ = "0.1.0"

__all__ = [
    "CleaningReport",
    "CleaningRules",
    "ClassScores",
    "ConfusionMatrix",
    "DistSpec",
    "EncodedDataset",
    "EncodingError",
    "FactorSchema",
    "FeatureVector",
    "GenSpec",
    "KnnModel",
    "NbModel",
    "PipeRecord",
    "PlantedRule",
    "ScreeningReport",
    "SplitSpec",
    "clean",
    "class_scores",
    "confusion",
    "default_schema",
    "distance",
    "encode",
    "encode_dataset",
    "fit",
    "generate",
    "kernel_backend",
    "load_records",
    "load_schema",
    "misclassification",
    "nb_fit",
    "nb_posteriors",
    "nb_predict",
    "overall_accuracy",
    "predict",
    "project",
    "report",
    "screen",
    "shapiro_wilk",
    "split",
    "sw_coefficients",
    "sweep_k",
]
