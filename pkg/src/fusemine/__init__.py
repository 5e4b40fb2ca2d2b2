"""Multi-source data fusion and white-box classification pipeline."""

from .ensemble import FusionConfig, VoteModel, run_approach, vote_predict, weight_search
from .evaluation import (
    EvaluationReport,
    accuracy,
    auc_weighted,
    cross_validate,
    run_experiment_grid,
    stratified_kfold,
)
from .learners import predict, predict_label, render_rules, train
from .preprocess import PreprocessConfig, preprocess_bundle
from .selection import cfs_merit, select_best_attributes, symmetrical_uncertainty
from .synth import CohortSpec, default_ruleset, generate
from .tabular import AttributeSpec, DataTable, SourceBundle, join_on_id, load_csv, save_csv

__version__ = "0.1.0"

__all__ = [
    "AttributeSpec",
    "CohortSpec",
    "DataTable",
    "EvaluationReport",
    "FusionConfig",
    "PreprocessConfig",
    "SourceBundle",
    "VoteModel",
    "accuracy",
    "auc_weighted",
    "cfs_merit",
    "cross_validate",
    "default_ruleset",
    "generate",
    "join_on_id",
    "load_csv",
    "predict",
    "predict_label",
    "preprocess_bundle",
    "render_rules",
    "run_approach",
    "run_experiment_grid",
    "save_csv",
    "select_best_attributes",
    "stratified_kfold",
    "symmetrical_uncertainty",
    "train",
    "vote_predict",
    "weight_search",
]
