from .features import FeatureVector, extract_features, dataset_matrix
from .forest import (
    ForestModel,
    TrainConfig,
    TreeNode,
    check_leakage,
    predict,
    predict_dataset,
    predict_tree,
    record_identity,
    train_forest,
)
from .persist import load_model, save_model
from .single_llm import single_llm_run

__all__ = [
    "FeatureVector",
    "ForestModel",
    "TrainConfig",
    "TreeNode",
    "check_leakage",
    "dataset_matrix",
    "extract_features",
    "load_model",
    "predict",
    "predict_dataset",
    "predict_tree",
    "record_identity",
    "save_model",
    "single_llm_run",
    "train_forest",
]
