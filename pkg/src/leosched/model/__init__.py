"""Offline scheduler approximation: cluster features, random forest, top-k evaluation."""

from .evaluate import baseline_topk, evaluate_topk, format_eval_csv
from .features import (
    ClusterKey,
    FeatureError,
    FeatureVector,
    LabeledSlot,
    cluster_assign,
    cohort_keys,
    dumps_labeled,
    featurize,
    featurize_all,
    loads_labeled,
    quantize,
    unwrap_azimuth,
    zscores,
)
from .forest import FeatureEncoding, RandomForestModel, TrainConfig, TrainingError, Tree, train

__all__ = [
    "ClusterKey",
    "FeatureEncoding",
    "FeatureError",
    "FeatureVector",
    "LabeledSlot",
    "RandomForestModel",
    "TrainConfig",
    "TrainingError",
    "Tree",
    "baseline_topk",
    "cluster_assign",
    "cohort_keys",
    "dumps_labeled",
    "evaluate_topk",
    "featurize",
    "featurize_all",
    "format_eval_csv",
    "loads_labeled",
    "quantize",
    "train",
    "unwrap_azimuth",
    "zscores",
]
