"""Rank people in group photos by importance learned from pairwise judgments."""

from .corpus import (
    AnnotatedPair,
    Corpus,
    FaceRecord,
    ImageRecord,
    PairCategory,
    PairJudgment,
    PairScore,
    PoseEstimate,
    aggregate_scores,
    categorize_pair,
    convert_judgment,
    load_corpus,
    save_corpus,
)
from .features import (
    FeatureTable,
    FeatureVector,
    PairFeature,
    build_feature_table,
    compose_pair,
    extract,
    extract_image,
)
from .ranking import EloConfig, RankingTable, elo_rank, kendall_tau
from .svr import (
    RegressionModel,
    SolverConfig,
    TrainingSet,
    duality_gap,
    load_model,
    predict,
    save_model,
    score_individuals,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedPair",
    "Corpus",
    "EloConfig",
    "FaceRecord",
    "FeatureTable",
    "FeatureVector",
    "ImageRecord",
    "PairCategory",
    "PairFeature",
    "PairJudgment",
    "PairScore",
    "PoseEstimate",
    "RankingTable",
    "RegressionModel",
    "SolverConfig",
    "TrainingSet",
    "aggregate_scores",
    "build_feature_table",
    "categorize_pair",
    "compose_pair",
    "convert_judgment",
    "duality_gap",
    "elo_rank",
    "extract",
    "extract_image",
    "kendall_tau",
    "load_corpus",
    "load_model",
    "predict",
    "save_corpus",
    "save_model",
    "score_individuals",
    "train",
]
