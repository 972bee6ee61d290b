"""Cycling level-of-traffic-stress assessment over road-network graphs."""

from .features import (
    FEATURE_NAMES,
    FeatureRecord,
    MissingFeatureError,
    RawFeatures,
    UnknownCategoryError,
    discretize,
    iter_feature_grid,
    lanes_per_direction,
)
from .lts import HIGH_STRESS, LOW_STRESS, LTS_LABELS, compute_lts, stress_class
from .network import NetworkFormatError, RoadNetwork, SegmentRecord, load_network, split
from .smoothing import AdaptResult, TransitionMatrix, adapt, estimate_transitions, local_score
from .contrastive import (
    Batch,
    EmbeddingState,
    TrainConfig,
    encoder_embeddings,
    momentum_update,
    moco_loss,
    ordcon_loss,
    supcon_loss,
    train_toy,
    virtual_labels,
)
from .cart import DecisionTree, GridSpec, fit, fit_records, grid_search, leaf_distribution
from .pipeline import FusionModel, fuse_predict, predict_network, train_fusion
from .metrics import EvalReport, evaluate
from .synthgen import GenConfig, corrupt, generate, generate_pipeline_dataset

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES",
    "FeatureRecord",
    "MissingFeatureError",
    "RawFeatures",
    "UnknownCategoryError",
    "discretize",
    "iter_feature_grid",
    "lanes_per_direction",
    "HIGH_STRESS",
    "LOW_STRESS",
    "LTS_LABELS",
    "compute_lts",
    "stress_class",
    "NetworkFormatError",
    "RoadNetwork",
    "SegmentRecord",
    "load_network",
    "split",
    "AdaptResult",
    "TransitionMatrix",
    "adapt",
    "estimate_transitions",
    "local_score",
    "Batch",
    "EmbeddingState",
    "TrainConfig",
    "encoder_embeddings",
    "momentum_update",
    "moco_loss",
    "ordcon_loss",
    "supcon_loss",
    "train_toy",
    "virtual_labels",
    "DecisionTree",
    "GridSpec",
    "fit",
    "fit_records",
    "grid_search",
    "leaf_distribution",
    "FusionModel",
    "fuse_predict",
    "predict_network",
    "train_fusion",
    "EvalReport",
    "evaluate",
    "GenConfig",
    "corrupt",
    "generate",
    "generate_pipeline_dataset",
]
