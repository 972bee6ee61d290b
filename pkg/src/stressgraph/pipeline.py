"""Two-step LTS prediction: smoothed feature predictions -> CART leaf
distribution -> fusion with a per-segment embedding -> linear classifier.

The fusion head lifts the 4-dim leaf distribution into the embedding space
with a linear map, averages it with the segment embedding, and applies a
linear classifier. Ground-truth features supplied by a data-availability
scenario bypass both the predicted distribution and the smoothing of that
feature.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set

import numpy as np

from .cart import DecisionTree
from .features import FEATURE_NAMES, record_to_row
from .network import RoadNetwork
from .smoothing import TransitionMatrix, adapt

# Data-availability scenarios: which ground-truth features accompany the
# image-derived predictions.
SCENARIO_AVAILABLE: Dict[int, frozenset] = {
    1: frozenset(),
    2: frozenset({"road_type", "infra"}),
    3: frozenset({"lanes", "speed"}),
}


@dataclass
class FusionModel:
    """Linear leaf-distribution lift + linear classifier over the average."""

    map_w: np.ndarray   # (dim, 4)
    map_b: np.ndarray   # (dim,)
    cls_w: np.ndarray   # (4, dim)
    cls_b: np.ndarray   # (4,)
    loss_history: List[float] = field(default_factory=list)

    def __post_init__(self):
        self.map_w = np.asarray(self.map_w, dtype=float)
        self.map_b = np.asarray(self.map_b, dtype=float)
        self.cls_w = np.asarray(self.cls_w, dtype=float)
        self.cls_b = np.asarray(self.cls_b, dtype=float)
        dim = self.map_w.shape[0]
        if self.map_w.shape != (dim, 4) or self.map_b.shape != (dim,):
            raise ValueError(f"leaf map must be (dim, 4) with (dim,) bias, got {self.map_w.shape}")
        if self.cls_w.shape != (4, dim) or self.cls_b.shape != (4,):
            raise ValueError(f"classifier must be (4, dim) with (4,) bias, got {self.cls_w.shape}")

    @property
    def dim(self) -> int:
        return self.map_w.shape[0]

    def to_dict(self) -> dict:
        return {
            "map_w": self.map_w.tolist(),
            "map_b": self.map_b.tolist(),
            "cls_w": self.cls_w.tolist(),
            "cls_b": self.cls_b.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FusionModel":
        return cls(
            np.array(data["map_w"]), np.array(data["map_b"]),
            np.array(data["cls_w"]), np.array(data["cls_b"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FusionModel":
        return cls.from_dict(json.loads(text))


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def fuse_predict(model: FusionModel, embeddings: np.ndarray, leaf_dists: np.ndarray) -> np.ndarray:
    """Class distribution from averaged (embedding, lifted leaf) vectors.

    Accepts single vectors or batches; batch order is irrelevant (each row
    is handled independently).
    """
    emb = np.atleast_2d(np.asarray(embeddings, dtype=float))
    leaf = np.atleast_2d(np.asarray(leaf_dists, dtype=float))
    if emb.shape[0] != leaf.shape[0]:
        raise ValueError("embedding and leaf batches must have the same length")
    if emb.shape[1] != model.dim:
        raise ValueError(f"embedding dim {emb.shape[1]} != model dim {model.dim}")
    if leaf.shape[1] != 4:
        raise ValueError("leaf distributions must have 4 entries")
    fused = 0.5 * (emb + leaf @ model.map_w.T + model.map_b)
    logits = fused @ model.cls_w.T + model.cls_b
    probs = _softmax(logits)
    if np.asarray(embeddings).ndim == 1:
        return probs[0]
    return probs


def train_fusion(
    embeddings: np.ndarray,
    leaf_dists: np.ndarray,
    labels: Sequence[int],
    epochs: int = 300,
    lr: float = 0.5,
    seed: int = 0,
) -> FusionModel:
    """Full-batch gradient descent on cross-entropy for the fusion head.

    Deterministic under ``seed``; the per-epoch loss trace is kept on the
    returned model as ``loss_history``.
    """
    emb = np.asarray(embeddings, dtype=float)
    leaf = np.asarray(leaf_dists, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    n = emb.shape[0]
    if leaf.shape != (n, 4) or y.shape != (n,):
        raise ValueError("inconsistent sample counts between embeddings, leaf distributions, labels")
    if np.any((y < 1) | (y > 4)):
        raise ValueError("labels must be in 1..4")
    dim = emb.shape[1]
    rng = np.random.default_rng(seed)
    model = FusionModel(
        map_w=rng.normal(scale=0.1, size=(dim, 4)),
        map_b=np.zeros(dim),
        cls_w=rng.normal(scale=0.1, size=(4, dim)),
        cls_b=np.zeros(4),
    )
    onehot = np.zeros((n, 4))
    onehot[np.arange(n), y - 1] = 1.0
    history: List[float] = []
    for _ in range(epochs):
        fused = 0.5 * (emb + leaf @ model.map_w.T + model.map_b)
        logits = fused @ model.cls_w.T + model.cls_b
        probs = _softmax(logits)
        loss = float(-np.mean(np.log(np.clip(probs[np.arange(n), y - 1], 1e-300, None))))
        history.append(loss)
        d_logits = (probs - onehot) / n
        d_cls_w = d_logits.T @ fused
        d_cls_b = d_logits.sum(axis=0)
        d_fused = d_logits @ model.cls_w
        d_map_w = 0.5 * d_fused.T @ leaf
        d_map_b = 0.5 * d_fused.sum(axis=0)
        model.cls_w -= lr * d_cls_w
        model.cls_b -= lr * d_cls_b
        model.map_w -= lr * d_map_w
        model.map_b -= lr * d_map_b
    model.loss_history = history
    return model


@dataclass(frozen=True)
class PipelinePrediction:
    label: int
    probs: np.ndarray
    leaf: np.ndarray


def assemble_feature_rows(
    net: RoadNetwork,
    available: Set[str],
    feature_labels: Mapping[str, Mapping[str, int]],
) -> np.ndarray:
    """Feature matrix combining ground truth with predicted labels.

    ``available`` features are read from the network's records;
    the rest come from ``feature_labels`` (feature name -> segment -> code),
    typically smoothed prediction argmaxes. Anything else stays missing (0).
    """
    unknown = set(available) - set(FEATURE_NAMES)
    if unknown:
        raise ValueError(f"unknown feature names in availability mask: {sorted(unknown)}")
    rows = np.zeros((len(net), len(FEATURE_NAMES)), dtype=np.int64)
    for pos, seg in enumerate(net.segments):
        truth = record_to_row(seg.features)
        for f_idx, name in enumerate(FEATURE_NAMES):
            if name in available:
                rows[pos, f_idx] = truth[f_idx]
            elif name in feature_labels:
                rows[pos, f_idx] = feature_labels[name].get(seg.segment_id, 0)
    return rows


def predicted_feature_labels(
    net: RoadNetwork,
    available: Set[str],
    predicted: Mapping[str, Mapping[str, np.ndarray]],
    transitions: Mapping[str, TransitionMatrix],
    smoothed: Optional[Mapping[str, Mapping[str, int]]] = None,
    max_iters: int = 100,
) -> Dict[str, Mapping[str, int]]:
    """Per-feature label maps from predictions: smoothed where a transition
    matrix (or pre-smoothed labels) is given, plain argmax otherwise.
    Features covered by ground truth are skipped outright."""
    feature_labels: Dict[str, Mapping[str, int]] = {}
    for name, dists in predicted.items():
        if name not in FEATURE_NAMES:
            raise ValueError(f"unknown predicted feature {name!r}")
        if name in available:
            continue  # ground truth supersedes the prediction entirely
        if smoothed is not None and name in smoothed:
            feature_labels[name] = smoothed[name]
            continue
        argmax = {sid: int(np.argmax(d)) + 1 for sid, d in dists.items()}
        if name in transitions:
            result = adapt(net, argmax, transitions[name], dists, max_iters=max_iters)
            feature_labels[name] = result.labels
        else:
            feature_labels[name] = argmax
    return feature_labels


def leaf_distributions_for(net: RoadNetwork, tree: DecisionTree, rows: np.ndarray) -> np.ndarray:
    return np.stack([tree.leaf_distribution(rows[pos]) for pos in range(len(net))])


def predict_network(
    net: RoadNetwork,
    scenario: int,
    predicted: Mapping[str, Mapping[str, np.ndarray]],
    transitions: Mapping[str, TransitionMatrix],
    embeddings: Mapping[str, np.ndarray],
    tree: DecisionTree,
    fusion: FusionModel,
    smoothed: Optional[Mapping[str, Mapping[str, int]]] = None,
    max_iters: int = 100,
) -> Dict[str, PipelinePrediction]:
    """End-to-end per-segment LTS prediction.

    Predicted feature distributions are smoothed over the network (features
    with a transition matrix; pre-smoothed labels may be passed instead),
    ground-truth features from the scenario mask override predictions, the
    CART leaf distribution is fused with the segment embedding, and the
    argmax of the fused distribution is the prediction.
    """
    if scenario not in SCENARIO_AVAILABLE:
        raise ValueError(f"scenario must be one of {sorted(SCENARIO_AVAILABLE)}")
    available = SCENARIO_AVAILABLE[scenario]
    feature_labels = predicted_feature_labels(net, available, predicted, transitions, smoothed, max_iters)
    rows = assemble_feature_rows(net, available, feature_labels)
    leaf = leaf_distributions_for(net, tree, rows)
    emb = np.stack([np.asarray(embeddings[seg.segment_id], dtype=float) for seg in net.segments])
    probs = fuse_predict(fusion, emb, leaf)
    out: Dict[str, PipelinePrediction] = {}
    for pos, seg in enumerate(net.segments):
        out[seg.segment_id] = PipelinePrediction(
            label=int(np.argmax(probs[pos])) + 1,
            probs=probs[pos],
            leaf=leaf[pos],
        )
    return out
