"""Spatial smoothing of categorical per-segment predictions.

A segment's label is rescored by combining its model distribution with the
labels of adjacent segments through an empirical transition matrix, and the
whole network is swept until labels stop changing. Sweeps use snapshot
(Jacobi) semantics: every segment is updated against the previous sweep's
labels, so the visit order does not matter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Sequence

import numpy as np

from .network import RoadNetwork


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix: probs[a-1, b-1] = P(neighbor has b | segment has a)."""

    probs: np.ndarray
    alpha: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"transition matrix must be square, got shape {p.shape}")
        if np.any(p < 0):
            raise ValueError("transition probabilities must be non-negative")
        rows = p.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=1e-9):
            raise ValueError(f"transition rows must sum to 1, got {rows}")
        if self.alpha > 0 and np.any(p <= 0):
            raise ValueError("alpha > 0 implies strictly positive entries")
        object.__setattr__(self, "probs", p)

    @property
    def n_categories(self) -> int:
        return self.probs.shape[0]

    def log(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs)

    @classmethod
    def uniform(cls, n_categories: int) -> "TransitionMatrix":
        return cls(np.full((n_categories, n_categories), 1.0 / n_categories))


@dataclass(frozen=True)
class AdaptResult:
    labels: Dict[str, int]
    converged: bool
    iterations: int


def estimate_transitions(
    net: RoadNetwork,
    labels: Mapping[str, int],
    n_categories: int,
    alpha: float = 1.0,
) -> TransitionMatrix:
    """Estimate P(neighbor label | segment label) from adjacent labeled pairs.

    Every ordered adjacent pair (i, j) with both ends labeled contributes one
    count. ``alpha`` is a Laplace pseudo-count added to every cell; with
    alpha = 0 a label that never occurs as a source leaves its row undefined,
    which is an error.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    counts = np.zeros((n_categories, n_categories), dtype=float)
    segs = net.segments
    for i, j in net.adjacency_pairs():
        a = labels.get(segs[i].segment_id)
        b = labels.get(segs[j].segment_id)
        if a is None or b is None:
            continue
        counts[a - 1, b - 1] += 1.0

    row_sums = counts.sum(axis=1)
    if alpha == 0.0:
        empty = np.nonzero(row_sums == 0)[0]
        if empty.size:
            raise ValueError(f"undefined transition row for category {int(empty[0]) + 1} (alpha=0, no observations)")
        probs = counts / row_sums[:, None]
    else:
        probs = (counts + alpha) / (row_sums + alpha * n_categories)[:, None]
    return TransitionMatrix(probs, alpha=alpha)


def local_score(
    candidate: int,
    neighbor_labels: Sequence[int],
    transitions: TransitionMatrix,
    model: np.ndarray,
) -> float:
    """Log of the local posterior score for one candidate label.

    score = log P(candidate | x) + sum_j log P(neighbor_j | candidate).
    Zero probabilities yield -inf, which is a valid (never preferred) score.
    """
    model = np.asarray(model, dtype=float)
    k = transitions.n_categories
    if model.shape != (k,):
        raise ValueError(f"model distribution must have length {k}, got {model.shape}")
    if not np.isclose(model.sum(), 1.0, atol=1e-9) or np.any(model < 0):
        raise ValueError("model distribution must be a probability vector")
    if not 1 <= candidate <= k:
        raise ValueError(f"candidate {candidate} outside 1..{k}")
    log_t = transitions.log()
    with np.errstate(divide="ignore"):
        score = float(np.log(model[candidate - 1]))
    for b in neighbor_labels:
        if not 1 <= b <= k:
            raise ValueError(f"neighbor label {b} outside 1..{k}")
        score += float(log_t[candidate - 1, b - 1])
    return score


def _score_matrix(
    log_model: np.ndarray,
    log_t: np.ndarray,
    neighbor_counts: np.ndarray,
) -> np.ndarray:
    """All-segment candidate scores with exact handling of -inf terms.

    Contract: a neighbor label with count 0 contributes nothing even when
    its transition log-probability is -inf (0 * -inf must be 0 here, not nan).
    """
    finite = np.where(np.isinf(log_t), 0.0, log_t)
    scores = log_model + neighbor_counts @ finite.T
    blocked = neighbor_counts @ np.isinf(log_t).astype(float).T
    scores[blocked > 0] = -np.inf
    return scores


def adapt(
    net: RoadNetwork,
    initial: Mapping[str, int],
    transitions: TransitionMatrix,
    models: Mapping[str, np.ndarray],
    max_iters: int = 100,
) -> AdaptResult:
    """Iterate snapshot sweeps of local-argmax relabeling to a fixed point.

    Each sweep recomputes every segment's label as the argmax of its local
    score against the previous sweep's labels. Terminates when a sweep
    changes nothing (a fixed point: every label is its own local argmax) or
    after ``max_iters`` sweeps; pure Jacobi sweeps can oscillate on a cycle,
    which is detected by hashing the label vector and reported as
    converged=False with the last iterate.

    Ties in the argmax break toward the smallest category index.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    segs = net.segments
    n = len(segs)
    if n == 0:
        return AdaptResult(labels={}, converged=True, iterations=0)
    k = transitions.n_categories

    labels = np.empty(n, dtype=np.int64)
    log_model = np.empty((n, k), dtype=float)
    for pos, seg in enumerate(segs):
        a = initial[seg.segment_id]
        if not 1 <= a <= k:
            raise ValueError(f"initial label {a} for {seg.segment_id!r} outside 1..{k}")
        m = np.asarray(models[seg.segment_id], dtype=float)
        if m.shape != (k,):
            raise ValueError(f"model for {seg.segment_id!r} must have length {k}")
        if not np.isclose(m.sum(), 1.0, atol=1e-9) or np.any(m < 0):
            raise ValueError(f"model for {seg.segment_id!r} is not a probability vector")
        labels[pos] = a
        log_model[pos] = m
    with np.errstate(divide="ignore"):
        log_model = np.log(log_model)

    pairs = np.array(list(net.adjacency_pairs()), dtype=np.int64).reshape(-1, 2)
    log_t = transitions.log()

    seen = {labels.tobytes()}
    converged = False
    sweeps = 0
    for _ in range(max_iters):
        sweeps += 1
        counts = np.zeros((n, k), dtype=float)
        if pairs.size:
            np.add.at(counts, (pairs[:, 0], labels[pairs[:, 1]] - 1), 1.0)
        scores = _score_matrix(log_model, log_t, counts)
        new_labels = np.argmax(scores, axis=1).astype(np.int64) + 1
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        key = labels.tobytes()
        if key in seen:
            break  # oscillation: revisiting a non-fixed-point state
        seen.add(key)

    return AdaptResult(
        labels={seg.segment_id: int(labels[pos]) for pos, seg in enumerate(segs)},
        converged=converged,
        iterations=sweeps,
    )
