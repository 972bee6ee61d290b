"""Contrastive embedding learning with ordinal virtual labels.

The trainable encoder f and its momentum twin g are small linear maps over
synthetic feature vectors; a linear projection head p followed by L2
normalization produces the unit embeddings the losses operate on. Queue
entries are momentum-side projections frozen at enqueue time, so gradients
flow only through f and p.

Three losses share the same softmax-over-queue structure and differ in how
they pick positives:

* moco:   the single queue entry originating from the same sample,
* supcon: every queue entry with the same label,
* ordcon: label agreement at l coarsening levels u = 1..l, where level u
  compares ceil(y/u) and contributes with weight w^u. With l=1, w=(1,)
  this reduces exactly to supcon.

All gradients are analytic; tests check them against central finite
differences.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Sequence, Tuple

import numpy as np


def virtual_labels(y: int, levels: int) -> Tuple[int, ...]:
    """Coarsen an ordinal label: level u holds ceil(y / u).

    Level 1 is the label itself; higher levels merge neighboring labels so
    that close labels share more virtual labels than distant ones.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if not isinstance(y, (int, np.integer)) or y < 1:
        raise ValueError(f"ordinal label must be a positive integer, got {y!r}")
    return tuple(-(-int(y) // u) for u in range(1, levels + 1))


@dataclass(frozen=True)
class QueueEntry:
    z: np.ndarray  # unit-norm projected momentum embedding, frozen
    y: int
    sample_id: int


@dataclass
class Batch:
    """One training batch: two augmented views per sample plus labels."""

    anchor_views: np.ndarray  # (n, input_dim), encoded by f
    twin_views: np.ndarray    # (n, input_dim), encoded by g and enqueued
    labels: np.ndarray        # (n,), ordinal in 1..m
    sample_ids: np.ndarray    # (n,)

    def __post_init__(self):
        self.anchor_views = np.asarray(self.anchor_views, dtype=float)
        self.twin_views = np.asarray(self.twin_views, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.sample_ids = np.asarray(self.sample_ids, dtype=np.int64)
        n = self.anchor_views.shape[0]
        if self.twin_views.shape != self.anchor_views.shape:
            raise ValueError("anchor and twin views must have identical shape")
        if self.labels.shape != (n,) or self.sample_ids.shape != (n,):
            raise ValueError("labels and sample_ids must have one entry per sample")
        if np.any(self.labels < 1):
            raise ValueError("labels must be >= 1")


@dataclass
class EmbeddingState:
    """Encoder, momentum twin, projection head, and the FIFO queue."""

    encoder_w: np.ndarray   # f, (encoder_dim, input_dim)
    momentum_w: np.ndarray  # g, same shape as f
    proj_w: np.ndarray      # p, (proj_dim, encoder_dim)
    tau: float = 0.07
    levels: int = 2
    weights: Tuple[float, ...] = (0.95, 0.05)
    queue_capacity: int = 256
    queue: Deque[QueueEntry] = field(default_factory=deque)

    def __post_init__(self):
        self.encoder_w = np.asarray(self.encoder_w, dtype=float)
        self.momentum_w = np.asarray(self.momentum_w, dtype=float)
        self.proj_w = np.asarray(self.proj_w, dtype=float)
        if self.encoder_w.shape != self.momentum_w.shape:
            raise ValueError("encoder and momentum twin must have identical shape")
        if self.proj_w.shape[1] != self.encoder_w.shape[0]:
            raise ValueError("projection input dim must match encoder output dim")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if len(self.weights) != self.levels:
            raise ValueError(f"need {self.levels} level weights, got {len(self.weights)}")
        if any(w < 0 for w in self.weights):
            raise ValueError("level weights must be >= 0")
        if self.queue_capacity < 1:
            raise ValueError("queue capacity must be >= 1")
        self.queue = deque(self.queue, maxlen=self.queue_capacity)

    @classmethod
    def initialize(
        cls,
        input_dim: int,
        encoder_dim: int = 8,
        proj_dim: int = 8,
        tau: float = 0.07,
        levels: int = 2,
        weights: Tuple[float, ...] = (0.95, 0.05),
        queue_capacity: int = 256,
        seed: int = 0,
    ) -> "EmbeddingState":
        rng = np.random.default_rng(seed)
        enc = rng.normal(scale=1.0 / np.sqrt(input_dim), size=(encoder_dim, input_dim))
        proj = rng.normal(scale=1.0 / np.sqrt(encoder_dim), size=(proj_dim, encoder_dim))
        return cls(
            encoder_w=enc,
            momentum_w=enc.copy(),
            proj_w=proj,
            tau=tau,
            levels=levels,
            weights=tuple(weights),
            queue_capacity=queue_capacity,
        )

    def project(self, h: np.ndarray) -> np.ndarray:
        v = self.proj_w @ h
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise ValueError("projection collapsed to zero vector")
        return v / norm

    def encode(self, x: np.ndarray) -> np.ndarray:
        return self.encoder_w @ x

    def momentum_encode(self, x: np.ndarray) -> np.ndarray:
        return self.momentum_w @ x

    def enqueue(self, x_twin: np.ndarray, y: int, sample_id: int) -> None:
        """Project the twin view through g and append it; FIFO at capacity."""
        z = self.project(self.momentum_encode(np.asarray(x_twin, dtype=float)))
        self.queue.append(QueueEntry(z=z, y=int(y), sample_id=int(sample_id)))

    def queue_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.queue:
            raise ValueError("queue is empty")
        z = np.stack([e.z for e in self.queue])
        y = np.array([e.y for e in self.queue], dtype=np.int64)
        ids = np.array([e.sample_id for e in self.queue], dtype=np.int64)
        return z, y, ids


def momentum_update(state: EmbeddingState, m: float) -> np.ndarray:
    """Exponential moving average: g <- m*g + (1-m)*f. Returns the new g."""
    if not 0.0 <= m <= 1.0:
        raise ValueError("momentum must be in [0, 1]")
    state.momentum_w = m * state.momentum_w + (1.0 - m) * state.encoder_w
    return state.momentum_w


def _forward(state: EmbeddingState, batch: Batch):
    """Shared forward pass: anchor projections and queue logits."""
    q_z, q_y, q_ids = state.queue_arrays()
    h = batch.anchor_views @ state.encoder_w.T          # (n, d)
    v = h @ state.proj_w.T                              # (n, r)
    norms = np.linalg.norm(v, axis=1)
    if np.any(norms < 1e-12):
        raise ValueError("projection collapsed to zero vector")
    u = v / norms[:, None]
    s = (u @ q_z.T) / state.tau                         # (n, K)
    s_max = s.max(axis=1, keepdims=True)
    log_z = (s_max + np.log(np.exp(s - s_max).sum(axis=1, keepdims=True)))[:, 0]
    softmax = np.exp(s - log_z[:, None])
    return q_z, q_y, q_ids, h, v, norms, u, s, log_z, softmax


def _backward(state, batch, q_z, h, v, norms, u, d_s) -> Dict[str, np.ndarray]:
    """Backpropagate d loss/d logits to the encoder and projection weights."""
    d_u = (d_s @ q_z) / state.tau                       # (n, r)
    # through L2 normalization: dv = (du - u (u . du)) / ||v||
    d_v = (d_u - u * np.sum(u * d_u, axis=1, keepdims=True)) / norms[:, None]
    d_proj = d_v.T @ h                                  # (r, d)
    d_h = d_v @ state.proj_w                            # (n, d)
    d_enc = d_h.T @ batch.anchor_views                  # (d, input_dim)
    return {"encoder_w": d_enc, "proj_w": d_proj}


def _level_positive_weights(
    anchor_labels: np.ndarray,
    queue_labels: np.ndarray,
    levels: int,
    weights: Sequence[float],
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-(anchor, queue) positive weights and per-anchor active weight mass.

    pos[i, k] = sum_u (w^u / |K_i^u|) [k in K_i^u]; levels with an empty
    positive set are skipped and drop out of the active mass as well.
    """
    n, kq = anchor_labels.size, queue_labels.size
    pos = np.zeros((n, kq))
    active = np.zeros(n)
    for u in range(1, levels + 1):
        w = float(weights[u - 1])
        a_virt = -(-anchor_labels // u)
        q_virt = -(-queue_labels // u)
        match = a_virt[:, None] == q_virt[None, :]
        cnt = match.sum(axis=1)
        has = cnt > 0
        pos[has] += w * match[has] / cnt[has, None]
        active[has] += w
    return pos, active


def ordcon_loss(state: EmbeddingState, batch: Batch) -> Tuple[float, Dict[str, np.ndarray]]:
    """Ordinal contrastive loss over the queue, with analytic gradients.

    loss = -(1/N) sum_i sum_u (w^u/|K_i^u|) sum_{j in K_i^u}
           log softmax_j(u_i . z_k / tau), where K_i^u collects queue
    entries whose level-u virtual label matches the anchor's. Empty K_i^u
    terms are skipped. Returns (loss, gradients for encoder_w and proj_w).
    """
    q_z, q_y, _, h, v, norms, u, s, log_z, softmax = _forward(state, batch)
    pos, active = _level_positive_weights(batch.labels, q_y, state.levels, state.weights)
    n = batch.labels.size
    loss = float(np.sum(active * log_z - np.sum(pos * s, axis=1)) / n)
    d_s = (active[:, None] * softmax - pos) / n
    return loss, _backward(state, batch, q_z, h, v, norms, u, d_s)


def supcon_loss(state: EmbeddingState, batch: Batch) -> Tuple[float, Dict[str, np.ndarray]]:
    """Supervised contrastive loss: positives are same-label queue entries."""
    q_z, q_y, _, h, v, norms, u, s, log_z, softmax = _forward(state, batch)
    match = batch.labels[:, None] == q_y[None, :]
    cnt = match.sum(axis=1)
    has = cnt > 0
    pos = np.zeros_like(s)
    pos[has] = match[has] / cnt[has, None]
    n = batch.labels.size
    loss = float(np.sum(has * log_z - np.sum(pos * s, axis=1)) / n)
    d_s = (has[:, None] * softmax - pos) / n
    return loss, _backward(state, batch, q_z, h, v, norms, u, d_s)


def moco_loss(state: EmbeddingState, batch: Batch) -> Tuple[float, Dict[str, np.ndarray]]:
    """Single-positive InfoNCE: the positive is the anchor's own twin view.

    The twin is located by sample id; when a sample was enqueued several
    times the most recent entry is the positive. A missing twin is an error.
    """
    q_z, _, q_ids, h, v, norms, u, s, log_z, softmax = _forward(state, batch)
    n = batch.labels.size
    pos_idx = np.empty(n, dtype=np.int64)
    for i, sid in enumerate(batch.sample_ids):
        hits = np.nonzero(q_ids == sid)[0]
        if hits.size == 0:
            raise ValueError(f"anchor sample {int(sid)} has no twin view in the queue")
        pos_idx[i] = hits[-1]
    rows = np.arange(n)
    loss = float(np.sum(log_z - s[rows, pos_idx]) / n)
    d_s = softmax.copy()
    d_s[rows, pos_idx] -= 1.0
    d_s /= n
    return loss, _backward(state, batch, q_z, h, v, norms, u, d_s)


LOSS_FUNCTIONS = {"ordcon": ordcon_loss, "supcon": supcon_loss, "moco": moco_loss}


@dataclass
class TrainConfig:
    """Desk-scale training configuration for the toy trainer."""

    loss: str = "ordcon"
    levels: int = 2
    weights: Tuple[float, ...] = (0.95, 0.05)
    tau: float = 0.07
    momentum: float = 0.999
    queue_capacity: int = 256
    encoder_dim: int = 8
    proj_dim: int = 8
    epochs: int = 100
    lr: float = 2.0
    aug_noise: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.loss not in LOSS_FUNCTIONS:
            raise ValueError(f"loss must be one of {sorted(LOSS_FUNCTIONS)}, got {self.loss!r}")
        if len(self.weights) != self.levels or any(w < 0 for w in self.weights):
            raise ValueError(f"need {self.levels} non-negative level weights, got {self.weights}")
        if self.epochs < 1 or self.lr <= 0 or self.aug_noise < 0:
            raise ValueError("epochs must be >= 1, lr > 0, aug_noise >= 0")
        if not 0.0 <= self.momentum <= 1.0:
            raise ValueError("momentum must be in [0, 1]")


def train_toy(
    config: TrainConfig,
    features: np.ndarray,
    labels: Sequence[int],
) -> Tuple[EmbeddingState, List[float]]:
    """Gradient-descent training of the toy encoder on synthetic vectors.

    Each epoch draws two noisy views of every sample, pushes the momentum
    side's projections into the queue (FIFO eviction at capacity), takes one
    full-batch step on the configured loss, then updates the momentum twin.
    Fully deterministic under the config seed.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError("features must be (n, p) with one label per row")
    rng = np.random.default_rng(config.seed)
    state = EmbeddingState.initialize(
        input_dim=x.shape[1],
        encoder_dim=config.encoder_dim,
        proj_dim=config.proj_dim,
        tau=config.tau,
        levels=config.levels,
        weights=config.weights,
        queue_capacity=config.queue_capacity,
        seed=config.seed,
    )
    loss_fn = LOSS_FUNCTIONS[config.loss]
    n = x.shape[0]
    ids = np.arange(n)
    history: List[float] = []
    for _ in range(config.epochs):
        x_bar = x + config.aug_noise * rng.standard_normal(x.shape)
        x_til = x + config.aug_noise * rng.standard_normal(x.shape)
        for i in range(n):
            state.enqueue(x_til[i], int(y[i]), int(ids[i]))
        batch = Batch(anchor_views=x_bar, twin_views=x_til, labels=y, sample_ids=ids)
        loss, grads = loss_fn(state, batch)
        state.encoder_w = state.encoder_w - config.lr * grads["encoder_w"]
        state.proj_w = state.proj_w - config.lr * grads["proj_w"]
        momentum_update(state, config.momentum)
        history.append(loss)
    return state, history


def encoder_embeddings(state: EmbeddingState, features: np.ndarray) -> np.ndarray:
    """Inference-time embeddings: L2-normalized encoder outputs (no projection)."""
    h = np.asarray(features, dtype=float) @ state.encoder_w.T
    norms = np.linalg.norm(h, axis=1, keepdims=True)
    norms[norms < 1e-12] = 1.0
    return h / norms


def class_centroids(embeddings: np.ndarray, labels: Sequence[int]) -> Dict[int, np.ndarray]:
    """Mean embedding per label; keys are the distinct labels present."""
    emb = np.asarray(embeddings, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    return {int(c): emb[y == c].mean(axis=0) for c in np.unique(y)}
