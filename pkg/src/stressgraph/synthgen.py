"""Seeded synthetic road networks, labels, and model outputs.

Everything here exists to verify the rest of the package: small graph
topologies, Markov-correlated categorical labels swept over a spanning
tree, noise-corrupted model distributions with a known argmax accuracy,
class-dependent Gaussian embeddings, and a label-marginals preset matching
the Toronto dataset shares (49.0 / 34.5 / 6.9 / 9.7 percent).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .features import FeatureRecord
from .lts import compute_lts
from .network import RoadNetwork, SegmentRecord

# Published label shares (49.0/34.5/6.9/9.7 percent). As printed they sum
# to 100.1%, so sampling uses the normalized vector.
TORONTO_SHARES = np.array([0.490, 0.345, 0.069, 0.097])
TORONTO_MARGINALS = TORONTO_SHARES / TORONTO_SHARES.sum()
PRESETS = ("toronto-marginals",)

# Raw values that discretize back onto each bin; used when a generated
# network is written out in the raw segment-file schema.
SPEED_REPRESENTATIVE = {1: 30.0, 2: 45.0, 3: 52.0, 4: 64.0}
LANES_REPRESENTATIVE = {1: 1, 2: 2, 3: 3, 4: 4, 5: 6}
VOLUME_REPRESENTATIVE = {1: 1500.0, 2: 5200.0}
ROAD_TYPE_REPRESENTATIVE = {1: "arterial", 2: "local", 3: "trail"}
DIRECTION_REPRESENTATIVE = {1: "oneway", 2: "twoway"}
INFRA_REPRESENTATIVE = {1: "bike_lane", 2: "cycle_track", 3: "multiuse_path", 4: "none"}
PARKING_REPRESENTATIVE = {1: "yes", 2: "no"}


def diagonal_kernel(n_categories: int, stay: float) -> np.ndarray:
    """Kernel that keeps the current label with probability ``stay``."""
    if not 0.0 <= stay <= 1.0:
        raise ValueError("stay must be in [0, 1]")
    k = n_categories
    off = (1.0 - stay) / (k - 1) if k > 1 else 0.0
    return np.full((k, k), off) + np.eye(k) * (stay - off)


def marginal_preserving_kernel(marginals: np.ndarray, stay: float = 0.5) -> np.ndarray:
    """Mixture kernel stay*I + (1-stay)*marginals, stationary at ``marginals``."""
    pi = np.asarray(marginals, dtype=float)
    if not np.isclose(pi.sum(), 1.0, atol=1e-9) or np.any(pi < 0):
        raise ValueError("marginals must be a probability vector")
    if not 0.0 <= stay < 1.0:
        raise ValueError("stay must be in [0, 1)")
    k = pi.size
    return stay * np.eye(k) + (1.0 - stay) * np.tile(pi, (k, 1))


def _chain_topology(n: int) -> List[Tuple[str, str, str]]:
    return [(f"s{i:05d}", f"n{i:05d}", f"n{i + 1:05d}") for i in range(n)]


def _grid_topology(n: int) -> List[Tuple[str, str, str]]:
    # near-square node grid with about n edge segments
    side = max(2, int(round(np.sqrt(n / 2.0))) + 1)
    segs = []
    for r in range(side):
        for c in range(side):
            if c + 1 < side:
                segs.append((f"h{r:03d}_{c:03d}", f"n{r:03d}_{c:03d}", f"n{r:03d}_{c + 1:03d}"))
            if r + 1 < side:
                segs.append((f"v{r:03d}_{c:03d}", f"n{r:03d}_{c:03d}", f"n{r + 1:03d}_{c:03d}"))
    return segs[:n] if len(segs) > n else segs


def _random_topology(n: int, avg_degree: float, rng: np.random.Generator) -> List[Tuple[str, str, str]]:
    # segment adjacency ~ 2*(node_degree - 1); pick the node pool to match
    n_nodes = max(3, int(round(4.0 * n / (avg_degree + 2.0))))
    segs = []
    for i in range(n):
        a = int(rng.integers(n_nodes))
        b = int(rng.integers(n_nodes - 1))
        if b >= a:
            b += 1
        segs.append((f"s{i:05d}", f"n{a:05d}", f"n{b:05d}"))
    return segs


def build_topology(topology: str, n: int, avg_degree: float, rng: np.random.Generator):
    if n < 0:
        raise ValueError("n must be >= 0")
    if topology == "chain":
        return _chain_topology(n)
    if topology == "grid":
        return _grid_topology(n)
    if topology == "random":
        return _random_topology(n, avg_degree, rng)
    raise ValueError(f"unknown topology {topology!r}")


def _region_tags(n: int, n_regions: int = 3) -> List[str]:
    return [f"r{min(i * n_regions // max(n, 1), n_regions - 1)}" for i in range(n)]


def markov_sweep_labels(
    net: RoadNetwork,
    kernel: np.ndarray,
    init: np.ndarray,
    rng: np.random.Generator,
) -> Dict[str, int]:
    """Sample one label per segment by sweeping a spanning tree.

    Each connected component gets a root drawn from ``init``; every newly
    reached neighbor draws from the kernel row of the segment it was reached
    from. Exact MRF sampling is not attempted.
    """
    k = kernel.shape[0]
    labels = np.zeros(len(net), dtype=np.int64)
    visited = np.zeros(len(net), dtype=bool)
    for start in range(len(net)):
        if visited[start]:
            continue
        visited[start] = True
        labels[start] = rng.choice(k, p=init) + 1
        frontier = deque([start])
        while frontier:
            cur = frontier.popleft()
            for nbr in net.neighbor_positions(cur):
                if visited[nbr]:
                    continue
                visited[nbr] = True
                labels[nbr] = rng.choice(k, p=kernel[labels[cur] - 1]) + 1
                frontier.append(nbr)
    return {seg.segment_id: int(labels[pos]) for pos, seg in enumerate(net.segments)}


def corrupt(
    labels: Mapping[str, int],
    eta: float,
    seed=0,
    n_categories: int = 4,
    flip_rate: Optional[float] = None,
) -> Dict[str, np.ndarray]:
    """Noise-corrupted model distributions for given true labels.

    With probability ``flip_rate`` (defaults to the smear level ``eta``) the
    label is replaced by a uniformly random different one, then the one-hot
    is smeared as (1 - eta) * onehot + eta * uniform. The expected argmax
    accuracy is therefore 1 - flip_rate for eta < 1.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must be in [0, 1]")
    flip = eta if flip_rate is None else flip_rate
    if not 0.0 <= flip <= 1.0:
        raise ValueError("flip_rate must be in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k = n_categories
    out: Dict[str, np.ndarray] = {}
    for sid in labels:
        a = labels[sid]
        if not 1 <= a <= k:
            raise ValueError(f"label {a} outside 1..{k}")
        if flip > 0 and rng.random() < flip:
            shift = int(rng.integers(1, k))
            a = (a - 1 + shift) % k + 1
        dist = np.full(k, eta / k)
        dist[a - 1] += 1.0 - eta
        out[sid] = dist
    return out


def class_bump_embeddings(
    labels: Mapping[str, int],
    embed_dim: int,
    rng: np.random.Generator,
    scale: float = 2.0,
    noise: float = 0.5,
    n_categories: int = 4,
) -> Dict[str, np.ndarray]:
    """Class-dependent Gaussian bumps: mean scale*e_c plus isotropic noise."""
    if embed_dim < n_categories:
        raise ValueError("embed_dim must be >= the number of categories")
    out = {}
    for sid, a in labels.items():
        mu = np.zeros(embed_dim)
        mu[a - 1] = scale
        out[sid] = mu + noise * rng.standard_normal(embed_dim)
    return out


@dataclass
class GenConfig:
    """Configuration for the generic synthetic substrate."""

    topology: str = "random"
    n_segments: int = 100
    avg_degree: float = 4.0
    kernel: Optional[np.ndarray] = None
    noise: float = 0.0
    preset: Optional[str] = None
    n_categories: int = 4
    embed_dim: int = 8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must be in [0, 1]")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; known: {PRESETS}")
        if self.preset == "toronto-marginals" and self.n_categories != 4:
            raise ValueError("toronto-marginals preset requires 4 categories")
        if self.kernel is not None:
            k = np.asarray(self.kernel, dtype=float)
            if k.shape != (self.n_categories, self.n_categories):
                raise ValueError(f"kernel must be {self.n_categories}x{self.n_categories}")
            if np.any(k < 0) or not np.allclose(k.sum(axis=1), 1.0, atol=1e-9):
                raise ValueError("kernel rows must be probability vectors")
            self.kernel = k


@dataclass
class GenResult:
    network: RoadNetwork
    labels: Dict[str, int]
    models: Dict[str, np.ndarray]
    embeddings: Dict[str, np.ndarray]
    kernel: np.ndarray
    init: np.ndarray


def generate(config: GenConfig) -> GenResult:
    """Generic substrate: topology + Markov labels + corrupted models + embeddings."""
    rng = np.random.default_rng(config.seed)
    triples = build_topology(config.topology, config.n_segments, config.avg_degree, rng)
    regions = _region_tags(len(triples))
    net = RoadNetwork(
        SegmentRecord(segment_id=sid, node_a=a, node_b=b, region=reg)
        for (sid, a, b), reg in zip(triples, regions)
    )
    if config.preset == "toronto-marginals":
        init = TORONTO_MARGINALS.copy()
        # mild stay keeps some spatial correlation without drifting the
        # empirical shares far from the target marginals
        kernel = config.kernel if config.kernel is not None else marginal_preserving_kernel(init, stay=0.3)
    else:
        init = np.full(config.n_categories, 1.0 / config.n_categories)
        kernel = config.kernel if config.kernel is not None else diagonal_kernel(config.n_categories, stay=0.6)
    labels = markov_sweep_labels(net, kernel, init, rng)
    models = corrupt(labels, config.noise, rng, n_categories=config.n_categories)
    embeddings = class_bump_embeddings(labels, config.embed_dim, rng, n_categories=config.n_categories)
    return GenResult(net, labels, models, embeddings, kernel, init)


# Sampling weights for the feature-driven pipeline dataset. Mostly mixed
# traffic so that speed carries real signal for the LTS label.
PIPELINE_FEATURE_WEIGHTS = {
    "road_type": (0.30, 0.65, 0.05),
    "direction": (0.25, 0.75),
    "lanes": (0.30, 0.30, 0.20, 0.10, 0.10),
    "infra": (0.10, 0.05, 0.05, 0.80),
    "parking": (0.40, 0.60),
    "volume": (0.50, 0.50),
}


def sample_feature_records(n: int, seed=0, speed_labels: Optional[Sequence[int]] = None) -> List[FeatureRecord]:
    """Random fully-specified feature records.

    With ``speed_labels`` given, speed bins are taken from there (e.g. a
    Markov sweep); otherwise speed is sampled uniformly, which together with
    uniform defaults for the other features covers the whole feature grid.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    recs = []
    for i in range(n):
        if speed_labels is not None:
            speed = int(speed_labels[i])
            weights = PIPELINE_FEATURE_WEIGHTS
            rt = int(rng.choice(3, p=weights["road_type"])) + 1
            dd = int(rng.choice(2, p=weights["direction"])) + 1
            ln = int(rng.choice(5, p=weights["lanes"])) + 1
            inf = int(rng.choice(4, p=weights["infra"])) + 1
            pk = int(rng.choice(2, p=weights["parking"])) + 1
            vol = int(rng.choice(2, p=weights["volume"])) + 1
        else:
            rt = int(rng.integers(1, 4))
            dd = int(rng.integers(1, 3))
            ln = int(rng.integers(1, 6))
            speed = int(rng.integers(1, 5))
            inf = int(rng.integers(1, 5))
            pk = int(rng.integers(1, 3))
            vol = int(rng.integers(1, 3))
        recs.append(FeatureRecord(rt, dd, ln, speed, inf, pk, vol))
    return recs


@dataclass
class PipelineDataset:
    """Feature-complete synthetic network plus every pipeline input."""

    network: RoadNetwork
    speed_labels: Dict[str, int]       # true speed bins
    speed_models: Dict[str, np.ndarray]  # corrupted speed distributions
    kernel: np.ndarray                 # speed-generating kernel
    contrastive_x: np.ndarray          # (n, embed_dim) inputs for the toy encoder
    contrastive_y: np.ndarray          # (n,) true LTS labels
    segment_ids: List[str] = field(default_factory=list)


def generate_pipeline_dataset(
    n: int,
    topology: str = "random",
    avg_degree: float = 4.0,
    kernel: Optional[np.ndarray] = None,
    noise: float = 0.3,
    embed_dim: int = 8,
    seed: int = 0,
) -> PipelineDataset:
    """Synthetic end-to-end substrate: features whose LTS follows the rules.

    Speed bins are Markov-correlated over the graph; all other features are
    sampled independently; the LTS label is computed exactly from the
    features. Contrastive inputs are class bumps keyed on the LTS label, so
    embeddings carry signal beyond the (noisy) speed predictions.
    """
    rng = np.random.default_rng(seed)
    triples = build_topology(topology, n, avg_degree, rng)
    regions = _region_tags(len(triples))
    bare = RoadNetwork(
        SegmentRecord(segment_id=sid, node_a=a, node_b=b, region=reg)
        for (sid, a, b), reg in zip(triples, regions)
    )
    if kernel is None:
        kernel = diagonal_kernel(4, stay=0.7)
    speed_labels = markov_sweep_labels(bare, kernel, np.full(4, 0.25), rng)
    ids = [seg.segment_id for seg in bare.segments]
    recs = sample_feature_records(len(ids), rng, speed_labels=[speed_labels[sid] for sid in ids])
    lts = [compute_lts(r) for r in recs]
    net = RoadNetwork(
        SegmentRecord(
            segment_id=seg.segment_id,
            node_a=seg.node_a,
            node_b=seg.node_b,
            features=rec,
            lts=label,
            region=seg.region,
        )
        for seg, rec, label in zip(bare.segments, recs, lts)
    )
    speed_models = corrupt(speed_labels, noise, rng)
    lts_by_id = {sid: label for sid, label in zip(ids, lts)}
    bumps = class_bump_embeddings(lts_by_id, embed_dim, rng)
    x = np.stack([bumps[sid] for sid in ids])
    y = np.array(lts, dtype=np.int64)
    return PipelineDataset(
        network=net,
        speed_labels=speed_labels,
        speed_models=speed_models,
        kernel=np.asarray(kernel, dtype=float),
        contrastive_x=x,
        contrastive_y=y,
        segment_ids=ids,
    )
