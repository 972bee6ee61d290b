"""Road-network graph: ingestion, adjacency, and dataset splitting.

A network is a set of road segments, each joining two endpoint nodes.
Two segments are adjacent when they share an endpoint node. Networks are
immutable once constructed, so concurrent readers are safe.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .features import FeatureRecord, RawFeatures, discretize

SEGMENT_COLUMNS = (
    "segment_id",
    "node_a",
    "node_b",
    "region",
    "road_type",
    "direction",
    "n_lanes_total",
    "speed_kmh",
    "infra_type",
    "parking",
    "daily_volume",
    "lts",
)
REQUIRED_COLUMNS = ("segment_id", "node_a", "node_b")

SPLIT_PARTS = ("train", "validation", "test")


class NetworkFormatError(ValueError):
    """Raised for malformed network files; carries a record locus."""

    def __init__(self, message: str, locus: Optional[str] = None):
        super().__init__(f"{locus}: {message}" if locus else message)
        self.locus = locus


@dataclass(frozen=True)
class SegmentRecord:
    """One road segment between two endpoint nodes."""

    segment_id: str
    node_a: str
    node_b: str
    features: FeatureRecord = field(default_factory=FeatureRecord)
    lts: Optional[int] = None
    region: str = ""
    length_m: Optional[float] = None

    def __post_init__(self):
        if self.node_a == self.node_b:
            raise ValueError(f"segment {self.segment_id!r}: node_a == node_b ({self.node_a!r})")
        if self.lts is not None and self.lts not in (1, 2, 3, 4):
            raise ValueError(f"segment {self.segment_id!r}: lts must be 1..4, got {self.lts!r}")


class RoadNetwork:
    """Immutable segment graph with derived shared-endpoint adjacency."""

    def __init__(self, segments: Iterable[SegmentRecord]):
        segs = tuple(segments)
        index: Dict[str, int] = {}
        for pos, seg in enumerate(segs):
            if seg.segment_id in index:
                raise NetworkFormatError(f"duplicate id {seg.segment_id!r}")
            index[seg.segment_id] = pos

        node_index: Dict[str, List[int]] = {}
        for pos, seg in enumerate(segs):
            node_index.setdefault(seg.node_a, []).append(pos)
            node_index.setdefault(seg.node_b, []).append(pos)

        adjacency: List[Tuple[int, ...]] = []
        for pos, seg in enumerate(segs):
            nbrs = set(node_index[seg.node_a]) | set(node_index[seg.node_b])
            nbrs.discard(pos)
            adjacency.append(tuple(sorted(nbrs)))

        self._segments = segs
        self._pos = index
        self._node_index = {n: tuple(ps) for n, ps in node_index.items()}
        self._adjacency = tuple(adjacency)

    @property
    def segments(self) -> Tuple[SegmentRecord, ...]:
        return self._segments

    @property
    def node_index(self) -> Mapping[str, Tuple[int, ...]]:
        """node id -> positions of incident segments"""
        return self._node_index

    def __len__(self) -> int:
        return len(self._segments)

    def __contains__(self, segment_id: str) -> bool:
        return segment_id in self._pos

    def position(self, segment_id: str) -> int:
        return self._pos[segment_id]

    def segment(self, segment_id: str) -> SegmentRecord:
        return self._segments[self._pos[segment_id]]

    def neighbor_positions(self, pos: int) -> Tuple[int, ...]:
        return self._adjacency[pos]

    def neighbors(self, segment_id: str) -> Tuple[str, ...]:
        """Segment ids sharing an endpoint node with the given segment."""
        return tuple(self._segments[p].segment_id for p in self._adjacency[self._pos[segment_id]])

    def adjacency_pairs(self) -> Iterable[Tuple[int, int]]:
        """All ordered adjacent position pairs (i, j), j in J(i)."""
        for i, nbrs in enumerate(self._adjacency):
            for j in nbrs:
                yield i, j


def _parse_segment(values: Mapping[str, str], locus: str) -> SegmentRecord:
    def blank(key: str) -> Optional[str]:
        v = values.get(key)
        if v is None:
            return None
        v = str(v).strip()
        return v or None

    def number(key: str, cast):
        v = blank(key)
        if v is None:
            return None
        try:
            return cast(v)
        except ValueError:
            raise NetworkFormatError(f"bad {key} value {v!r}", locus)

    seg_id = blank("segment_id")
    node_a = blank("node_a")
    node_b = blank("node_b")
    if seg_id is None:
        raise NetworkFormatError("missing segment_id", locus)
    if node_a is None or node_b is None:
        raise NetworkFormatError(f"segment {seg_id!r}: dangling node reference", locus)

    try:
        raw = RawFeatures(
            road_type=blank("road_type"),
            direction=blank("direction"),
            n_lanes_total=number("n_lanes_total", lambda s: int(float(s))),
            speed_kmh=number("speed_kmh", float),
            infra=blank("infra_type"),
            parking=blank("parking"),
            daily_volume=number("daily_volume", float),
        )
        feats = discretize(raw)
        lts = number("lts", lambda s: int(float(s)))
        return SegmentRecord(
            segment_id=seg_id,
            node_a=node_a,
            node_b=node_b,
            features=feats,
            lts=lts,
            region=blank("region") or "",
            length_m=number("length_m", float),
        )
    except NetworkFormatError:
        raise
    except ValueError as exc:
        raise NetworkFormatError(str(exc), locus)


def load_network(path, fmt: Optional[str] = None, min_length: Optional[float] = None) -> RoadNetwork:
    """Load a road network from a segment CSV or JSON file.

    ``fmt`` is inferred from the file suffix when not given. ``min_length``
    optionally drops segments shorter than the given meters; it requires a
    ``length_m`` column and defaults to off.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"

    records: List[SegmentRecord] = []
    if fmt == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in REQUIRED_COLUMNS if c not in header]
            if missing:
                raise NetworkFormatError(f"missing required columns: {missing}", str(path))
            for lineno, row in enumerate(reader, start=2):
                records.append(_parse_segment(row, f"{path}:{lineno}"))
    elif fmt == "json":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, list):
            raise NetworkFormatError("JSON network must be an array of records", str(path))
        for idx, row in enumerate(data):
            if not isinstance(row, dict):
                raise NetworkFormatError("record must be an object", f"{path}[{idx}]")
            records.append(_parse_segment({k: "" if v is None else str(v) for k, v in row.items()}, f"{path}[{idx}]"))
    else:
        raise ValueError(f"unknown format {fmt!r}")

    if min_length is not None:
        for rec in records:
            if rec.length_m is None:
                raise NetworkFormatError(
                    f"min_length given but segment {rec.segment_id!r} has no length_m", str(path)
                )
        records = [r for r in records if r.length_m >= min_length]

    return RoadNetwork(records)


def _proportional_counts(n: int, fractions: Sequence[float]) -> List[int]:
    # cumulative rounding keeps every part within one segment of its target
    bounds = [int(round(sum(fractions[: k + 1]) * n)) for k in range(len(fractions))]
    bounds[-1] = n
    counts = []
    prev = 0
    for b in bounds:
        counts.append(b - prev)
        prev = b
    return counts


def split(
    net: RoadNetwork,
    mode: str = "random",
    fractions: Sequence[float] = (0.7, 0.15, 0.15),
    test_region: Optional[str] = None,
    seed: int = 0,
) -> Dict[str, str]:
    """Partition segments into train/validation/test.

    random mode shuffles all segments (deterministically under ``seed``)
    and cuts them to ``fractions`` = (train, validation, test), each part
    within one segment of its target. spatial mode takes every segment
    tagged ``test_region`` as the test set and splits the remainder 80/20
    into train/validation.
    """
    ids = sorted(s.segment_id for s in net.segments)
    rng = np.random.default_rng(seed)

    if mode == "random":
        if len(fractions) != 3:
            raise ValueError("fractions must be (train, validation, test)")
        if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
            raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
        order = [ids[i] for i in rng.permutation(len(ids))]
        n_train, n_val, n_test = _proportional_counts(len(order), fractions)
        out = {}
        for sid in order[:n_train]:
            out[sid] = "train"
        for sid in order[n_train : n_train + n_val]:
            out[sid] = "validation"
        for sid in order[n_train + n_val :]:
            out[sid] = "test"
        return out

    if mode == "spatial":
        if test_region is None:
            raise ValueError("spatial mode requires test_region")
        test_ids = [sid for sid in ids if net.segment(sid).region == test_region]
        if not test_ids:
            raise ValueError(f"unknown region tag: {test_region!r}")
        rest = [sid for sid in ids if net.segment(sid).region != test_region]
        order = [rest[i] for i in rng.permutation(len(rest))]
        n_train, n_val = _proportional_counts(len(order), (0.8, 0.2))
        out = {sid: "test" for sid in test_ids}
        for sid in order[:n_train]:
            out[sid] = "train"
        for sid in order[n_train:]:
            out[sid] = "validation"
        return out

    raise ValueError(f"unknown split mode {mode!r}")
