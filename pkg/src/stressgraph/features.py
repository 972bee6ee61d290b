"""Road-feature domain types and discretization.

Every LTS-relevant road feature is carried as a small categorical code.
Continuous quantities (speed, lane count, daily traffic volume) are binned
here; string-valued features are mapped through fixed vocabularies. A value
of ``None`` means the feature is unknown for that segment, which is a
first-class state: downstream consumers either error out or substitute a
predicted value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterator, Optional

import numpy as np

# Category codes. Road type 3 covers trails and walkways; infra 4 covers
# "other or no cycling infrastructure".
ROAD_ARTERIAL = 1
ROAD_LOCAL = 2
ROAD_TRAIL = 3

DIR_ONEWAY = 1
DIR_TWOWAY = 2

INFRA_BIKE_LANE = 1
INFRA_CYCLE_TRACK = 2
INFRA_MULTIUSE_PATH = 3
INFRA_NONE = 4

PARKING_YES = 1
PARKING_NO = 2

VOLUME_LOW = 1
VOLUME_HIGH = 2

HIGH_VOLUME_THRESHOLD = 3000.0  # vehicles/day

# Raw string vocabularies (case-insensitive on input).
ROAD_TYPE_VOCAB = {
    "arterial": ROAD_ARTERIAL,
    "arterial_ramp": ROAD_ARTERIAL,
    "collector": ROAD_LOCAL,
    "access": ROAD_LOCAL,
    "laneway": ROAD_LOCAL,
    "local": ROAD_LOCAL,
    "other": ROAD_LOCAL,
    "trail": ROAD_TRAIL,
    "walkway": ROAD_TRAIL,
}
INFRA_VOCAB = {
    "bike_lane": INFRA_BIKE_LANE,
    "cycle_track": INFRA_CYCLE_TRACK,
    "multiuse_path": INFRA_MULTIUSE_PATH,
    "none": INFRA_NONE,
    "other": INFRA_NONE,
}
PARKING_VOCAB = {"yes": PARKING_YES, "no": PARKING_NO}
DIRECTION_VOCAB = {"oneway": DIR_ONEWAY, "twoway": DIR_TWOWAY}

# Canonical feature order used wherever records become matrix rows.
FEATURE_NAMES = ("road_type", "direction", "lanes", "speed", "infra", "parking", "volume")
FEATURE_CARDINALITY = {
    "road_type": 3,
    "direction": 2,
    "lanes": 5,
    "speed": 4,
    "infra": 4,
    "parking": 2,
    "volume": 2,
}
# Speed and lane bins are ordered; the rest are nominal.
ORDINAL_FEATURES = frozenset({"speed", "lanes"})

MISSING = 0  # matrix-row sentinel; valid codes start at 1


class UnknownCategoryError(ValueError):
    """A raw categorical string is not in its vocabulary."""

    def __init__(self, field: str, value: str):
        super().__init__(f"unknown {field} value: {value!r}")
        self.field = field
        self.value = value


class MissingFeatureError(ValueError):
    """A required feature is absent from a record."""

    def __init__(self, field: str):
        super().__init__(f"missing feature: {field}")
        self.field = field


@dataclass(frozen=True)
class RawFeatures:
    """Undigested road features as they arrive from a data file."""

    road_type: Optional[str] = None
    direction: Optional[str] = None
    n_lanes_total: Optional[int] = None
    speed_kmh: Optional[float] = None
    infra: Optional[str] = None
    parking: Optional[str] = None
    daily_volume: Optional[float] = None

    def __post_init__(self):
        if self.speed_kmh is not None and self.speed_kmh < 0:
            raise ValueError(f"speed_kmh must be >= 0, got {self.speed_kmh}")
        if self.n_lanes_total is not None and self.n_lanes_total < 1:
            raise ValueError(f"n_lanes_total must be >= 1, got {self.n_lanes_total}")
        if self.daily_volume is not None and self.daily_volume < 0:
            raise ValueError(f"daily_volume must be >= 0, got {self.daily_volume}")


@dataclass(frozen=True)
class FeatureRecord:
    """Discretized LTS-relevant features of one road segment.

    All fields are categorical codes starting at 1, or ``None`` when the
    feature is unknown. ``lanes`` counts total lanes across both directions
    (bin 5 means five or more).
    """

    road_type: Optional[int] = None
    direction: Optional[int] = None
    lanes: Optional[int] = None
    speed: Optional[int] = None
    infra: Optional[int] = None
    parking: Optional[int] = None
    volume: Optional[int] = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            hi = FEATURE_CARDINALITY[f.name]
            if not isinstance(v, (int, np.integer)) or not 1 <= v <= hi:
                raise ValueError(f"{f.name} must be in 1..{hi} or None, got {v!r}")


def speed_bin(speed_kmh: float) -> int:
    """Bin a speed in km/h: [0,40] -> 1, (40,48] -> 2, (48,56] -> 3, (56,inf) -> 4.

    56 km/h lands in bin 3 so the "speed <= 56" rule stays representable
    on bins.
    """
    if speed_kmh < 0:
        raise ValueError(f"speed must be >= 0, got {speed_kmh}")
    if speed_kmh <= 40:
        return 1
    if speed_kmh <= 48:
        return 2
    if speed_kmh <= 56:
        return 3
    return 4


def lanes_bin(n_lanes_total: int) -> int:
    """Bin a total lane count: 1..4 map to themselves, 5 or more to 5."""
    if n_lanes_total < 1:
        raise ValueError(f"lane count must be >= 1, got {n_lanes_total}")
    return min(int(n_lanes_total), 5)


def volume_bin(daily_volume: float) -> int:
    """Binarize daily motor traffic volume at 3000 vehicles/day."""
    if daily_volume < 0:
        raise ValueError(f"volume must be >= 0, got {daily_volume}")
    return VOLUME_LOW if daily_volume <= HIGH_VOLUME_THRESHOLD else VOLUME_HIGH


def _lookup(vocab: dict, field: str, value: Optional[str]) -> Optional[int]:
    if value is None:
        return None
    key = value.strip().lower()
    if key == "":
        return None
    if key not in vocab:
        raise UnknownCategoryError(field, value)
    return vocab[key]


def discretize(raw: RawFeatures) -> FeatureRecord:
    """Map raw feature values onto the categorical alphabets.

    Unknown (None) inputs stay unknown. Raises UnknownCategoryError for a
    string outside its vocabulary.
    """
    return FeatureRecord(
        road_type=_lookup(ROAD_TYPE_VOCAB, "road_type", raw.road_type),
        direction=_lookup(DIRECTION_VOCAB, "direction", raw.direction),
        lanes=None if raw.n_lanes_total is None else lanes_bin(raw.n_lanes_total),
        speed=None if raw.speed_kmh is None else speed_bin(raw.speed_kmh),
        infra=_lookup(INFRA_VOCAB, "infra", raw.infra),
        parking=_lookup(PARKING_VOCAB, "parking", raw.parking),
        volume=None if raw.daily_volume is None else volume_bin(raw.daily_volume),
    )


def lanes_per_direction(rec: FeatureRecord) -> int:
    """Per-direction lane count from the total-lanes bin.

    Bidirectional roads get ceil(total/2); one-way roads carry all lanes in
    one direction. Requires both ``lanes`` and ``direction``.
    """
    if rec.lanes is None:
        raise MissingFeatureError("lanes")
    if rec.direction is None:
        raise MissingFeatureError("direction")
    if rec.direction == DIR_TWOWAY:
        return math.ceil(rec.lanes / 2)
    return rec.lanes


def record_to_row(rec: FeatureRecord) -> np.ndarray:
    """Encode a record as an int row in FEATURE_NAMES order (0 = missing)."""
    vals = (rec.road_type, rec.direction, rec.lanes, rec.speed, rec.infra, rec.parking, rec.volume)
    return np.array([MISSING if v is None else v for v in vals], dtype=np.int64)


def row_to_record(row) -> FeatureRecord:
    vals = [None if int(v) == MISSING else int(v) for v in row]
    return FeatureRecord(*vals)


def iter_feature_grid() -> Iterator[FeatureRecord]:
    """Yield all fully-specified records: the 1,920-combination grid."""
    for rt in range(1, 4):
        for d in range(1, 3):
            for ln in range(1, 6):
                for sp in range(1, 5):
                    for inf in range(1, 5):
                        for pk in range(1, 3):
                            for vol in range(1, 3):
                                yield FeatureRecord(rt, d, ln, sp, inf, pk, vol)
