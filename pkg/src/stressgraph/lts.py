"""Exact LTS labeling from discretized road features.

The label is produced by a fixed decision list evaluated top to bottom;
the first matching rule wins. Labels are ordinal: 1 (least stressful)
through 4 (most stressful).
"""

from __future__ import annotations

from .features import (
    INFRA_BIKE_LANE,
    INFRA_CYCLE_TRACK,
    INFRA_MULTIUSE_PATH,
    PARKING_YES,
    ROAD_TRAIL,
    VOLUME_LOW,
    FeatureRecord,
    MissingFeatureError,
    lanes_per_direction,
)

LTS_LABELS = (1, 2, 3, 4)

# stress_class codes; symbolic names guard against 0/1 mixups
LOW_STRESS = 1
HIGH_STRESS = 0


def _require(rec: FeatureRecord, *names: str) -> None:
    for name in names:
        if getattr(rec, name) is None:
            raise MissingFeatureError(name)


def compute_lts(rec: FeatureRecord) -> int:
    """Apply the LTS decision list to one feature record.

    Only the fields consulted by the matched branch are required: the
    trail and cycle-track rules need road_type/infra alone, the painted
    bike lane branch needs parking, lanes, direction and speed, and the
    no-infrastructure branch needs speed, lanes and volume. A missing
    required field raises MissingFeatureError so callers can substitute
    predicted values and retry.
    """
    # Off-street facilities are stress-free regardless of anything else.
    if rec.road_type == ROAD_TRAIL:
        return 1
    if rec.infra is None:
        # without an infra code we cannot tell which branch applies
        raise MissingFeatureError("infra")
    if rec.infra == INFRA_MULTIUSE_PATH or rec.infra == INFRA_CYCLE_TRACK:
        return 1

    if rec.infra == INFRA_BIKE_LANE:
        _require(rec, "parking", "lanes", "direction", "speed")
        lpd = lanes_per_direction(rec)
        if rec.parking == PARKING_YES:
            if lpd == 1 and rec.speed <= 1:
                return 1
            if lpd == 1 and rec.speed <= 2:
                return 2
            if rec.speed <= 3:
                return 3
            return 4
        if lpd == 1 and rec.speed <= 2:
            return 1
        if lpd <= 2:
            return 2
        if rec.speed <= 3:
            return 3
        return 4

    # Mixed traffic, no dedicated cycling infrastructure.
    _require(rec, "speed", "lanes", "volume")
    if rec.speed <= 1 and rec.lanes <= 3:
        return 1 if rec.volume == VOLUME_LOW else 2
    if rec.speed <= 2 and rec.lanes <= 3:
        return 2 if rec.volume == VOLUME_LOW else 3
    # lane bin 5 ("five or more") is allowed to satisfy the <=5 lane rule
    if rec.speed <= 1 and rec.lanes <= 5:
        return 3
    return 4


def stress_class(y: int) -> int:
    """Binary stress projection: LTS 1/2 -> LOW_STRESS (1), LTS 3/4 -> HIGH_STRESS (0)."""
    if y not in LTS_LABELS:
        raise ValueError(f"LTS label must be in {LTS_LABELS}, got {y!r}")
    return LOW_STRESS if y <= 2 else HIGH_STRESS
