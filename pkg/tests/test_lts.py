import pytest

from stressgraph.features import FeatureRecord, MissingFeatureError, iter_feature_grid, lanes_per_direction
from stressgraph.lts import HIGH_STRESS, LOW_STRESS, compute_lts, stress_class


def rec(rt=None, d=None, ln=None, sp=None, inf=None, pk=None, vol=None):
    return FeatureRecord(road_type=rt, direction=d, lanes=ln, speed=sp, infra=inf, parking=pk, volume=vol)


# Golden table transcribed by hand from the published LTS decision rules.
# Columns: (road_type, direction, lanes, speed, infra, parking, volume) -> label.
GOLDEN = [
    # off-street facilities
    (rec(rt=3, d=2, ln=2, sp=2, inf=4, pk=2, vol=1), 1),   # trail road class
    (rec(rt=3, d=1, ln=5, sp=4, inf=4, pk=1, vol=2), 1),   # walkway class beats hostile features
    (rec(rt=3, d=2, ln=1, sp=4, inf=1, pk=1, vol=2), 1),   # trail with a painted lane still off-street
    (rec(rt=2, d=2, ln=2, sp=2, inf=3, pk=2, vol=2), 1),   # multi-use pathway infra
    (rec(rt=1, d=2, ln=4, sp=4, inf=2, pk=1, vol=2), 1),   # cycle track on a big arterial
    (rec(rt=1, d=2, ln=2, sp=1, inf=2, pk=2, vol=1), 1),   # cycle track, benign street
    # painted bike lane, with on-street parking
    (rec(rt=1, d=2, ln=2, sp=1, inf=1, pk=1, vol=2), 1),   # 1 lane/dir, <=40
    (rec(rt=2, d=1, ln=1, sp=1, inf=1, pk=1, vol=1), 1),
    (rec(rt=1, d=2, ln=2, sp=2, inf=1, pk=1, vol=1), 2),   # 1 lane/dir, <=48
    (rec(rt=1, d=2, ln=2, sp=3, inf=1, pk=1, vol=1), 3),   # <=56 fallback
    (rec(rt=1, d=2, ln=2, sp=4, inf=1, pk=1, vol=1), 4),
    (rec(rt=1, d=2, ln=3, sp=1, inf=1, pk=1, vol=1), 3),   # 2 lanes/dir never reaches LTS1/2 with parking
    (rec(rt=1, d=1, ln=2, sp=2, inf=1, pk=1, vol=1), 3),   # one-way 2 lanes = 2 per direction
    (rec(rt=1, d=2, ln=4, sp=4, inf=1, pk=1, vol=2), 4),
    # painted bike lane, no parking
    (rec(rt=1, d=2, ln=2, sp=1, inf=1, pk=2, vol=2), 1),
    (rec(rt=1, d=2, ln=2, sp=2, inf=1, pk=2, vol=1), 1),   # 1 lane/dir, <=48 -> LTS1
    (rec(rt=1, d=2, ln=2, sp=3, inf=1, pk=2, vol=1), 2),   # falls to one/two-lanes rule
    (rec(rt=2, d=2, ln=4, sp=2, inf=1, pk=2, vol=1), 2),   # 2 lanes/dir
    (rec(rt=1, d=2, ln=4, sp=4, inf=1, pk=2, vol=2), 2),   # the one/two-lane rule has no speed clause
    (rec(rt=1, d=1, ln=3, sp=3, inf=1, pk=2, vol=1), 3),   # 3 lanes/dir, <=56
    (rec(rt=1, d=2, ln=5, sp=4, inf=1, pk=2, vol=1), 4),
    (rec(rt=1, d=1, ln=5, sp=4, inf=1, pk=2, vol=2), 4),
    # mixed traffic, no cycling infrastructure
    (rec(rt=2, d=2, ln=2, sp=1, inf=4, pk=2, vol=1), 1),   # <=40, <=3 lanes, low volume
    (rec(rt=2, d=1, ln=1, sp=1, inf=4, pk=2, vol=1), 1),
    (rec(rt=2, d=2, ln=3, sp=1, inf=4, pk=2, vol=2), 2),   # ... high volume
    (rec(rt=1, d=2, ln=2, sp=2, inf=4, pk=1, vol=1), 2),   # <=48, <=3 lanes, low volume
    (rec(rt=1, d=2, ln=3, sp=2, inf=4, pk=2, vol=2), 3),   # ... high volume
    (rec(rt=1, d=2, ln=4, sp=1, inf=4, pk=1, vol=2), 3),   # <=40 with 4 lanes
    (rec(rt=1, d=2, ln=5, sp=1, inf=4, pk=2, vol=1), 3),   # <=40 with 5+ lanes
    (rec(rt=1, d=2, ln=4, sp=2, inf=4, pk=2, vol=1), 4),   # 41-48 km/h with 4 lanes falls through
    (rec(rt=1, d=2, ln=1, sp=3, inf=4, pk=2, vol=1), 4),   # 49-56 km/h mixed traffic is always LTS4
    (rec(rt=1, d=2, ln=5, sp=4, inf=4, pk=1, vol=2), 4),
]


class TestGoldenTable:
    def test_covers_enough_cases(self):
        assert len(GOLDEN) >= 25

    @pytest.mark.parametrize("record,expected", GOLDEN)
    def test_golden(self, record, expected):
        assert compute_lts(record) == expected


class TestGridProperties:
    def test_totality_and_determinism(self):
        labels = [compute_lts(r) for r in iter_feature_grid()]
        assert len(labels) == 1920
        assert set(labels) <= {1, 2, 3, 4}
        assert labels == [compute_lts(r) for r in iter_feature_grid()]

    def test_speed_monotonicity_no_infra(self):
        # holding lanes and volume fixed, faster is never less stressful
        for rt in (1, 2):
            for d in (1, 2):
                for ln in range(1, 6):
                    for pk in (1, 2):
                        for vol in (1, 2):
                            seq = [compute_lts(rec(rt, d, ln, sp, 4, pk, vol)) for sp in (1, 2, 3, 4)]
                            assert all(a <= b for a, b in zip(seq, seq[1:])), seq

    def test_speed_monotonicity_bike_lane(self):
        for rt in (1, 2):
            for d in (1, 2):
                for ln in range(1, 6):
                    for pk in (1, 2):
                        for vol in (1, 2):
                            seq = [compute_lts(rec(rt, d, ln, sp, 1, pk, vol)) for sp in (1, 2, 3, 4)]
                            assert all(a <= b for a, b in zip(seq, seq[1:])), seq


def independent_low_stress(r: FeatureRecord) -> int:
    """Two-way low/high oracle coded flat, without the 4-level label."""
    if r.road_type == 3 or r.infra in (2, 3):
        return 1
    if r.infra == 1:
        lpd = lanes_per_direction(r)
        if r.parking == 1:
            return 1 if (lpd == 1 and r.speed <= 2) else 0
        return 1 if lpd <= 2 else 0
    low = (r.speed == 1 and r.lanes <= 3) or (r.speed == 2 and r.lanes <= 3 and r.volume == 1)
    return 1 if low else 0


class TestStressClass:
    @pytest.mark.parametrize("y,expected", [(1, 1), (2, 1), (3, 0), (4, 0)])
    def test_projection(self, y, expected):
        assert stress_class(y) == expected

    def test_symbolic_names(self):
        assert LOW_STRESS == 1 and HIGH_STRESS == 0

    def test_invalid_label(self):
        with pytest.raises(ValueError):
            stress_class(5)

    def test_against_independent_two_way_table(self):
        for r in iter_feature_grid():
            assert stress_class(compute_lts(r)) == independent_low_stress(r), r


class TestMissingFields:
    def test_trail_needs_nothing_else(self):
        assert compute_lts(rec(rt=3)) == 1

    def test_cycle_track_needs_only_infra(self):
        assert compute_lts(rec(inf=2)) == 1
        assert compute_lts(rec(inf=3)) == 1

    def test_no_infra_dispatch_requires_infra(self):
        with pytest.raises(MissingFeatureError) as exc:
            compute_lts(rec(sp=1, ln=2, vol=1))
        assert exc.value.field == "infra"

    def test_bike_lane_branch_names_missing_field(self):
        with pytest.raises(MissingFeatureError) as exc:
            compute_lts(rec(inf=1, ln=2, d=2, sp=1))
        assert exc.value.field == "parking"
        with pytest.raises(MissingFeatureError) as exc:
            compute_lts(rec(inf=1, pk=1, d=2, sp=1))
        assert exc.value.field == "lanes"

    def test_no_infra_branch_names_missing_field(self):
        with pytest.raises(MissingFeatureError) as exc:
            compute_lts(rec(inf=4, ln=2, vol=1))
        assert exc.value.field == "speed"
        with pytest.raises(MissingFeatureError) as exc:
            compute_lts(rec(inf=4, sp=1, ln=2))
        assert exc.value.field == "volume"
