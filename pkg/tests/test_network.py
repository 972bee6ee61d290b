import json

import pytest

from stressgraph.network import (
    NetworkFormatError,
    RoadNetwork,
    SegmentRecord,
    load_network,
    split,
)
from stressgraph.synthgen import GenConfig, generate

CSV_HEADER = "segment_id,node_a,node_b,region,road_type,direction,n_lanes_total,speed_kmh,infra_type,parking,daily_volume,lts\n"


def write_csv(tmp_path, rows, header=CSV_HEADER, name="net.csv"):
    path = tmp_path / name
    path.write_text(header + "".join(r + "\n" for r in rows))
    return path


class TestLoadNetwork:
    def test_chain_adjacency(self, tmp_path):
        path = write_csv(
            tmp_path,
            [
                "ab,A,B,,local,twoway,2,30,none,no,1000,",
                "bc,B,C,,local,twoway,2,30,none,no,1000,",
                "cd,C,D,,local,twoway,2,30,none,no,1000,",
            ],
        )
        net = load_network(path)
        assert set(net.neighbors("bc")) == {"ab", "cd"}
        assert set(net.neighbors("ab")) == {"bc"}

    def test_single_segment_has_no_neighbors(self, tmp_path):
        net = load_network(write_csv(tmp_path, ["s,A,B,,,,,,,,,"]))
        assert net.neighbors("s") == ()

    def test_duplicate_id_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["s,A,B,,,,,,,,,", "s,B,C,,,,,,,,,"])
        with pytest.raises(NetworkFormatError, match="duplicate id"):
            load_network(path)

    def test_missing_node_rejected_with_locus(self, tmp_path):
        path = write_csv(tmp_path, ["s,A,,,,,,,,,,"])
        with pytest.raises(NetworkFormatError, match="dangling node"):
            load_network(path)

    def test_parse_error_carries_line(self, tmp_path):
        path = write_csv(tmp_path, ["s,A,B,,,,two,,,,,"])
        with pytest.raises(NetworkFormatError, match=":2"):
            load_network(path)

    def test_self_loop_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["s,A,A,,,,,,,,,"])
        with pytest.raises(NetworkFormatError):
            load_network(path)

    def test_missing_columns_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("segment_id,node_a\ns,A\n")
        with pytest.raises(NetworkFormatError, match="missing required columns"):
            load_network(path)

    def test_features_and_lts_parsed(self, tmp_path):
        net = load_network(write_csv(tmp_path, ["s,A,B,york,arterial,twoway,4,52,bike_lane,yes,5000,3"]))
        seg = net.segment("s")
        assert seg.region == "york"
        assert seg.lts == 3
        assert seg.features.road_type == 1
        assert seg.features.speed == 3
        assert seg.features.volume == 2

    def test_json_mirror(self, tmp_path):
        records = [
            {"segment_id": "x", "node_a": "A", "node_b": "B", "speed_kmh": 45, "lts": 2},
            {"segment_id": "y", "node_a": "B", "node_b": "C"},
        ]
        path = tmp_path / "net.json"
        path.write_text(json.dumps(records))
        net = load_network(path)
        assert net.segment("x").features.speed == 2
        assert net.segment("x").lts == 2
        assert set(net.neighbors("y")) == {"x"}

    def test_min_length_filter(self, tmp_path):
        header = CSV_HEADER.rstrip("\n") + ",length_m\n"
        path = write_csv(tmp_path, ["a,A,B,,,,,,,,,,30", "b,B,C,,,,,,,,,,80"], header=header)
        assert len(load_network(path)) == 2
        net = load_network(path, min_length=50)
        assert [s.segment_id for s in net.segments] == ["b"]

    def test_min_length_requires_lengths(self, tmp_path):
        path = write_csv(tmp_path, ["a,A,B,,,,,,,,,"])
        with pytest.raises(NetworkFormatError, match="length_m"):
            load_network(path, min_length=50)

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_network("/nonexistent/net.csv")


class TestAdjacencyInvariants:
    @pytest.mark.parametrize("topology,n", [("chain", 30), ("grid", 60), ("random", 80)])
    def test_symmetry_and_irreflexivity(self, topology, n):
        net = generate(GenConfig(topology=topology, n_segments=n, seed=5)).network
        for i in range(len(net)):
            nbrs = net.neighbor_positions(i)
            assert i not in nbrs
            for j in nbrs:
                assert i in net.neighbor_positions(j)

    def test_node_index_consistent(self):
        net = generate(GenConfig(topology="random", n_segments=50, seed=9)).network
        for seg in net.segments:
            for node in (seg.node_a, seg.node_b):
                assert net.position(seg.segment_id) in net.node_index[node]


def toy_net(n=100, regions=None):
    segs = []
    for i in range(n):
        segs.append(
            SegmentRecord(
                segment_id=f"s{i:03d}",
                node_a=f"n{i}",
                node_b=f"n{i + 1}",
                region=regions[i] if regions else "",
            )
        )
    return RoadNetwork(segs)


class TestSplit:
    def test_random_exact_sizes(self):
        assignment = split(toy_net(100), "random", fractions=(0.7, 0.15, 0.15), seed=7)
        sizes = {p: sum(1 for v in assignment.values() if v == p) for p in ("train", "validation", "test")}
        assert sizes == {"train": 70, "validation": 15, "test": 15}

    def test_random_within_one_segment(self):
        for n in (17, 53, 101):
            assignment = split(toy_net(n), "random", fractions=(0.7, 0.15, 0.15), seed=3)
            for part, frac in (("train", 0.7), ("validation", 0.15), ("test", 0.15)):
                got = sum(1 for v in assignment.values() if v == part)
                assert abs(got - frac * n) <= 1

    def test_partition_total_and_disjoint(self):
        net = toy_net(97)
        assignment = split(net, "random", seed=1)
        assert set(assignment) == {s.segment_id for s in net.segments}

    def test_same_seed_identical(self):
        net = toy_net(64)
        assert split(net, "random", seed=11) == split(net, "random", seed=11)
        assert split(net, "random", seed=11) != split(net, "random", seed=12)

    def test_fractions_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            split(toy_net(10), "random", fractions=(0.5, 0.2, 0.2))

    def test_spatial(self):
        regions = ["york"] * 40 + ["rest"] * 60
        assignment = split(toy_net(100, regions), "spatial", test_region="york", seed=0)
        sizes = {p: sum(1 for v in assignment.values() if v == p) for p in ("train", "validation", "test")}
        assert sizes == {"test": 40, "train": 48, "validation": 12}
        for i in range(40):
            assert assignment[f"s{i:03d}"] == "test"

    def test_spatial_unknown_region(self):
        with pytest.raises(ValueError, match="unknown region"):
            split(toy_net(10, ["a"] * 10), "spatial", test_region="nowhere")
