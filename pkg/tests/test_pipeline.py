import numpy as np
import pytest

from stressgraph.cart import fit
from stressgraph.features import FEATURE_NAMES, record_to_row
from stressgraph.pipeline import (
    SCENARIO_AVAILABLE,
    FusionModel,
    assemble_feature_rows,
    fuse_predict,
    predict_network,
    train_fusion,
)
from stressgraph.smoothing import TransitionMatrix
from stressgraph.synthgen import generate_pipeline_dataset


def zero_model(dim=4):
    return FusionModel(
        map_w=np.zeros((dim, 4)),
        map_b=np.zeros(dim),
        cls_w=np.zeros((4, dim)),
        cls_b=np.zeros(4),
    )


def leaf_identity_model():
    """With zero embeddings, reproduces the leaf distribution ordering."""
    return FusionModel(
        map_w=2.0 * np.eye(4),
        map_b=np.zeros(4),
        cls_w=np.eye(4),
        cls_b=np.zeros(4),
    )


class TestFusePredict:
    def test_zero_classifier_gives_uniform(self):
        probs = fuse_predict(zero_model(), np.ones(4), np.array([0.7, 0.1, 0.1, 0.1]))
        assert np.allclose(probs, 0.25)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        model = FusionModel(
            map_w=rng.normal(size=(6, 4)),
            map_b=rng.normal(size=6),
            cls_w=rng.normal(size=(4, 6)),
            cls_b=rng.normal(size=4),
        )
        emb = rng.normal(size=(10, 6))
        leaf = rng.dirichlet(np.ones(4), size=10)
        probs = fuse_predict(model, emb, leaf)
        assert probs.shape == (10, 4)
        assert np.allclose(probs.sum(axis=1), 1.0)

    def test_batch_permutation_equivariant(self):
        rng = np.random.default_rng(1)
        model = FusionModel(
            map_w=rng.normal(size=(5, 4)),
            map_b=np.zeros(5),
            cls_w=rng.normal(size=(4, 5)),
            cls_b=np.zeros(4),
        )
        emb = rng.normal(size=(12, 5))
        leaf = rng.dirichlet(np.ones(4), size=12)
        base = fuse_predict(model, emb, leaf)
        perm = rng.permutation(12)
        assert np.allclose(fuse_predict(model, emb[perm], leaf[perm]), base[perm])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fuse_predict(zero_model(4), np.ones(5), np.full(4, 0.25))
        with pytest.raises(ValueError):
            fuse_predict(zero_model(4), np.ones((2, 4)), np.full((3, 4), 0.25))


class TestTrainFusion:
    def make_learnable(self, n=200, dim=6, seed=0):
        rng = np.random.default_rng(seed)
        y = rng.integers(1, 5, size=n)
        emb = np.zeros((n, dim))
        emb[np.arange(n), y - 1] = 3.0
        emb += 0.3 * rng.standard_normal((n, dim))
        leaf = rng.dirichlet(np.ones(4), size=n)  # pure noise
        return emb, leaf, y

    def test_loss_decreases(self):
        emb, leaf, y = self.make_learnable()
        model = train_fusion(emb, leaf, y, epochs=150, seed=0)
        assert model.loss_history[-1] < model.loss_history[0]

    def test_deterministic(self):
        emb, leaf, y = self.make_learnable(seed=1)
        a = train_fusion(emb, leaf, y, epochs=60, seed=3)
        b = train_fusion(emb, leaf, y, epochs=60, seed=3)
        assert np.array_equal(a.cls_w, b.cls_w)
        assert a.loss_history == b.loss_history

    def test_fusion_beats_leaf_argmax_when_embeddings_carry_signal(self):
        # leaf distributions are right only 60% of the time; embeddings
        # encode the true label, so the trained head must beat leaf argmax
        rng = np.random.default_rng(5)
        n, dim = 400, 6
        y = rng.integers(1, 5, size=n)
        shown = np.where(rng.random(n) < 0.6, y, rng.integers(1, 5, size=n))
        leaf = np.full((n, 4), 0.1)
        leaf[np.arange(n), shown - 1] = 0.7
        emb = np.zeros((n, dim))
        emb[np.arange(n), y - 1] = 2.0
        emb += 0.4 * rng.standard_normal((n, dim))
        model = train_fusion(emb, leaf, y, epochs=400, lr=1.0, seed=0)
        fused_acc = float(np.mean(np.argmax(fuse_predict(model, emb, leaf), axis=1) + 1 == y))
        leaf_acc = float(np.mean(np.argmax(leaf, axis=1) + 1 == y))
        assert fused_acc >= leaf_acc + 0.05

    def test_inconsistent_inputs_rejected(self):
        with pytest.raises(ValueError):
            train_fusion(np.ones((3, 4)), np.ones((2, 4)), [1, 2, 3])


class TestAssembleRows:
    def test_scenario_masks(self):
        assert SCENARIO_AVAILABLE[1] == frozenset()
        assert SCENARIO_AVAILABLE[2] == frozenset({"road_type", "infra"})
        assert SCENARIO_AVAILABLE[3] == frozenset({"lanes", "speed"})

    def test_ground_truth_bypasses_predictions(self):
        ds = generate_pipeline_dataset(n=20, topology="chain", seed=0)
        net = ds.network
        wrong = {sid: 1 if ds.speed_labels[sid] != 1 else 2 for sid in ds.speed_labels}
        speed_col = FEATURE_NAMES.index("speed")
        # speed available: rows must carry the network's true speed bins
        rows = assemble_feature_rows(net, {"speed"}, {"speed": wrong})
        for pos, seg in enumerate(net.segments):
            assert rows[pos, speed_col] == seg.features.speed
        # speed not available: rows carry the (wrong) predicted labels
        rows = assemble_feature_rows(net, set(), {"speed": wrong})
        for pos, seg in enumerate(net.segments):
            assert rows[pos, speed_col] == wrong[seg.segment_id]

    def test_unsupplied_features_stay_missing(self):
        ds = generate_pipeline_dataset(n=5, topology="chain", seed=1)
        rows = assemble_feature_rows(ds.network, set(), {})
        assert np.all(rows == 0)

    def test_unknown_mask_rejected(self):
        ds = generate_pipeline_dataset(n=3, topology="chain", seed=2)
        with pytest.raises(ValueError):
            assemble_feature_rows(ds.network, {"surface"}, {})


class TestPredictNetwork:
    def setup_dataset(self, n=120, seed=0):
        ds = generate_pipeline_dataset(n=n, topology="chain", noise=0.3, seed=seed)
        net = ds.network
        recs = [seg.features for seg in net.segments]
        x = np.stack([record_to_row(r) for r in recs])
        y = np.array([seg.lts for seg in net.segments])
        tree = fit(x, y, max_depth=10)
        emb = {seg.segment_id: np.zeros(4) for seg in net.segments}
        return ds, net, tree, emb, y

    def test_degenerate_wiring_equals_cart_argmax(self):
        # zero embeddings + identity-from-leaf classifier: the pipeline's
        # prediction must equal the CART argmax over the assembled rows
        ds, net, tree, emb, y = self.setup_dataset()
        full = predict_network(
            net, 3,
            predicted={}, transitions={},
            embeddings=emb, tree=tree, fusion=leaf_identity_model(),
        )
        masked = assemble_feature_rows(net, SCENARIO_AVAILABLE[3], {})
        leaf_masked = np.stack([tree.leaf_distribution(r) for r in masked])
        expect = np.argmax(leaf_masked, axis=1) + 1
        got = np.array([full[s.segment_id].label for s in net.segments])
        assert np.array_equal(got, expect)

    def test_scenario1_uses_only_predictions(self):
        ds, net, tree, emb, y = self.setup_dataset(seed=3)
        preds = predict_network(
            net, 1,
            predicted={"speed": ds.speed_models},
            transitions={"speed": TransitionMatrix(ds.kernel)},
            embeddings=emb,
            tree=tree,
            fusion=leaf_identity_model(),
        )
        assert set(preds) == {s.segment_id for s in net.segments}
        for p in preds.values():
            assert p.probs.shape == (4,)
            assert p.probs.sum() == pytest.approx(1.0)
            assert p.leaf.sum() == pytest.approx(1.0)

    def test_presmoothed_labels_bypass_internal_smoothing(self):
        ds, net, tree, emb, y = self.setup_dataset(seed=4)
        from stressgraph.smoothing import adapt

        initial = {sid: int(np.argmax(m)) + 1 for sid, m in ds.speed_models.items()}
        result = adapt(net, initial, TransitionMatrix(ds.kernel), ds.speed_models)
        via_internal = predict_network(
            net, 1, {"speed": ds.speed_models}, {"speed": TransitionMatrix(ds.kernel)},
            emb, tree, leaf_identity_model(),
        )
        via_presmoothed = predict_network(
            net, 1, {"speed": ds.speed_models}, {},
            emb, tree, leaf_identity_model(), smoothed={"speed": result.labels},
        )
        for sid in via_internal:
            assert via_internal[sid].label == via_presmoothed[sid].label

    def test_deterministic_end_to_end(self):
        ds, net, tree, emb, y = self.setup_dataset(seed=5)
        kwargs = dict(
            predicted={"speed": ds.speed_models},
            transitions={"speed": TransitionMatrix(ds.kernel)},
            embeddings=emb, tree=tree, fusion=leaf_identity_model(),
        )
        a = predict_network(net, 1, **kwargs)
        b = predict_network(net, 1, **kwargs)
        assert all(a[s].label == b[s].label and np.array_equal(a[s].probs, b[s].probs) for s in a)

    def test_bad_scenario_rejected(self):
        ds, net, tree, emb, y = self.setup_dataset(seed=6)
        with pytest.raises(ValueError):
            predict_network(net, 4, {}, {}, emb, tree, leaf_identity_model())


class TestFusionModelSerialization:
    def test_json_roundtrip(self):
        rng = np.random.default_rng(2)
        model = FusionModel(
            map_w=rng.normal(size=(8, 4)),
            map_b=rng.normal(size=8),
            cls_w=rng.normal(size=(4, 8)),
            cls_b=rng.normal(size=4),
        )
        clone = FusionModel.from_json(model.to_json())
        emb = rng.normal(size=(5, 8))
        leaf = rng.dirichlet(np.ones(4), size=5)
        assert np.allclose(fuse_predict(clone, emb, leaf), fuse_predict(model, emb, leaf))
