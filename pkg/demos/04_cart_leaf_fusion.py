"""Fit the CART classifier and fuse its leaf distributions with embeddings.

The labels come straight from the exact LTS rules on random feature grids,
so a deep enough tree recovers them almost perfectly; cross-validated grid
search confirms it. The second half degrades the tree's information (only
the speed bin is available) and shows the fusion head recovering accuracy
from label-bearing embeddings.
"""

import numpy as np

from stressgraph import GridSpec, compute_lts, fit, fuse_predict, grid_search, train_fusion
from stressgraph.features import record_to_row
from stressgraph.synthgen import sample_feature_records

recs = sample_feature_records(3000, seed=0)
x = np.stack([record_to_row(r) for r in recs])
y = np.array([compute_lts(r) for r in recs])

grid = GridSpec(criteria=("gini", "entropy"), max_depths=(4, 6, 8, 10), min_samples_splits=(2,), folds=10)
best, table = grid_search(x, y, grid=grid, seed=0)
print(f"grid search over {len(table)} cells -> best {best['criterion']}, depth {best['max_depth']}, "
      f"CV accuracy {best['mean_accuracy']:.3f}")

# --- degrade the tree, then fuse with informative embeddings -----------

speed_only = x.copy()
speed_only[:, [0, 1, 2, 4, 5, 6]] = 1  # constant away everything but speed
tree = fit(speed_only, y, max_depth=10)
leaf = np.stack([tree.leaf_distribution(row) for row in speed_only])
leaf_acc = np.mean(np.argmax(leaf, axis=1) + 1 == y)

rng = np.random.default_rng(1)
emb = np.zeros((y.size, 8))
emb[np.arange(y.size), y - 1] = 2.0
emb += 0.5 * rng.standard_normal(emb.shape)

fusion = train_fusion(emb, leaf, y, epochs=300, lr=0.5, seed=0)
fused_acc = np.mean(np.argmax(fuse_predict(fusion, emb, leaf), axis=1) + 1 == y)
print(f"speed-only leaf argmax accuracy:  {leaf_acc:.3f}")
print(f"fused (leaf + embedding) accuracy: {fused_acc:.3f}")
