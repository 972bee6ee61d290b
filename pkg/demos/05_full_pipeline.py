"""Drive the whole two-step predictor through the command-line interface.

Generates a synthetic 600-segment network bundle, trains the ordinal
contrastive encoder, grid-fits the CART model, smooths the noisy speed
predictions, runs the fused predictor in data-availability scenario 2
(road type and cycling infrastructure known), and scores the held-out
test split. Everything lands in ./pipeline_demo/.
"""

import json
from pathlib import Path

from stressgraph.cli import dispatch

out = Path("pipeline_demo")
seed = "11"


def run(*argv):
    rc = dispatch([str(a) for a in argv])
    if rc != 0:
        raise SystemExit(rc)


run("gen", "--topology", "chain", "--n", "600", "--noise", "0.3",
    "--seed", seed, "--out-dir", out)
run("train-ordcon", "--data", out / "contrastive.csv", "--epochs", "60",
    "--queue", "256", "--seed", seed, "--out-dir", out)
(out / "grid.json").write_text(json.dumps(
    {"criteria": ["gini", "entropy"], "max_depths": [8, 10], "min_samples_splits": [2], "folds": 10}))
run("fit-cart", "--data", out / "network.csv", "--grid", out / "grid.json",
    "--seed", seed, "--out-dir", out)
run("smooth", "--network", out / "network.csv", "--predictions", out / "speed_preds.csv",
    "--transitions", out / "transitions.csv", "--seed", seed, "--out-dir", out)
run("predict", "--network", out / "network.csv", "--scenario", "2",
    "--embeddings", out / "embeddings.csv",
    "--feature-preds", f"speed={out / 'speed_preds.csv'}",
    "--smoothed", f"speed={out / 'smoothed.csv'}",
    "--tree", out / "tree.json",
    "--fit-fusion-labels", out / "lts_train.csv",
    "--fusion-out", out / "fusion.json",
    "--seed", seed, "--out-dir", out)
run("eval", "--truth", out / "lts_test.csv", "--pred", out / "predictions.csv",
    "--out-dir", out)
