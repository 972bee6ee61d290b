"""Unified command-line entry point.

Subcommands: lts, smooth, train-ordcon, fit-cart, predict, eval, gen.
Every run takes a --seed and an --out-dir, writes its resolved arguments
next to its outputs as <command>_config.json, and is byte-reproducible
under identical inputs. Failures print a single "error: ..." line on
stderr and exit 1; usage problems exit 2. The STRESSGRAPH_THREADS
environment variable caps internal parallelism (modules may parallelize
per their contracts; the current implementations are sequential).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import cart, contrastive, metrics, pipeline, smoothing, synthgen
from .features import FEATURE_NAMES, MissingFeatureError, record_to_row
from .lts import compute_lts
from .network import SEGMENT_COLUMNS, RoadNetwork, load_network, split


def thread_cap() -> int:
    """Parallelism budget: STRESSGRAPH_THREADS if set, else all cores."""
    raw = os.environ.get("STRESSGRAPH_THREADS", "").strip()
    if raw:
        cap = int(raw)
        if cap < 1:
            raise ValueError("STRESSGRAPH_THREADS must be >= 1")
        return cap
    return os.cpu_count() or 1


def _fmt(v: float) -> str:
    return f"{float(v):.12g}"


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _read_label_csv(path) -> Dict[str, int]:
    """Two-column id,label file; blank labels are skipped."""
    out: Dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ValueError(f"{path}: expected an id,label header")
        for row in reader:
            if len(row) < 2 or not row[1].strip():
                continue
            out[row[0]] = int(float(row[1]))
    return out


def _read_vector_csv(path, prefix: str) -> Tuple[Dict[str, np.ndarray], int]:
    """id,<prefix>_1..<prefix>_k file -> (id -> vector, k)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ValueError(f"{path}: expected id,{prefix}_1..{prefix}_k header")
        k = len(header) - 1
        out: Dict[str, np.ndarray] = {}
        for row in reader:
            if not row:
                continue
            if len(row) != k + 1:
                raise ValueError(f"{path}: row for {row[0]!r} has {len(row) - 1} values, expected {k}")
            out[row[0]] = np.array([float(v) for v in row[1:]])
    return out, k


def _read_transitions_csv(path) -> smoothing.TransitionMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty transition file")
        k = len(header)
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) != k or any(len(r) != k for r in rows):
        raise ValueError(f"{path}: expected a {k}x{k} matrix after the header")
    return smoothing.TransitionMatrix(np.array(rows))


def _write_transitions_csv(path: Path, probs: np.ndarray) -> None:
    k = probs.shape[0]
    _write_csv(path, [str(i + 1) for i in range(k)], ([_fmt(v) for v in row] for row in probs))


def _write_network_csv(path: Path, net: RoadNetwork, label_override: Optional[Dict[str, int]] = None) -> None:
    rows = []
    for seg in net.segments:
        f = seg.features
        lts = seg.lts
        if label_override is not None:
            lts = label_override.get(seg.segment_id, lts)
        rows.append(
            [
                seg.segment_id,
                seg.node_a,
                seg.node_b,
                seg.region,
                "" if f.road_type is None else synthgen.ROAD_TYPE_REPRESENTATIVE[f.road_type],
                "" if f.direction is None else synthgen.DIRECTION_REPRESENTATIVE[f.direction],
                "" if f.lanes is None else str(synthgen.LANES_REPRESENTATIVE[f.lanes]),
                "" if f.speed is None else _fmt(synthgen.SPEED_REPRESENTATIVE[f.speed]),
                "" if f.infra is None else synthgen.INFRA_REPRESENTATIVE[f.infra],
                "" if f.parking is None else synthgen.PARKING_REPRESENTATIVE[f.parking],
                "" if f.volume is None else _fmt(synthgen.VOLUME_REPRESENTATIVE[f.volume]),
                "" if lts is None else str(lts),
            ]
        )
    _write_csv(path, SEGMENT_COLUMNS, rows)


def _echo_config(args: argparse.Namespace, out_dir: Path) -> None:
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    with open(out_dir / f"{args.command.replace('-', '_')}_config.json", "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, indent=1, sort_keys=True, default=str)
        fh.write("\n")


def _feature_path_pairs(values: Optional[List[str]], flag: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for item in values or []:
        if "=" not in item:
            raise ValueError(f"{flag} expects feature=path, got {item!r}")
        name, path = item.split("=", 1)
        if name not in FEATURE_NAMES:
            raise ValueError(f"{flag}: unknown feature {name!r}; known: {FEATURE_NAMES}")
        out[name] = path
    return out


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


# ---------------------------------------------------------------- commands


def cmd_lts(args) -> int:
    net = load_network(args.network, fmt=args.format)
    rows = []
    n_blank = 0
    for seg in net.segments:
        try:
            label = str(compute_lts(seg.features))
        except MissingFeatureError as exc:
            if args.strict_missing:
                raise ValueError(f"segment {seg.segment_id!r}: {exc}") from exc
            label = ""
            n_blank += 1
        rows.append([seg.segment_id, label])
    out = Path(args.out) if args.out else Path(args.out_dir) / "lts.csv"
    _write_csv(out, ["segment_id", "lts"], rows)
    _say(args, f"wrote {out} ({len(rows)} segments, {n_blank} blank)")
    return 0


def cmd_smooth(args) -> int:
    net = load_network(args.network)
    preds, k = _read_vector_csv(args.predictions, "p")
    missing = [seg.segment_id for seg in net.segments if seg.segment_id not in preds]
    if missing:
        raise ValueError(f"predictions missing for {len(missing)} segments, e.g. {missing[0]!r}")
    if args.transitions:
        trans = _read_transitions_csv(args.transitions)
        if trans.n_categories != k:
            raise ValueError(f"transition matrix is {trans.n_categories}x but predictions have {k} categories")
    elif args.train_labels:
        labels = _read_label_csv(args.train_labels)
        trans = smoothing.estimate_transitions(net, labels, k, alpha=args.alpha)
    else:
        raise ValueError("need --transitions or --train-labels")
    initial = {sid: int(np.argmax(p)) + 1 for sid, p in preds.items()}
    result = smoothing.adapt(net, initial, trans, preds, max_iters=args.max_iters)
    out_dir = Path(args.out_dir)
    rows = [
        [seg.segment_id, str(result.labels[seg.segment_id]), str(int(result.labels[seg.segment_id] != initial[seg.segment_id]))]
        for seg in net.segments
    ]
    out = Path(args.out) if args.out else out_dir / "smoothed.csv"
    _write_csv(out, ["segment_id", "label", "changed"], rows)
    if args.save_transitions:
        _write_transitions_csv(Path(args.save_transitions), trans.probs)
    changed = sum(int(r[2]) for r in rows)
    _say(args, f"wrote {out} (converged={result.converged}, sweeps={result.iterations}, changed={changed})")
    return 0


def cmd_train_ordcon(args) -> int:
    with open(args.data, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3 or header[-1] != "y":
            raise ValueError(f"{args.data}: expected sample_id,x_1..x_p,y header")
        ids, xs, ys = [], [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            xs.append([float(v) for v in row[1:-1]])
            ys.append(int(float(row[-1])))
    x = np.array(xs)
    y = np.array(ys, dtype=np.int64)
    weights = tuple(float(w) for w in args.weights.split(","))
    config = contrastive.TrainConfig(
        loss=args.loss,
        levels=args.levels,
        weights=weights,
        tau=args.tau,
        momentum=args.momentum,
        queue_capacity=args.queue,
        encoder_dim=args.dim,
        proj_dim=args.proj_dim,
        epochs=args.epochs,
        lr=args.lr,
        aug_noise=args.aug_noise,
        seed=args.seed,
    )
    state, history = contrastive.train_toy(config, x, y)
    emb = contrastive.encoder_embeddings(state, x)
    out_dir = Path(args.out_dir)
    _write_csv(
        out_dir / "embeddings.csv",
        ["sample_id"] + [f"e_{j + 1}" for j in range(emb.shape[1])],
        ([sid] + [_fmt(v) for v in emb[i]] for i, sid in enumerate(ids)),
    )
    _write_csv(
        out_dir / "loss_history.csv",
        ["epoch", "loss"],
        ([str(e + 1), _fmt(v)] for e, v in enumerate(history)),
    )
    _say(args, f"trained {args.loss} for {args.epochs} epochs: loss {history[0]:.4f} -> {history[-1]:.4f}")
    return 0


def cmd_fit_cart(args) -> int:
    net = load_network(args.data)
    rows, labels = [], []
    for seg in net.segments:
        if seg.lts is None:
            continue
        r = record_to_row(seg.features)
        if np.any(r == 0):
            continue
        rows.append(r)
        labels.append(seg.lts)
    if not rows:
        raise ValueError("no segments with complete features and an lts label")
    x = np.stack(rows)
    y = np.array(labels, dtype=np.int64)
    if args.grid:
        with open(args.grid, encoding="utf-8") as fh:
            spec = json.load(fh)
        grid = cart.GridSpec(
            criteria=tuple(spec.get("criteria", cart.GridSpec.criteria)),
            max_depths=tuple(spec.get("max_depths", cart.GridSpec.max_depths)),
            min_samples_splits=tuple(spec.get("min_samples_splits", cart.GridSpec.min_samples_splits)),
            folds=int(spec.get("folds", args.folds)),
        )
    else:
        grid = cart.GridSpec(folds=args.folds)
    best, table = cart.grid_search(x, y, grid=grid, seed=args.seed)
    tree = cart.fit(
        x, y,
        criterion=best["criterion"],
        max_depth=best["max_depth"],
        min_samples_split=best["min_samples_split"],
    )
    out_dir = Path(args.out_dir)
    with open(out_dir / "tree.json", "w", encoding="utf-8") as fh:
        fh.write(tree.to_json())
        fh.write("\n")
    _write_csv(
        out_dir / "cv_table.csv",
        ["criterion", "max_depth", "min_samples_split", "mean_accuracy", "std_accuracy"],
        (
            [r["criterion"], str(r["max_depth"]), _fmt(r["min_samples_split"]), _fmt(r["mean_accuracy"]), _fmt(r["std_accuracy"])]
            for r in table
        ),
    )
    _say(
        args,
        f"best: {best['criterion']} depth={best['max_depth']} min_split={best['min_samples_split']} "
        f"cv_acc={best['mean_accuracy']:.4f} (n={y.size})",
    )
    return 0


def cmd_predict(args) -> int:
    net = load_network(args.network)
    embeddings, _ = _read_vector_csv(args.embeddings, "e")
    with open(args.tree, encoding="utf-8") as fh:
        tree = cart.DecisionTree.from_json(fh.read())

    predicted = {}
    for name, path in _feature_path_pairs(args.feature_preds, "--feature-preds").items():
        predicted[name], _ = _read_vector_csv(path, "p")
    transitions = {}
    for name, path in _feature_path_pairs(args.transitions, "--transitions").items():
        transitions[name] = _read_transitions_csv(path)
    smoothed = {}
    for name, path in _feature_path_pairs(args.smoothed, "--smoothed").items():
        smoothed[name] = _read_label_csv(path)

    available = pipeline.SCENARIO_AVAILABLE[args.scenario]
    feature_labels = pipeline.predicted_feature_labels(
        net, available, predicted, transitions, smoothed or None, max_iters=args.max_iters
    )
    rows = pipeline.assemble_feature_rows(net, available, feature_labels)
    leaf = pipeline.leaf_distributions_for(net, tree, rows)
    emb = np.stack([embeddings[seg.segment_id] for seg in net.segments])

    if args.fusion and Path(args.fusion).exists():
        with open(args.fusion, encoding="utf-8") as fh:
            fusion = pipeline.FusionModel.from_json(fh.read())
    elif args.fit_fusion_labels:
        fit_labels = _read_label_csv(args.fit_fusion_labels)
        pos = [net.position(sid) for sid in sorted(fit_labels) if sid in net]
        if not pos:
            raise ValueError("--fit-fusion-labels matched no segments in the network")
        y_fit = np.array([fit_labels[net.segments[p].segment_id] for p in pos], dtype=np.int64)
        fusion = pipeline.train_fusion(
            emb[pos], leaf[pos], y_fit,
            epochs=args.fusion_epochs, lr=args.fusion_lr, seed=args.seed,
        )
        if args.fusion_out:
            with open(args.fusion_out, "w", encoding="utf-8") as fh:
                fh.write(fusion.to_json())
                fh.write("\n")
    else:
        raise ValueError("need --fusion (existing model) or --fit-fusion-labels (to train one)")

    probs = pipeline.fuse_predict(fusion, emb, leaf)
    out = Path(args.out) if args.out else Path(args.out_dir) / "predictions.csv"
    _write_csv(
        out,
        ["segment_id", "lts_pred", "p1", "p2", "p3", "p4"],
        (
            [seg.segment_id, str(int(np.argmax(probs[i])) + 1)] + [_fmt(v) for v in probs[i]]
            for i, seg in enumerate(net.segments)
        ),
    )
    _say(args, f"wrote {out} ({len(net)} segments, scenario {args.scenario})")
    return 0


def cmd_eval(args) -> int:
    truth = _read_label_csv(args.truth)
    pred = _read_label_csv(args.pred)
    ids = sorted(set(truth) & set(pred))
    if not ids:
        raise ValueError("truth and pred share no segment ids")
    report = metrics.evaluate([truth[i] for i in ids], [pred[i] for i in ids])
    _say(args, metrics.format_report(report))
    out = Path(args.out) if args.out else Path(args.out_dir) / "eval.json"
    payload = {
        "n": report.n,
        "acc": report.acc,
        "hla": report.hla,
        "afr": None if report.afr != report.afr else report.afr,
        "confusion": report.confusion.tolist(),
        "n_low": report.n_low,
        "n_high": report.n_high,
    }
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_gen(args) -> int:
    out_dir = Path(args.out_dir)
    kernel = None
    if args.kernel:
        kernel = _read_transitions_csv(args.kernel).probs
    if args.preset:
        config = synthgen.GenConfig(
            topology=args.topology,
            n_segments=args.n,
            avg_degree=args.avg_degree,
            kernel=kernel,
            noise=args.noise,
            preset=args.preset,
            embed_dim=args.embed_dim,
            seed=args.seed,
        )
        result = synthgen.generate(config)
        net = result.network
        _write_network_csv(out_dir / "network.csv", net, label_override=result.labels)
        _write_csv(
            out_dir / "labels.csv",
            ["segment_id", "label"],
            ([seg.segment_id, str(result.labels[seg.segment_id])] for seg in net.segments),
        )
        k = result.kernel.shape[0]
        _write_csv(
            out_dir / "predictions.csv",
            ["segment_id"] + [f"p_{j + 1}" for j in range(k)],
            ([seg.segment_id] + [_fmt(v) for v in result.models[seg.segment_id]] for seg in net.segments),
        )
        _write_transitions_csv(out_dir / "transitions.csv", result.kernel)
        _say(args, f"wrote preset bundle for {len(net)} segments into {out_dir}")
        return 0

    ds = synthgen.generate_pipeline_dataset(
        n=args.n,
        topology=args.topology,
        avg_degree=args.avg_degree,
        kernel=kernel,
        noise=args.noise,
        embed_dim=args.embed_dim,
        seed=args.seed,
    )
    net = ds.network
    _write_network_csv(out_dir / "network.csv", net)
    _write_csv(
        out_dir / "speed_preds.csv",
        ["segment_id", "p_1", "p_2", "p_3", "p_4"],
        ([sid] + [_fmt(v) for v in ds.speed_models[sid]] for sid in ds.segment_ids),
    )
    _write_csv(
        out_dir / "speed_labels.csv",
        ["segment_id", "label"],
        ([sid, str(ds.speed_labels[sid])] for sid in ds.segment_ids),
    )
    _write_transitions_csv(out_dir / "transitions.csv", ds.kernel)
    _write_csv(
        out_dir / "contrastive.csv",
        ["sample_id"] + [f"x_{j + 1}" for j in range(ds.contrastive_x.shape[1])] + ["y"],
        (
            [sid] + [_fmt(v) for v in ds.contrastive_x[i]] + [str(int(ds.contrastive_y[i]))]
            for i, sid in enumerate(ds.segment_ids)
        ),
    )
    assignment = split(net, "random", seed=args.seed)
    _write_csv(
        out_dir / "split.csv",
        ["segment_id", "part"],
        ([sid, assignment[sid]] for sid in ds.segment_ids),
    )
    lts_by_id = {seg.segment_id: seg.lts for seg in net.segments}
    for part, fname in (("train", "lts_train.csv"), ("test", "lts_test.csv")):
        _write_csv(
            out_dir / fname,
            ["segment_id", "lts"],
            ([sid, str(lts_by_id[sid])] for sid in ds.segment_ids if assignment[sid] == part),
        )
    _say(args, f"wrote pipeline bundle for {len(net)} segments into {out_dir}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stressgraph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness in this run")
    common.add_argument("--out-dir", default=".", help="directory for outputs and the config echo")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = sub.add_parser("lts", parents=[common], help="compute exact LTS labels for a segment file")
    p.add_argument("--network", required=True)
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--strict-missing", action="store_true", help="error instead of blank on missing fields")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lts)

    p = sub.add_parser("smooth", parents=[common], help="spatially smooth per-segment predictions")
    p.add_argument("--network", required=True)
    p.add_argument("--predictions", required=True, help="CSV: segment_id,p_1..p_K")
    p.add_argument("--transitions", help="transition matrix CSV; alternative to --train-labels")
    p.add_argument("--train-labels", help="labels CSV used to estimate transitions")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--save-transitions", help="write the (estimated) transition matrix here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("train-ordcon", parents=[common], help="train the toy contrastive encoder")
    p.add_argument("--data", required=True, help="CSV: sample_id,x_1..x_p,y")
    p.add_argument("--loss", choices=["moco", "supcon", "ordcon"], default="ordcon")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--weights", default="0.95,0.05", help="comma-separated level weights")
    p.add_argument("--tau", type=float, default=0.07)
    p.add_argument("--momentum", type=float, default=0.999)
    p.add_argument("--queue", type=int, default=256)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--proj-dim", type=int, default=8)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=2.0)
    p.add_argument("--aug-noise", type=float, default=0.1)
    p.set_defaults(func=cmd_train_ordcon)

    p = sub.add_parser("fit-cart", parents=[common], help="grid-search and fit the CART classifier")
    p.add_argument("--data", required=True, help="segment CSV with features and lts labels")
    p.add_argument("--grid", help="JSON file with criteria/max_depths/min_samples_splits/folds")
    p.add_argument("--folds", type=int, default=10)
    p.set_defaults(func=cmd_fit_cart)

    p = sub.add_parser("predict", parents=[common], help="run the two-step LTS predictor")
    p.add_argument("--network", required=True)
    p.add_argument("--scenario", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--embeddings", required=True, help="CSV: sample_id,e_1..e_d")
    p.add_argument("--feature-preds", action="append", metavar="FEATURE=CSV",
                   help="predicted distributions per feature; repeatable")
    p.add_argument("--smoothed", action="append", metavar="FEATURE=CSV",
                   help="pre-smoothed labels per feature; bypasses internal smoothing")
    p.add_argument("--transitions", action="append", metavar="FEATURE=CSV",
                   help="transition matrix per feature to smooth internally; repeatable")
    p.add_argument("--tree", required=True, help="fitted tree JSON")
    p.add_argument("--fusion", help="fusion model JSON to load")
    p.add_argument("--fit-fusion-labels", help="labels CSV; trains the fusion head when --fusion is absent")
    p.add_argument("--fusion-out", help="where to save a freshly trained fusion model")
    p.add_argument("--fusion-epochs", type=int, default=300)
    p.add_argument("--fusion-lr", type=float, default=0.5)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", parents=[common], help="score predictions against ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic dataset bundle")
    p.add_argument("--topology", choices=["chain", "grid", "random"], default="random")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--avg-degree", type=float, default=4.0)
    p.add_argument("--kernel", help="transition matrix CSV for label generation")
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--preset", choices=list(synthgen.PRESETS), default=None)
    p.add_argument("--embed-dim", type=int, default=8)
    p.set_defaults(func=cmd_gen)

    return parser


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _echo_config(args, out_dir)
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
