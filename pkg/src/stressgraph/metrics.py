"""Evaluation metrics: exact accuracy, binary stress accuracy, and AFR."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lts import HIGH_STRESS, LOW_STRESS, stress_class


@dataclass(frozen=True)
class EvalReport:
    acc: float
    hla: float
    afr: float  # nan when one stress class is absent from the truth
    confusion: np.ndarray  # 4x4 counts, rows = truth, cols = prediction
    n_low: int
    n_high: int

    @property
    def n(self) -> int:
        return int(self.confusion.sum())


def evaluate(truth: Sequence[int], pred: Sequence[int]) -> EvalReport:
    """Score predicted LTS labels against ground truth.

    acc is the exact four-class accuracy. hla collapses labels to
    low-stress (LTS 1/2) vs high-stress (LTS 3/4) before comparing.
    afr averages the false-high rate (truly low segments predicted high,
    over the low count) and the false-low rate (truly high predicted low,
    over the high count); it is reported as nan with a warning when either
    stress class is absent from the truth.
    """
    t = np.asarray(truth, dtype=np.int64)
    p = np.asarray(pred, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(f"truth and pred must be equal-length 1-d sequences, got {t.shape} vs {p.shape}")
    if t.size == 0:
        raise ValueError("cannot evaluate zero samples")
    for arr, name in ((t, "truth"), (p, "pred")):
        bad = arr[(arr < 1) | (arr > 4)]
        if bad.size:
            raise ValueError(f"{name} contains labels outside 1..4: {sorted(set(bad.tolist()))}")

    acc = float(np.mean(t == p))

    h_t = np.fromiter((stress_class(v) for v in t), dtype=np.int64, count=t.size)
    h_p = np.fromiter((stress_class(v) for v in p), dtype=np.int64, count=p.size)
    hla = float(np.mean(h_t == h_p))

    n_low = int(np.sum(h_t == LOW_STRESS))
    n_high = int(np.sum(h_t == HIGH_STRESS))
    if n_low == 0 or n_high == 0:
        warnings.warn("AFR undefined: one stress class is absent from the truth labels")
        afr = math.nan
    else:
        false_high = float(np.sum((h_p == HIGH_STRESS) & (h_t == LOW_STRESS))) / n_low
        false_low = float(np.sum((h_p == LOW_STRESS) & (h_t == HIGH_STRESS))) / n_high
        afr = 0.5 * (false_high + false_low)

    confusion = np.zeros((4, 4), dtype=np.int64)
    np.add.at(confusion, (t - 1, p - 1), 1)

    return EvalReport(acc=acc, hla=hla, afr=afr, confusion=confusion, n_low=n_low, n_high=n_high)


def format_report(report: EvalReport) -> str:
    """Render a report as a small text table, percentages to two decimals."""
    afr = "nan" if math.isnan(report.afr) else f"{100 * report.afr:.2f}"
    lines = [
        f"N    {report.n}",
        f"Acc  {100 * report.acc:.2f}",
        f"HLA  {100 * report.hla:.2f}",
        f"AFR  {afr}",
        "confusion (rows=truth LTS1..4, cols=pred):",
    ]
    for r in range(4):
        lines.append("  " + " ".join(f"{report.confusion[r, c]:6d}" for c in range(4)))
    return "\n".join(lines)
