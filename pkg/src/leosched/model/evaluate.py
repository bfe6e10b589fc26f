"""Top-k accuracy of the forest against the most-available-cluster baseline."""

from __future__ import annotations

import csv
import io
from typing import Sequence

from .features import ClusterKey, FeatureVector, LabeledSlot


def baseline_topk(features: FeatureVector, k: int) -> list[ClusterKey]:
    """Clusters with the most available satellites, lexicographic tie-break."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted(features.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [ClusterKey(*key) for key, _ in ranked[:k]]


def evaluate_topk(model, dataset: Sequence[LabeledSlot], k_values) -> list[tuple[int, float, float]]:
    """Rows of (k, model accuracy, baseline accuracy)."""
    if not dataset:
        raise ValueError("empty evaluation dataset")
    ks = sorted({int(k) for k in k_values})
    if ks[0] < 1:
        raise ValueError("k must be >= 1")
    kmax = ks[-1]
    preds = model.predict_topk([s.features for s in dataset], kmax)
    base = [baseline_topk(s.features, kmax) for s in dataset]
    rows = []
    n = len(dataset)
    for k in ks:
        m = sum(s.label in p[:k] for s, p in zip(dataset, preds)) / n
        b = sum(s.label in p[:k] for s, p in zip(dataset, base)) / n
        rows.append((k, m, b))
    return rows


def format_eval_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "model_acc", "baseline_acc"])
    for k, m, b in rows:
        w.writerow([k, f"{m:.6f}", f"{b:.6f}"])
    return buf.getvalue()
