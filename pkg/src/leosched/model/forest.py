"""Random-forest classifier over cluster-count features, with grid search and CV."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import kernels
from .features import ClusterKey, FeatureVector, LabeledSlot

log = logging.getLogger(__name__)

MODEL_FORMAT = "leosched-forest"
MODEL_VERSION = 1
N_FOLDS = 5
HOLDOUT_FRACTION = 0.2


class TrainingError(ValueError):
    pass


@dataclass
class TrainConfig:
    n_trees: tuple = (50, 100, 200)
    max_depth: tuple = (4, 8, 16, None)
    min_samples_split: tuple = (2, 5)
    n_folds: int = N_FOLDS
    report_k: tuple = (1, 3, 5)


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_start: np.ndarray
    leaf_len: np.ndarray
    leaf_class: np.ndarray
    leaf_count: np.ndarray

    @classmethod
    def from_arrays(cls, arrays) -> "Tree":
        return cls(*arrays)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node reached by each row of X."""
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            nd = node[active]
            f = self.feature[nd]
            go_left = X[r, f] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def leaf_histogram(self, leaf: int, n_classes: int) -> np.ndarray:
        h = np.zeros(n_classes)
        s, n = self.leaf_start[leaf], self.leaf_len[leaf]
        h[self.leaf_class[s : s + n]] = self.leaf_count[s : s + n]
        return h / h.sum()

    def add_proba(self, X: np.ndarray, out: np.ndarray) -> None:
        """Add each row's normalized leaf histogram into ``out`` (n, n_classes)."""
        leaf = self.apply(X)
        starts = self.leaf_start[leaf].astype(np.int64)
        lens = self.leaf_len[leaf].astype(np.int64)
        rows = np.repeat(np.arange(len(X)), lens)
        # flat positions start..start+len-1 for every row
        offs = np.arange(lens.sum()) - np.repeat(np.cumsum(lens) - lens, lens)
        pos = np.repeat(starts, lens) + offs
        counts = self.leaf_count[pos].astype(float)
        cs = np.concatenate([[0], np.cumsum(self.leaf_count, dtype=np.int64)])
        totals = np.repeat((cs[starts + lens] - cs[starts]).astype(float), lens)
        np.add.at(out, (rows, self.leaf_class[pos]), counts / totals)

    def to_json(self) -> dict:
        return {k: getattr(self, k).tolist() for k in self.__dataclass_fields__}

    @classmethod
    def from_json(cls, obj: dict) -> "Tree":
        dtypes = {"threshold": np.float64}
        return cls(**{k: np.asarray(obj[k], dtype=dtypes.get(k, np.int32)) for k in cls.__dataclass_fields__})


class FeatureEncoding:
    """Fixed dense layout: one count column per training ClusterKey, then t_local."""

    def __init__(self, keys: Sequence[ClusterKey]):
        self.keys = sorted(ClusterKey(*k) for k in keys)
        self._col = {k: i for i, k in enumerate(self.keys)}
        self._warned = False

    @property
    def n_features(self) -> int:
        return len(self.keys) + 1

    def encode(self, features: Sequence[FeatureVector]) -> np.ndarray:
        X = np.zeros((len(features), self.n_features))
        dropped = 0
        for i, fv in enumerate(features):
            for k, c in fv.counts.items():
                j = self._col.get(k)
                if j is None:
                    dropped += 1
                else:
                    X[i, j] = c
            X[i, -1] = fv.t_local
        if dropped and not self._warned:
            log.warning("dropped %d counts for cluster keys unseen in training", dropped)
            self._warned = True
        return X


def max_features_for(n_features: int) -> int:
    return max(1, math.ceil(math.sqrt(n_features)))


def _grow(X, y, n_classes, n_trees, max_depth, min_samples_split, seeds) -> list[Tree]:
    n = len(X)
    mf = max_features_for(X.shape[1])
    depth = -1 if max_depth is None else int(max_depth)
    trees = []
    for b in range(n_trees):
        boot_seed, tree_seed = seeds[b]
        sample = np.random.default_rng(int(boot_seed)).integers(0, n, size=n)
        arrays = kernels.build_tree(X, y, sample, n_classes, depth, int(min_samples_split), mf, int(tree_seed))
        trees.append(Tree.from_arrays(arrays))
    return trees


def _tree_seeds(seq: np.random.SeedSequence, n: int) -> np.ndarray:
    return seq.generate_state(2 * n, dtype=np.uint64).reshape(n, 2)


def topk_from_proba(proba: np.ndarray, classes: Sequence[ClusterKey], k: int) -> list[list[ClusterKey]]:
    """Rank classes by probability, ties broken by lexicographic key order.

    ``classes`` must already be sorted so a stable sort on -probability
    keeps lexicographic order among equal probabilities.
    """
    order = np.argsort(-proba, axis=1, kind="stable")[:, :k]
    return [[classes[j] for j in row] for row in order]


def _topk_hits(proba: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    order = np.argsort(-proba, axis=1, kind="stable")[:, :k]
    return np.any(order == y[:, None], axis=1)


def stratified_assign(labels: Sequence, n_groups: int, rng: np.random.Generator) -> np.ndarray:
    """Deal samples round-robin into groups after grouping them by label.

    Samples are ordered by label (random order within a label) and dealt
    cyclically from a random start, so every label is spread across groups
    as evenly as its count allows.
    """
    labels = list(labels)
    perm = rng.permutation(len(labels))
    order = sorted(perm.tolist(), key=lambda i: labels[i])
    start = int(rng.integers(n_groups))
    group = np.empty(len(labels), dtype=np.int64)
    for pos, i in enumerate(order):
        group[i] = (pos + start) % n_groups
    return group


@dataclass
class RandomForestModel:
    encoding: FeatureEncoding
    classes: list  # sorted ClusterKeys
    trees: list
    hyperparams: dict
    metadata: dict = field(default_factory=dict)

    def predict_proba(self, features: Sequence[FeatureVector]) -> np.ndarray:
        X = self.encoding.encode(features)
        out = np.zeros((len(X), len(self.classes)))
        for t in self.trees:
            t.add_proba(X, out)
        return out / len(self.trees)

    def predict_topk(self, features, k: int) -> list:
        """Top-k cluster keys for one FeatureVector, or a list per vector for a sequence."""
        if k < 1:
            raise ValueError("k must be >= 1")
        single = isinstance(features, FeatureVector)
        rows = topk_from_proba(self.predict_proba([features] if single else features), self.classes, k)
        return rows[0] if single else rows

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "hyperparams": self.hyperparams,
            "feature_keys": [list(k) for k in self.encoding.keys],
            "classes": [list(k) for k in self.classes],
            "trees": [t.to_json() for t in self.trees],
            "metadata": self.metadata,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, obj: dict) -> "RandomForestModel":
        if obj.get("format") != MODEL_FORMAT:
            raise ValueError("not a leosched forest model file")
        if obj.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {obj.get('version')}")
        return cls(
            FeatureEncoding([ClusterKey(*k) for k in obj["feature_keys"]]),
            [ClusterKey(*k) for k in obj["classes"]],
            [Tree.from_json(t) for t in obj["trees"]],
            obj["hyperparams"],
            obj.get("metadata", {}),
        )

    @classmethod
    def load(cls, path) -> "RandomForestModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _fit(dataset: Sequence[LabeledSlot], hp: dict, seq: np.random.SeedSequence) -> RandomForestModel:
    keys = sorted({k for s in dataset for k in s.features.counts})
    classes = sorted({s.label for s in dataset})
    enc = FeatureEncoding(keys)
    X = enc.encode([s.features for s in dataset])
    cidx = {c: i for i, c in enumerate(classes)}
    y = np.array([cidx[s.label] for s in dataset], dtype=np.int32)
    trees = _grow(X, y, len(classes), hp["n_trees"], hp["max_depth"], hp["min_samples_split"], _tree_seeds(seq, hp["n_trees"]))
    return RandomForestModel(enc, classes, trees, dict(hp))


def train(dataset: Sequence[LabeledSlot], config: TrainConfig | None = None, seed: int = 0) -> RandomForestModel:
    """Grid-search a forest by k-fold CV on 80% of the data; report holdout accuracy.

    For each (max_depth, min_samples_split) and fold, the largest forest is
    grown once and its leading 50/100/... trees scored, since per-tree seeds
    are drawn up front and a smaller forest is exactly a prefix.
    """
    from .evaluate import evaluate_topk

    config = config or TrainConfig()
    if len(dataset) < 100:
        raise TrainingError(f"need at least 100 labeled slots, got {len(dataset)}")
    labels = [s.label for s in dataset]
    if len(set(labels)) < 2:
        raise TrainingError("dataset has a single label")

    root = np.random.SeedSequence(seed)
    split_seq, cv_seq, final_seq = root.spawn(3)
    rng = np.random.default_rng(split_seq)
    group = stratified_assign(labels, round(1 / HOLDOUT_FRACTION), rng)
    train_idx = np.flatnonzero(group != 0)
    hold_idx = np.flatnonzero(group == 0)
    train_set = [dataset[i] for i in train_idx]
    holdout = [dataset[i] for i in hold_idx]

    folds = stratified_assign([s.label for s in train_set], config.n_folds, rng)
    max_trees = max(config.n_trees)
    prefixes = sorted(config.n_trees)
    fold_seqs = cv_seq.spawn(config.n_folds)

    fold_data = []
    for f in range(config.n_folds):
        fit_part = [train_set[i] for i in np.flatnonzero(folds != f)]
        val_part = [train_set[i] for i in np.flatnonzero(folds == f)]
        keys = sorted({k for s in fit_part for k in s.features.counts})
        classes = sorted({s.label for s in fit_part})
        enc = FeatureEncoding(keys)
        enc._warned = True  # unseen keys are expected in validation folds
        cidx = {c: i for i, c in enumerate(classes)}
        X = enc.encode([s.features for s in fit_part])
        y = np.array([cidx[s.label] for s in fit_part], dtype=np.int32)
        Xv = enc.encode([s.features for s in val_part])
        yv = np.array([cidx.get(s.label, -1) for s in val_part], dtype=np.int64)
        fold_data.append((X, y, Xv, yv, len(classes)))

    results = []
    for depth in config.max_depth:
        for mss in config.min_samples_split:
            acc = {p: [] for p in prefixes}
            for f, (X, y, Xv, yv, ncls) in enumerate(fold_data):
                trees = _grow(X, y, ncls, max_trees, depth, mss, _tree_seeds(fold_seqs[f], max_trees))
                proba = np.zeros((len(Xv), ncls))
                for b, t in enumerate(trees, start=1):
                    t.add_proba(Xv, proba)
                    if b in acc:
                        acc[b].append(float(np.mean(_topk_hits(proba / b, yv, 1))))
            for p in prefixes:
                results.append({"n_trees": p, "max_depth": depth, "min_samples_split": mss, "cv_top1": float(np.mean(acc[p]))})

    # strict improvement keeps the simplest of equally scoring candidates
    order = sorted(results, key=lambda r: (r["n_trees"], math.inf if r["max_depth"] is None else r["max_depth"], r["min_samples_split"]))
    best = order[0]
    for r in order[1:]:
        if r["cv_top1"] > best["cv_top1"]:
            best = r
    hp = {k: best[k] for k in ("n_trees", "max_depth", "min_samples_split")}
    hp["max_features"] = "ceil_sqrt"
    hp["criterion"] = "gini"
    model = _fit(train_set, hp, final_seq)
    table = evaluate_topk(model, holdout, config.report_k) if holdout else []
    model.metadata = {
        "seed": int(seed),
        "n_train": len(train_set),
        "n_holdout": len(holdout),
        "cv_results": order,
        "best_cv_top1": best["cv_top1"],
        "holdout": [{"k": k, "model_acc": m, "baseline_acc": b} for k, m, b in table],
    }
    return model
