"""Pure-Python implementations of the hot kernels.

These are the reference versions; the compiled ``_kernels`` extension
mirrors them operation for operation so both backends produce identical
floats and identical trees.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1


def dtw_distance(a, b) -> float:
    """Boundary-anchored DTW with Euclidean point cost and symmetric steps."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValueError("empty sequence")
    ax, ay = a[:, 0].tolist(), a[:, 1].tolist()
    bx, by = b[:, 0].tolist(), b[:, 1].tolist()
    prev = [0.0] * m
    cur = [0.0] * m
    for i in range(n):
        for j in range(m):
            dx = ax[i] - bx[j]
            dy = ay[i] - by[j]
            c = math.sqrt(dx * dx + dy * dy)
            if i == 0 and j == 0:
                best = 0.0
            elif i == 0:
                best = cur[j - 1]
            elif j == 0:
                best = prev[j]
            else:
                best = prev[j - 1]
                if prev[j] < best:
                    best = prev[j]
                if cur[j - 1] < best:
                    best = cur[j - 1]
            cur[j] = c + best
        prev, cur = cur, prev
    return prev[m - 1]


def dtw_many(a, cands) -> np.ndarray:
    """DTW of ``a`` against each candidate in a (K, m, 2) array."""
    cands = np.asarray(cands, dtype=np.float64)
    return np.array([dtw_distance(a, c) for c in cands], dtype=np.float64)


class SplitMix64:
    """Small deterministic PRNG shared with the compiled backend."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, k: int) -> int:
        return self.next() % k


def build_tree(X, y, samples, n_classes, max_depth, min_samples_split, max_features, seed):
    """Grow one CART classification tree (Gini) on ``X[samples]``.

    ``max_depth < 0`` means unbounded. Returns the flat node arrays
    (feature, threshold, left, right, leaf_start, leaf_len, leaf_class,
    leaf_count); leaves have feature -1.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int32)
    n_features = X.shape[1]
    rng = SplitMix64(seed)
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    leaf_start: list[int] = []
    leaf_len: list[int] = []
    leaf_class: list[int] = []
    leaf_count: list[int] = []
    perm = list(range(n_features))

    def make_leaf(node, counts):
        feature[node] = -1
        leaf_start[node] = len(leaf_class)
        k = 0
        for c in range(n_classes):
            if counts[c] > 0:
                leaf_class.append(c)
                leaf_count.append(int(counts[c]))
                k += 1
        leaf_len[node] = k

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_start.append(0)
        leaf_len.append(0)
        n = len(idx)
        yy = y[idx]
        counts = np.bincount(yy, minlength=n_classes)
        n_nonzero = int(np.count_nonzero(counts))
        if n_nonzero <= 1 or n < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            make_leaf(node, counts)
            return node

        best_score = -1.0
        best_f = -1
        best_t = 0.0
        visited = 0
        for i in range(n_features):
            if visited >= max_features:
                break
            j = i + rng.below(n_features - i)
            perm[i], perm[j] = perm[j], perm[i]
            f = perm[i]
            xs = X[idx, f]
            if xs.min() == xs.max():
                continue
            order = np.argsort(xs, kind="stable")
            xv = xs[order]
            visited += 1
            cls = yy[order]
            # incremental sums of squared class counts on each side
            onehot_l = np.zeros(n_classes, dtype=np.int64)
            onehot_r = counts.astype(np.int64).copy()
            sq_l = 0
            sq_r = int(np.dot(onehot_r, onehot_r))
            xl = xv.tolist()
            cl = cls.tolist()
            for p in range(n - 1):
                c = cl[p]
                sq_l += 2 * int(onehot_l[c]) + 1
                onehot_l[c] += 1
                sq_r -= 2 * int(onehot_r[c]) - 1
                onehot_r[c] -= 1
                if xl[p] == xl[p + 1]:
                    continue
                nl = p + 1
                score = sq_l / nl + sq_r / (n - nl)
                if score > best_score:
                    best_score = score
                    best_f = f
                    best_t = 0.5 * (xl[p] + xl[p + 1])

        if best_f < 0:
            make_leaf(node, counts)
            return node
        go_left = X[idx, best_f] <= best_t
        feature[node] = best_f
        threshold[node] = best_t
        left[node] = grow(idx[go_left], depth + 1)
        right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.asarray(samples, dtype=np.intp), 0)
    return (
        np.array(feature, dtype=np.int32),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int32),
        np.array(right, dtype=np.int32),
        np.array(leaf_start, dtype=np.int32),
        np.array(leaf_len, dtype=np.int32),
        np.array(leaf_class, dtype=np.int32),
        np.array(leaf_count, dtype=np.int32),
    )
