"""Regression trees and tree ensembles built from first principles.

The CART builder grows binary trees on variance-reduction splits with
midpoint thresholds, stored flat in arrays so the hot loops JIT-compile
with numba (the kernels fall back to plain interpretation when numba is
missing, with identical results).  On top of single trees sit
bootstrap-bagged random forests with per-split feature subsampling and
least-squares gradient boosting on residuals.

Determinism: splits tie-break toward the lowest feature index and
threshold, the feature subsampler is an inline xorshift generator
seeded per tree, and bootstrap resampling comes from a seeded numpy
generator, so a (data, hyperparameters, seed) triple always yields the
same model.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an install-time dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        def wrap(fn):
            return fn
        return wrap

NO_DEPTH_LIMIT = 1 << 30


@njit(cache=True)
def _xorshift(state):
    state ^= state >> np.uint64(12)
    state ^= (state << np.uint64(25)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    state ^= state >> np.uint64(27)
    return state


@njit(cache=True)
def _build_tree(X, y, min_samples_split, max_depth, max_features, rng_seed):
    n, p = X.shape
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes)

    idx = np.arange(n)
    # manual stack of (node, start, end, depth) slices over idx
    stack = np.empty((max_nodes, 4), np.int64)
    stack[0] = (0, 0, n, 0)
    top = 1
    n_nodes = 1
    state = np.uint64(rng_seed if rng_seed != 0 else 0x9E3779B97F4A7C15)
    feat_pool = np.empty(p, np.int64)

    while top > 0:
        top -= 1
        node, start, end, depth = stack[top]
        m = end - start
        total = 0.0
        for i in range(start, end):
            total += y[idx[i]]
        mean = total / m
        value[node] = mean
        if m < min_samples_split or depth >= max_depth:
            continue
        constant = True
        first = y[idx[start]]
        for i in range(start + 1, end):
            if y[idx[i]] != first:
                constant = False
                break
        if constant:
            continue

        # candidate features: all of them, or a sampled subset per split
        for j in range(p):
            feat_pool[j] = j
        k = p
        if max_features < p:
            k = max_features
            for j in range(k):  # partial Fisher-Yates
                state = _xorshift(state)
                pick = j + int(state % np.uint64(p - j))
                feat_pool[j], feat_pool[pick] = feat_pool[pick], feat_pool[j]
            feat_pool[:k].sort()

        baseline = total * total / m
        best_gain = baseline
        best_f = -1
        best_thr = 0.0
        xs = np.empty(m)
        ys = np.empty(m)
        for jj in range(k):
            f = feat_pool[jj]
            for i in range(m):
                xs[i] = X[idx[start + i], f]
                ys[i] = y[idx[start + i]]
            order = np.argsort(xs)
            cum = 0.0
            for pos in range(1, m):
                cum += ys[order[pos - 1]]
                lo = xs[order[pos - 1]]
                hi = xs[order[pos]]
                if lo == hi:
                    continue
                gain = cum * cum / pos + (total - cum) * (total - cum) / (m - pos)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    thr = (lo + hi) / 2.0
                    if thr >= hi:  # midpoint rounded up to the right value
                        thr = lo
                    best_thr = thr
        if best_f < 0:
            continue

        # stable partition of idx[start:end] around the split
        seg = idx[start:end].copy()
        w = start
        for i in range(m):
            if X[seg[i], best_f] <= best_thr:
                idx[w] = seg[i]
                w += 1
        mid = w
        for i in range(m):
            if X[seg[i], best_f] > best_thr:
                idx[w] = seg[i]
                w += 1

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        # push right first so the left child is processed first
        stack[top] = (n_nodes + 1, mid, end, depth + 1)
        top += 1
        stack[top] = (n_nodes, start, mid, depth + 1)
        top += 1
        n_nodes += 2

    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], \
        right[:n_nodes], value[:n_nodes]


@njit(cache=True)
def _predict_tree(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


class DecisionTree:
    """CART regression tree: variance-reduction splits, mean leaves."""

    kind = "DecisionTree"

    def __init__(self, max_depth=None, min_samples_split=2, max_features=None,
                 feature_seed=0):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.feature_seed = feature_seed
        self._arrays = None
        self.n_features = None

    def fit(self, X, y):
        X = np.ascontiguousarray(X, dtype=float)
        y = np.ascontiguousarray(y, dtype=float)
        depth = self.max_depth if self.max_depth is not None else NO_DEPTH_LIMIT
        feats = self.max_features if self.max_features else X.shape[1]
        self._arrays = _build_tree(X, y, self.min_samples_split, depth,
                                   min(feats, X.shape[1]), self.feature_seed)
        self.n_features = X.shape[1]
        return self

    def predict(self, X):
        X = np.ascontiguousarray(X, dtype=float)
        return _predict_tree(*self._arrays, X)

    @property
    def node_count(self):
        return len(self._arrays[0])


class RandomForest:
    """Bootstrap-bagged trees with per-split feature subsampling."""

    kind = "RandomForest"

    def __init__(self, n_estimators=100, bootstrap=True, max_features="third",
                 max_depth=None, min_samples_split=2, seed=None):
        if seed is None:
            raise ValueError("RandomForest needs a seed")
        self.n_estimators = n_estimators
        self.bootstrap = bootstrap
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.seed = seed
        self.trees: list[DecisionTree] = []
        self.n_features = None

    def fit(self, X, y):
        X = np.ascontiguousarray(X, dtype=float)
        y = np.ascontiguousarray(y, dtype=float)
        n, p = X.shape
        feats = math.ceil(p / 3) if self.max_features == "third" else \
            (self.max_features or p)
        root = np.random.SeedSequence(self.seed)
        self.trees = []
        for child in root.spawn(self.n_estimators):
            rng = np.random.default_rng(child)
            rows = rng.integers(0, n, n) if self.bootstrap else np.arange(n)
            feature_seed = int(rng.integers(1, 2**63 - 1))
            tree = DecisionTree(self.max_depth, self.min_samples_split,
                                feats, feature_seed)
            tree.fit(X[rows], y[rows])
            self.trees.append(tree)
        self.n_features = p
        return self

    def predict(self, X):
        X = np.ascontiguousarray(X, dtype=float)
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)


class GradientBoosting:
    """Staged depth-limited trees fit to residuals, shrunk by a learning rate."""

    kind = "GradientBoosting"

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3,
                 min_samples_split=2):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.init_ = 0.0
        self.trees: list[DecisionTree] = []
        self.n_features = None

    def fit(self, X, y):
        X = np.ascontiguousarray(X, dtype=float)
        y = np.ascontiguousarray(y, dtype=float)
        self.init_ = float(y.mean())
        current = np.full(len(y), self.init_)
        self.trees = []
        for _ in range(self.n_estimators):
            tree = DecisionTree(self.max_depth, self.min_samples_split)
            tree.fit(X, y - current)
            current += self.learning_rate * tree.predict(X)
            self.trees.append(tree)
        self.n_features = X.shape[1]
        return self

    def predict(self, X):
        X = np.ascontiguousarray(X, dtype=float)
        acc = np.full(X.shape[0], self.init_)
        for tree in self.trees:
            acc += self.learning_rate * tree.predict(X)
        return acc
