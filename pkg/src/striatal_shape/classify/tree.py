"""Weighted Gini classification trees stored as flat node arrays."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._base import validate_input, validate_training

LEAF = -1


class TreeArrays:
    """Flat tree: node ``k`` splits on ``feature[k] <= threshold[k]`` or is a leaf.

    ``value[k]`` is the weighted fraction of class 1 among training rows
    reaching the node.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value", "n_samples")

    def __init__(self, feature, threshold, left, right, value, n_samples):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)

    @property
    def node_count(self):
        return len(self.feature)

    def apply(self, X):
        """Leaf index reached by each row."""
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.nonzero(active)[0]
            k = node[idx]
            go_left = X[idx, self.feature[k]] <= self.threshold[k]
            node[idx] = np.where(go_left, self.left[k], self.right[k])
            active[idx] = self.feature[node[idx]] != LEAF
        return node

    def proba(self, X):
        return self.value[self.apply(X)]

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in self.__slots__}

    @classmethod
    def from_dict(cls, d):
        return cls(*(d[k] for k in cls.__slots__))


def _best_split(x, y, w, min_leaf):
    """Best Gini threshold on one feature, or None.

    Returns ``(gain, threshold)`` where gain is the weighted impurity
    decrease.  Candidates sit midway between distinct consecutive values
    and leave at least ``min_leaf`` rows on each side.
    """
    order = np.argsort(x, kind="stable")
    xs, ys, ws = x[order], y[order], w[order]
    n = len(xs)
    w1 = np.cumsum(ws * ys)
    wt = np.cumsum(ws)
    total_w, total_1 = wt[-1], w1[-1]
    # split after position i (left = 0..i)
    i = np.arange(min_leaf - 1, n - min_leaf)
    if i.size == 0:
        return None
    i = i[xs[i] < xs[i + 1]]
    if i.size == 0:
        return None
    wl, l1 = wt[i], w1[i]
    wr, r1 = total_w - wl, total_1 - l1
    with np.errstate(invalid="ignore", divide="ignore"):
        gl = np.where(wl > 0, 2 * l1 * (wl - l1) / wl, 0.0)
        gr = np.where(wr > 0, 2 * r1 * (wr - r1) / wr, 0.0)
    parent = 2 * total_1 * (total_w - total_1) / total_w
    gain = parent - gl - gr
    k = int(np.argmax(gain))
    thr = (xs[i[k]] + xs[i[k] + 1]) / 2
    if thr == xs[i[k] + 1]:  # midpoint rounded up onto the right value
        thr = xs[i[k]]
    return float(gain[k]), float(thr)


def grow_tree(X, y, w=None, max_features=None, min_parent=2, min_leaf=1, max_depth=None,
              rng=None):
    """Grow a tree greedily, depth first.

    Parameters
    ----------
    X : (n, p) float array
    y : (n,) array of 0/1
    w : (n,) non-negative weights, default all ones
    max_features : int or None
        Features tried per node, drawn without replacement by ``rng``.
        Features constant within the node do not count toward the quota.
    min_parent : int
        Nodes with fewer rows become leaves.
    min_leaf : int
        Minimum rows on each side of a split.
    max_depth : int or None
    """
    n, p = X.shape
    w = np.ones(n) if w is None else np.asarray(w, dtype=np.float64)
    if max_features is not None and max_features < p and rng is None:
        raise ValueError("rng required for random feature subsets")
    feat, thr, left, right, value, count = [], [], [], [], [], []

    def new_node(idx):
        ww = w[idx]
        tot = ww.sum()
        feat.append(LEAF)
        thr.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float((ww * y[idx]).sum() / tot) if tot > 0 else float(y[idx].mean()))
        count.append(len(idx))
        return len(feat) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        v = value[node]
        if (len(idx) < min_parent or len(idx) < 2 * min_leaf or v in (0.0, 1.0)
                or (max_depth is not None and depth >= max_depth) or w[idx].sum() <= 0):
            continue
        order = rng.permutation(p) if max_features is not None and max_features < p else range(p)
        quota = p if max_features is None else max_features
        best = None
        tried = 0
        for j in order:
            col = X[idx, j]
            if col.min() == col.max():
                continue
            tried += 1
            res = _best_split(col, y[idx], w[idx], min_leaf)
            if res is not None and res[0] > 1e-12 * w[idx].sum() and (best is None or res[0] > best[0]):
                best = (res[0], int(j), res[1])
            if tried >= quota:
                break
        if best is None:
            continue
        _, j, t = best
        go_left = X[idx, j] <= t
        li, ri = idx[go_left], idx[~go_left]
        feat[node], thr[node] = j, t
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return TreeArrays(feat, thr, left, right, value, count)


class DecisionTree(ClassifierMixin, BaseEstimator):
    """Single Gini tree (the weak learner used by the ensembles)."""

    def __init__(self, min_parent=2, min_leaf=1, max_depth=None, max_features=None,
                 random_state=None):
        self.min_parent = min_parent
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y, sample_weight=None):
        X, y01, classes, w = validate_training(X, y, sample_weight)
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        rng = np.random.default_rng(self.random_state)
        self.tree_ = grow_tree(X, y01, w, self.max_features, self.min_parent, self.min_leaf,
                               self.max_depth, rng)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "tree_")
        p1 = self.tree_.proba(validate_input(self, X))
        return np.column_stack([1 - p1, p1])

    def predict(self, X):
        return self.classes_[(self.predict_proba(X)[:, 1] > 0.5).astype(int)]
