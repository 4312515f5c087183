"""Bagged Gini trees with out-of-bag error and permutation importance."""

import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .metrics import rates
from ._base import validate_input, validate_training
from .tree import grow_tree


def _seed_sequence(random_state):
    if isinstance(random_state, np.random.SeedSequence):
        return random_state
    return np.random.SeedSequence(random_state)


def _child(seq, i):
    """The ``i``-th child stream of ``seq``; unlike ``spawn`` this never mutates ``seq``."""
    return np.random.SeedSequence(seq.entropy, spawn_key=seq.spawn_key + (i,))


def _fit_one(X, y, seq, max_features, min_parent, min_leaf, max_depth):
    grow_seq = _child(seq, 0)
    rng = np.random.default_rng(grow_seq)
    n = len(y)
    boot = rng.integers(0, n, n)
    in_bag = np.zeros(n, dtype=bool)
    in_bag[boot] = True
    tree = grow_tree(X[boot], y[boot], None, max_features, min_parent, min_leaf, max_depth, rng)
    return tree, np.nonzero(~in_bag)[0]


def _tree_deltas(tree, oob, X, y, seq):
    """Increase in a tree's OOB error when each feature is permuted."""
    perm_seq = _child(seq, 1)
    rng = np.random.default_rng(perm_seq)
    p = X.shape[1]
    Xo, yo = X[oob], y[oob]
    base = np.mean((tree.proba(Xo) > 0.5) != yo)
    deltas = np.empty(p)
    for j in range(p):
        Xp = Xo.copy()
        Xp[:, j] = Xp[rng.permutation(len(oob)), j]
        deltas[j] = np.mean((tree.proba(Xp) > 0.5) != yo) - base
    return deltas


@dataclass
class ImportanceResult:
    scores: np.ndarray
    raw_mean: np.ndarray
    raw_sd: np.ndarray
    oob_accuracy: float
    oob_sensitivity: float
    oob_specificity: float
    n_trees_used: int

    def ranking(self):
        """Feature indices, most important first (ties keep column order)."""
        return np.argsort(-self.scores, kind="stable")


class RandomForest(ClassifierMixin, BaseEstimator):
    """Bootstrap-aggregated Gini trees with random feature subsets.

    Parameters
    ----------
    n_trees : int
    max_features : "sqrt", int or None
        Candidate features per split; ``"sqrt"`` means ``floor(sqrt(p))``.
    min_leaf, min_parent, max_depth : tree size limits
    random_state : int, SeedSequence or None
        Root of the per-tree seed streams; results do not depend on
        ``n_jobs``.
    n_jobs : int
    """

    def __init__(self, n_trees=65, max_features="sqrt", min_leaf=1, min_parent=2, max_depth=None,
                 random_state=None, n_jobs=1):
        self.n_trees = n_trees
        self.max_features = max_features
        self.min_leaf = min_leaf
        self.min_parent = min_parent
        self.max_depth = max_depth
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _n_candidates(self, p):
        if self.max_features == "sqrt":
            return max(1, int(math.floor(math.sqrt(p))))
        if self.max_features is None:
            return p
        return max(1, min(p, int(self.max_features)))

    def fit(self, X, y):
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        X, y01, classes, _ = validate_training(X, y)
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        self._X, self._y = X, y01
        root = _seed_sequence(self.random_state)
        self.tree_seeds_ = [_child(root, i) for i in range(self.n_trees)]
        k = self._n_candidates(X.shape[1])
        fitted = Parallel(n_jobs=self.n_jobs)(
            delayed(_fit_one)(X, y01, s, k, self.min_parent, self.min_leaf, self.max_depth)
            for s in self.tree_seeds_
        )
        self.trees_ = [t for t, _ in fitted]
        self.oob_indices_ = [o for _, o in fitted]
        return self

    def votes(self, X):
        """Fraction of trees voting for the second class."""
        check_is_fitted(self, "trees_")
        X = validate_input(self, X)
        return np.mean([t.proba(X) > 0.5 for t in self.trees_], axis=0)

    def predict_proba(self, X):
        v = self.votes(X)
        return np.column_stack([1 - v, v])

    def decision_function(self, X):
        return self.votes(X)

    def predict(self, X):
        return self.classes_[(self.votes(X) > 0.5).astype(int)]

    def oob_fraction(self):
        """Mean fraction of training rows left out of each bootstrap."""
        check_is_fitted(self, "trees_")
        n = len(self._y)
        return float(np.mean([len(o) / n for o in self.oob_indices_]))

    def oob_votes(self):
        """Per-row vote fraction over the trees for which the row is out of bag.

        Rows that were in every bootstrap get NaN.
        """
        check_is_fitted(self, "trees_")
        n = len(self._y)
        num = np.zeros(n)
        den = np.zeros(n)
        for tree, oob in zip(self.trees_, self.oob_indices_):
            if len(oob):
                num[oob] += tree.proba(self._X[oob]) > 0.5
                den[oob] += 1
        with np.errstate(invalid="ignore"):
            return np.where(den > 0, num / np.maximum(den, 1), np.nan)

    def oob_importance(self):
        """Out-of-bag permutation importance.

        For each tree the feature's OOB rows are permuted and the rise in
        that tree's OOB error recorded.  The score is the mean rise over
        trees divided by its standard deviation over trees (0 when the
        deviation is 0).  Trees without OOB rows are skipped.
        """
        check_is_fitted(self, "trees_")
        jobs = [(t, o, s) for t, o, s in zip(self.trees_, self.oob_indices_, self.tree_seeds_)
                if len(o)]
        deltas = Parallel(n_jobs=self.n_jobs)(
            delayed(_tree_deltas)(t, o, self._X, self._y, s) for t, o, s in jobs
        )
        D = np.vstack(deltas) if deltas else np.zeros((0, self.n_features_in_))
        mean = D.mean(axis=0) if len(D) else np.zeros(self.n_features_in_)
        sd = D.std(axis=0, ddof=1) if len(D) > 1 else np.zeros(self.n_features_in_)
        scores = np.divide(mean, sd, out=np.zeros_like(mean), where=sd > 0)

        v = self.oob_votes()
        seen = ~np.isnan(v)
        if seen.any():
            acc, sens, spec = rates(self._y[seen], (v[seen] > 0.5).astype(int))
        else:
            acc = sens = spec = float("nan")
        return ImportanceResult(scores, mean, sd, acc, sens, spec, len(D))


def oob_importance(X, y, n_trees=75, seed=0, n_jobs=1, **forest_params):
    """Fit a forest and return its out-of-bag permutation importance."""
    forest = RandomForest(n_trees=n_trees, random_state=seed, n_jobs=n_jobs, **forest_params)
    return forest.fit(X, y).oob_importance()
