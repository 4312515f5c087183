"""AdaBoost.M1 over small Gini trees."""

import math

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._base import validate_input, validate_training
from .tree import grow_tree


class AdaBoost(ClassifierMixin, BaseEstimator):
    """Discrete adaptive boosting with exponential-loss reweighting.

    Each round fits a depth-limited tree to the weighted rows, gives it
    weight ``0.5 * log((1 - err) / err)`` and up-weights its mistakes.
    Boosting stops when a learner's weighted error reaches 1/2 (the
    learner is discarded) or hits 0 (the learner is kept and ends the
    ensemble).

    Parameters
    ----------
    n_rounds : int
    min_parent, min_leaf : int
        Node size limits of the weak learners.
    max_depth : int
    """

    def __init__(self, n_rounds=70, min_parent=10, min_leaf=5, max_depth=3):
        self.n_rounds = n_rounds
        self.min_parent = min_parent
        self.min_leaf = min_leaf
        self.max_depth = max_depth

    def fit(self, X, y):
        if self.min_leaf > self.min_parent:
            raise ValueError("min_leaf must not exceed min_parent")
        X, y01, classes, _ = validate_training(X, y)
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        n = len(y01)
        w = np.full(n, 1.0 / n)
        trees, alphas = [], []
        for _ in range(self.n_rounds):
            tree = grow_tree(X, y01, w, None, self.min_parent, self.min_leaf, self.max_depth)
            wrong = (tree.proba(X) > 0.5) != y01
            err = float(w[wrong].sum())
            if err >= 0.5 - 1e-12:  # no better than chance, up to rounding
                if not trees:  # keep one learner so the model can predict
                    trees.append(tree)
                    alphas.append(1.0)
                break
            if err <= 0.0:
                trees.append(tree)
                alphas.append(1.0 if not alphas else max(alphas))
                break
            a = 0.5 * math.log((1 - err) / err)
            trees.append(tree)
            alphas.append(a)
            w = w * np.exp(np.where(wrong, a, -a))
            w /= w.sum()
        self.trees_ = trees
        self.alphas_ = np.array(alphas)
        self.n_rounds_ = len(trees)
        return self

    def decision_function(self, X):
        """Weighted vote in [-1, 1]; positive favours the second class."""
        check_is_fitted(self, "trees_")
        X = validate_input(self, X)
        h = np.array([np.where(t.proba(X) > 0.5, 1.0, -1.0) for t in self.trees_])
        return self.alphas_ @ h / self.alphas_.sum()

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]
