"""Binary classification metrics (percentages) and rank-based AUC."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ..exceptions import EmptyTest, SingleClass


@dataclass(frozen=True)
class Evaluation:
    accuracy: float
    sensitivity: float
    specificity: float
    scores: np.ndarray


def auc(scores, labels, pos_label=1):
    """Area under the ROC curve, ``P(s+ > s-) + P(s+ == s-) / 2``.

    Computed from midranks of the pooled scores in O(n log n).
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    pos = np.asarray(labels).ravel() == pos_label
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def rates(y_true, y_pred, pos_label=1):
    """Accuracy, sensitivity (positive recall) and specificity, in percent.

    A recall with no members of its class is reported as NaN.
    """
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y_true.size == 0:
        raise EmptyTest("no test rows")
    pos = y_true == pos_label
    hit = y_true == y_pred
    acc = 100.0 * hit.mean()
    sens = 100.0 * hit[pos].mean() if pos.any() else float("nan")
    spec = 100.0 * hit[~pos].mean() if (~pos).any() else float("nan")
    return float(acc), float(sens), float(spec)


def decision_scores(model, X):
    """Continuous score, larger meaning more likely the second class."""
    if hasattr(model, "decision_function"):
        return np.asarray(model.decision_function(X), dtype=np.float64)
    return np.asarray(model.predict_proba(X), dtype=np.float64)[:, 1]


def evaluate(model, X, y, pos_label=1) -> Evaluation:
    """Score a fitted model on a test set."""
    X = np.asarray(X, dtype=np.float64)
    if len(X) == 0:
        raise EmptyTest("no test rows")
    pred = model.predict(X)
    acc, sens, spec = rates(y, pred, pos_label)
    return Evaluation(acc, sens, spec, decision_scores(model, X))
