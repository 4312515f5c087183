"""Repeated stratified k-fold cross-validation with seed-stable parallelism."""

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import clone

from ..exceptions import TooFewPerClass
from .boost import AdaBoost
from .forest import RandomForest
from .metrics import auc, decision_scores, rates
from .naive_bayes import GaussianNaiveBayes
from .svm import SMOClassifier

METRICS = ("accuracy", "sensitivity", "specificity", "auc")
CLASSIFIERS = ("svm", "gnb", "forest", "boost")


def make_classifier(name, **params):
    """Classifier with the reference hyperparameters, overridable by ``params``."""
    if name == "svm":
        return SMOClassifier(**{"C": 1.0, "gamma": 0.0625, **params})
    if name == "gnb":
        return GaussianNaiveBayes(**params)
    if name == "forest":
        return RandomForest(**{"n_trees": 65, **params})
    if name == "boost":
        return AdaBoost(**{"n_rounds": 70, "min_parent": 10, "min_leaf": 5, **params})
    raise ValueError(f"unknown classifier {name!r}; choose from {CLASSIFIERS}")


def stratified_folds(y, k, rng):
    """Fold number for every row.

    Each class's rows are shuffled, the class lists are concatenated and
    rows are dealt to folds round-robin.  Per-fold class counts then differ
    by at most one from proportional, and fold sizes by at most one.
    """
    y = np.asarray(y)
    order = np.concatenate([rng.permutation(np.nonzero(y == c)[0]) for c in np.unique(y)])
    folds = np.empty(len(y), dtype=np.int64)
    folds[order] = np.arange(len(y)) % k
    return folds


def _run_fold(estimator, X, y, train, test, seq):
    model = clone(estimator)
    if "random_state" in model.get_params():
        model.set_params(random_state=seq)
    if "n_jobs" in model.get_params():
        model.set_params(n_jobs=1)
    model.fit(X[train], y[train])
    return model.predict(X[test]), decision_scores(model, X[test])


@dataclass
class CVReport:
    """Per-repeat metrics (percent) and their mean and SD over repeats.

    The SD is taken over the ``repeats`` per-repeat values (each computed
    from the pooled out-of-fold predictions of that repeat), with
    ``ddof=1``; it is 0 for a single repeat.
    """

    classifier: str
    k: int
    repeats: int
    seed: int
    per_repeat: Dict[str, List[float]]
    params: Dict[str, object] = field(default_factory=dict)
    sd_over: str = "repeat"

    def mean(self, metric):
        return float(np.mean(self.per_repeat[metric]))

    def sd(self, metric):
        v = self.per_repeat[metric]
        return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0

    def summary(self):
        return {m: {"mean": self.mean(m), "sd": self.sd(m)} for m in METRICS}

    def to_dict(self):
        return {
            "classifier": self.classifier,
            "params": self.params,
            "k": self.k,
            "repeats": self.repeats,
            "seed": self.seed,
            "sd_over": self.sd_over,
            "summary": self.summary(),
            "per_repeat": self.per_repeat,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["classifier", "metric", "mean", "sd"])
        for m in METRICS:
            w.writerow([self.classifier, m, repr(self.mean(m)), repr(self.sd(m))])
        return buf.getvalue()


def cross_validate(X, y, estimator, k=10, repeats=100, seed=0, n_jobs=1, name=None,
                   pos_label=1):
    """Repeated stratified k-fold evaluation.

    Every (repeat, fold) gets its own seed stream spawned from ``seed``, so
    results are identical for any ``n_jobs``.  Metrics of one repeat are
    computed from its pooled out-of-fold predictions and scores.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if k < 2 or repeats < 1:
        raise ValueError("need k >= 2 and repeats >= 1")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2 or counts.min() < k:
        raise TooFewPerClass(f"class counts {dict(zip(classes.tolist(), counts.tolist()))} "
                             f"do not allow {k} folds")

    root = np.random.SeedSequence(seed)
    plans = []
    for rep_seq in root.spawn(repeats):
        split_seq, *fold_seqs = rep_seq.spawn(k + 1)
        plans.append((stratified_folds(y, k, np.random.default_rng(split_seq)), fold_seqs))

    tasks = [(r, f) for r in range(repeats) for f in range(k)]
    results = Parallel(n_jobs=n_jobs)(
        delayed(_run_fold)(estimator, X, y, np.nonzero(plans[r][0] != f)[0],
                           np.nonzero(plans[r][0] == f)[0], plans[r][1][f])
        for r, f in tasks
    )

    per = {m: [] for m in METRICS}
    for r in range(repeats):
        folds = plans[r][0]
        pred = np.empty(len(y), dtype=y.dtype)
        score = np.empty(len(y))
        for f in range(k):
            test = np.nonzero(folds == f)[0]
            pred[test], score[test] = results[r * k + f]
        acc, sens, spec = rates(y, pred, pos_label)
        per["accuracy"].append(acc)
        per["sensitivity"].append(sens)
        per["specificity"].append(spec)
        per["auc"].append(100.0 * auc(score, y, pos_label))
    params = {kk: v for kk, v in estimator.get_params().items() if kk not in ("n_jobs",)}
    return CVReport(name or type(estimator).__name__, k, repeats, seed, per, params)
