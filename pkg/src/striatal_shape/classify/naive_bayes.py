"""Gaussian naive Bayes with a relative variance floor."""

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.preprocessing import StandardScaler
from sklearn.utils.validation import check_is_fitted

from ._base import validate_input, validate_training


class GaussianNaiveBayes(ClassifierMixin, BaseEstimator):
    """Per-class independent Gaussians; priors from training frequencies.

    Parameters
    ----------
    var_floor : float
        Class variances are raised to at least
        ``var_floor * (variance of the feature over all rows + 1e-12)``.
    standardize : bool
        z-score features with training statistics first.
    """

    def __init__(self, var_floor=1e-9, standardize=True):
        self.var_floor = var_floor
        self.standardize = standardize

    def fit(self, X, y):
        X, y01, classes, _ = validate_training(X, y)
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        if self.standardize:
            self.scaler_ = StandardScaler().fit(X)
            X = self.scaler_.transform(X)
        else:
            self.scaler_ = None
        floor = self.var_floor * (X.var(axis=0) + 1e-12)
        self.theta_ = np.vstack([X[y01 == c].mean(axis=0) for c in (0, 1)])
        var = np.vstack([X[y01 == c].var(axis=0) for c in (0, 1)])
        self.var_ = np.maximum(var, floor)
        self.class_prior_ = np.array([np.mean(y01 == c) for c in (0, 1)])
        return self

    def _joint_log_likelihood(self, X):
        check_is_fitted(self, "theta_")
        X = validate_input(self, X)
        if self.scaler_ is not None:
            X = self.scaler_.transform(X)
        out = np.empty((len(X), 2))
        for c in (0, 1):
            ll = -0.5 * (np.log(2 * np.pi * self.var_[c]).sum()
                         + (((X - self.theta_[c]) ** 2) / self.var_[c]).sum(axis=1))
            out[:, c] = np.log(self.class_prior_[c]) + ll
        return out

    def predict_log_proba(self, X):
        jll = self._joint_log_likelihood(X)
        return jll - logsumexp(jll, axis=1, keepdims=True)

    def predict_proba(self, X):
        return np.exp(self.predict_log_proba(X))

    def decision_function(self, X):
        """Log-posterior ratio of the second class to the first."""
        jll = self._joint_log_likelihood(X)
        return jll[:, 1] - jll[:, 0]

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]
