"""Validation helpers shared by the binary classifiers."""

import numpy as np
from sklearn.utils.validation import check_array, check_X_y

from ..exceptions import SingleClass


def validate_training(X, y, sample_weight=None):
    """Check a binary training set.

    Returns ``X`` as float64, ``y`` encoded to ``{0, 1}``, the two class
    labels and normalized sample weights (``None`` stays ``None``).
    """
    X, y = check_X_y(X, y, dtype=np.float64, ensure_all_finite=True)
    classes, y01 = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise SingleClass(f"training labels hold a single class {classes.tolist()}")
    if len(classes) > 2:
        raise ValueError(f"binary labels expected, got {len(classes)} classes")
    if sample_weight is not None:
        sample_weight = np.asarray(sample_weight, dtype=np.float64)
        if sample_weight.shape != (len(y01),) or np.any(sample_weight < 0):
            raise ValueError("sample_weight must be a non-negative vector matching y")
    return X, y01.astype(np.int64), classes, sample_weight


def validate_input(estimator, X):
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if X.shape[1] != estimator.n_features_in_:
        raise ValueError(f"expected {estimator.n_features_in_} features, got {X.shape[1]}")
    return X


def canonical_order(X, y):
    """Row permutation that sorts ``(X, y)`` lexicographically.

    Solvers that break ties by row index become independent of the order
    in which training rows were supplied.
    """
    # lexsort keys run from least to most significant: column 0 leads, y breaks ties
    keys = [y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(tuple(keys))
