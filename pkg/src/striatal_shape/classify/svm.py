"""RBF support vector machine trained by sequential minimal optimization."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.preprocessing import StandardScaler
from sklearn.utils.validation import check_is_fitted

from ..exceptions import NonConvergence
from ._base import canonical_order, validate_input, validate_training

_TAU = 1e-12


def rbf_kernel(A, B, gamma):
    """``exp(-gamma * |a - b|^2)`` for every row pair."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def smo(K, y, C, tol=1e-3, max_iter=1_000_000):
    """Solve the C-SVC dual for a precomputed kernel matrix.

    Minimizes ``a'Qa / 2 - sum(a)`` with ``Q = yy' * K``, ``0 <= a <= C``
    and ``y'a = 0``, using maximal-violating-pair selection for the first
    index and second-order gain for the second (the working-set rule of
    LIBSVM).  Ties go to the lowest index.

    Parameters
    ----------
    K : (n, n) array
    y : (n,) array of +1/-1

    Returns
    -------
    alpha : (n,) array
    rho : float
        Offset; decision values are ``sum(alpha * y * K[:, x]) - rho``.
    n_iter : int
    """
    n = len(y)
    y = y.astype(np.float64)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()

    for it in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            break
        cand = np.where(up, yg, -np.inf)
        i = int(np.argmax(cand))
        g_max = cand[i]
        g_min = np.where(low, yg, np.inf).min()
        if g_max - g_min < tol:
            break

        b = g_max - yg
        ok = low & (b > 0)
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a > 0, a, _TAU)
        gain = np.where(ok, -(b * b) / a, np.inf)
        j = int(np.argmin(gain))

        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(diag[i] + diag[j] - 2.0 * K[i, j], _TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * K[i, j], _TAU)
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total

        di, dj = ni - ai, nj - aj
        alpha[i], alpha[j] = ni, nj
        # Q[:, k] = y * y[k] * K[:, k]
        grad += y * (y[i] * di * K[:, i] + y[j] * dj * K[:, j])
    else:
        raise NonConvergence(f"SMO did not reach tolerance {tol} in {max_iter} iterations")

    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yg[free].mean())
    else:
        # no free vectors: midpoint of the feasible interval for rho
        at_upper = alpha >= C
        ub = yg[(at_upper & (y < 0)) | (~at_upper & (y > 0))]
        lb = yg[(at_upper & (y > 0)) | (~at_upper & (y < 0))]
        if ub.size and lb.size:
            rho = float((ub.min() + lb.max()) / 2)
        else:
            rho = float(ub.min() if ub.size else lb.max())
    return alpha, rho, it


class SMOClassifier(ClassifierMixin, BaseEstimator):
    """Binary soft-margin SVM with an RBF kernel.

    Parameters
    ----------
    C : float
        Box constraint.
    gamma : float
        Kernel width, ``K(u, v) = exp(-gamma |u - v|^2)``.
    tol : float
        Stop when the maximal KKT violation falls below ``tol``.
    max_iter : int
    standardize : bool
        z-score features with statistics of the training rows.

    Notes
    -----
    Training rows are put in a canonical (lexicographic) order before
    solving, so the fitted model does not depend on row order.
    """

    def __init__(self, C=1.0, gamma=0.0625, tol=1e-3, max_iter=1_000_000, standardize=True):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.standardize = standardize

    def fit(self, X, y):
        if not self.C > 0 or not self.gamma > 0:
            raise ValueError("C and gamma must be positive")
        X, y01, classes, _ = validate_training(X, y)
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        # order first so that even the scaler statistics are bit-identical
        order = canonical_order(X, y01)
        X, y01 = X[order], y01[order]
        if self.standardize:
            self.scaler_ = StandardScaler().fit(X)
            X = self.scaler_.transform(X)
        else:
            self.scaler_ = None
        ypm = np.where(y01 == 1, 1.0, -1.0)
        K = rbf_kernel(X, X, self.gamma)
        alpha, rho, n_iter = smo(K, ypm, self.C, self.tol, self.max_iter)
        sv = alpha > 0
        self.support_vectors_ = X[sv]
        self.dual_coef_ = (alpha * ypm)[sv]
        self.intercept_ = -rho
        self.n_iter_ = n_iter
        return self

    def _prepare(self, X):
        check_is_fitted(self, "dual_coef_")
        X = validate_input(self, X)
        return self.scaler_.transform(X) if self.scaler_ is not None else X

    def decision_function(self, X):
        X = self._prepare(X)
        if len(self.dual_coef_) == 0:
            return np.full(len(X), self.intercept_)
        return rbf_kernel(X, self.support_vectors_, self.gamma) @ self.dual_coef_ + self.intercept_

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]
