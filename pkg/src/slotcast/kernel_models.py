"""Nearest-neighbour classification, linear soft-margin SVC and RBF epsilon-SVR."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import EmptyTrain, NonConvergenceWarning, SingleClass, TooFewRows
from .features import MinMaxScaler

log = logging.getLogger(__name__)

_TAU = 1e-12


class KNNClassifier(ClassifierMixin, BaseEstimator):
    """Majority vote of the ``n_neighbors`` nearest training rows.

    Predictors are min-max scaled with the training extremes before Euclidean
    distances are taken. Distance ties keep the lower training-row index and
    vote ties go to the first class.
    """

    def __init__(self, n_neighbors=3):
        self.n_neighbors = n_neighbors

    def fit(self, X, y):
        X = check_array(X, dtype=float, ensure_min_samples=0)
        y = np.asarray(y)
        if len(X) == 0:
            raise EmptyTrain("KNN needs at least one training row")
        if len(y) != len(X):
            raise ValueError("X and y lengths differ")
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        self.scaler_ = MinMaxScaler().fit(X)
        self.train_ = self.scaler_.transform(X)
        self.classes_, self.labels_ = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        return self

    def kneighbors(self, X):
        """Indices of the nearest training rows, nearest first."""
        check_is_fitted(self, "train_")
        Q = self.scaler_.transform(check_array(X, dtype=float))
        d2 = ((Q[:, None, :] - self.train_[None, :, :]) ** 2).sum(axis=2)
        k = min(self.n_neighbors, len(self.train_))
        return np.argsort(d2, axis=1, kind="stable")[:, :k]

    def vote_counts(self, X):
        idx = self.kneighbors(X)
        counts = np.zeros((len(idx), len(self.classes_)), dtype=int)
        for c in range(len(self.classes_)):
            counts[:, c] = (self.labels_[idx] == c).sum(axis=1)
        return counts

    def predict_proba(self, X):
        counts = self.vote_counts(X)
        return counts / counts.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.vote_counts(X), axis=1)]


def rbf_kernel(A, B, gamma):
    """exp(-gamma * ||a - b||^2) for every pair of rows."""
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2 * A @ B.T
    return np.exp(-gamma * np.clip(sq, 0, None))


def linear_kernel(A, B):
    return A @ B.T


@dataclass
class SMOResult:
    alpha: np.ndarray
    rho: float
    n_iter: int
    converged: bool
    objective: float


def smo_solve(Q, p, y, C, tol=1e-3, max_iter=None) -> SMOResult:
    """Minimise ``0.5 a'Qa + p'a`` subject to ``y'a = 0`` and ``0 <= a <= C``.

    ``Q`` is the label-signed kernel matrix and ``y`` is +1/-1. Working pairs
    are chosen by maximal violation for the first index and second-order gain
    for the second. Stops when the KKT gap falls below ``tol``.
    """
    Q = np.asarray(Q, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    max_iter = 100 * n if max_iter is None else max_iter
    QD = np.diag(Q).copy()
    a = np.zeros(n)
    G = np.asarray(p, dtype=float).copy()
    converged = False
    it = 0
    while it < max_iter:
        up = ((y > 0) & (a < C)) | ((y < 0) & (a > 0))
        low = ((y > 0) & (a > 0)) | ((y < 0) & (a < C))
        if not up.any() or not low.any():
            converged = True
            break
        score = -y * G
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        gmax = score[i]
        gmax2 = np.max(-score[low])
        if gmax + gmax2 < tol:
            converged = True
            break
        b = gmax + y * G
        quad = QD[i] + QD - 2 * y[i] * y * Q[i]
        quad = np.where(quad > 0, quad, _TAU)
        gain = np.where(low & (b > 0), -(b * b) / quad, np.inf)
        j = int(np.argmin(gain))
        if not np.isfinite(gain[j]):
            converged = True
            break
        ai, aj = a[i], a[j]
        if y[i] != y[j]:
            q = QD[i] + QD[j] + 2 * Q[i, j]
            delta = (-G[i] - G[j]) / (q if q > 0 else _TAU)
            diff = ai - aj
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j], a[i] = 0.0, diff
            elif a[i] < 0:
                a[i], a[j] = 0.0, -diff
            if diff > 0:
                if a[i] > C:
                    a[i], a[j] = C, C - diff
            elif a[j] > C:
                a[j], a[i] = C, C + diff
        else:
            q = QD[i] + QD[j] - 2 * Q[i, j]
            delta = (G[i] - G[j]) / (q if q > 0 else _TAU)
            total = ai + aj
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i], a[j] = C, total - C
                if a[j] > C:
                    a[j], a[i] = C, total - C
            else:
                if a[j] < 0:
                    a[j], a[i] = 0.0, total
                if a[i] < 0:
                    a[i], a[j] = 0.0, total
        G += Q[i] * (a[i] - ai) + Q[j] * (a[j] - aj)
        it += 1
    # bias from free variables, else midpoint of the feasible interval
    yG = y * G
    free = (a > 0) & (a < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        at_ub = a >= C
        ub_mask = (at_ub & (y < 0)) | (~at_ub & (y > 0))
        lb_mask = ~ub_mask
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2) if np.isfinite(ub + lb) else float(ub if np.isfinite(ub) else lb)
    objective = float(0.5 * a @ (G + np.asarray(p, dtype=float)))
    return SMOResult(a, rho, it, converged, objective)


class LinearSVC(ClassifierMixin, BaseEstimator):
    """Soft-margin linear SVM; label 1 only for a strictly positive decision value."""

    def __init__(self, C=1.0, tol=1e-3, max_iter=None):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        if len(self.classes_) != 2:
            raise SingleClass("SVM needs both classes")
        s = 2.0 * y_enc - 1
        Q = (s[:, None] * s[None, :]) * linear_kernel(X, X)
        res = smo_solve(Q, -np.ones(len(s)), s, self.C, self.tol, self.max_iter)
        self.converged_, self.n_iter_ = res.converged, res.n_iter
        if not res.converged:
            warnings.warn(f"SMO stopped after {res.n_iter} iterations", NonConvergenceWarning, stacklevel=2)
        self.alpha_ = res.alpha
        self.support_ = np.flatnonzero(res.alpha > 0)
        self.dual_coef_ = (res.alpha * s)[self.support_]
        self.coef_ = self.dual_coef_ @ X[self.support_] if len(self.support_) else np.zeros(X.shape[1])
        self.intercept_ = -res.rho
        self.n_features_in_ = X.shape[1]
        self.training_error_ = float(np.mean(self.predict(X) != y))
        log.info("linear SVC: C=%s tol=%s iters=%d support=%d", self.C, self.tol, res.n_iter, len(self.support_))
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return check_array(X, dtype=float) @ self.coef_ + self.intercept_

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]


class EpsilonSVR(RegressorMixin, BaseEstimator):
    """Epsilon-insensitive support vector regression with an RBF kernel."""

    def __init__(self, C=1.0, gamma=0.1, epsilon=0.1, tol=1e-3, max_iter=None):
        self.C = C
        self.gamma = gamma
        self.epsilon = epsilon
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        n = len(y)
        if n < 2:
            raise TooFewRows("SVR needs at least two rows")
        K = rbf_kernel(X, X, self.gamma)
        # variables: a (sign +1) then a* (sign -1)
        Q = np.block([[K, -K], [-K, K]])
        p = np.concatenate([self.epsilon - y, self.epsilon + y])
        s = np.concatenate([np.ones(n), -np.ones(n)])
        max_iter = 100 * 2 * n if self.max_iter is None else self.max_iter
        res = smo_solve(Q, p, s, self.C, self.tol, max_iter)
        self.converged_, self.n_iter_ = res.converged, res.n_iter
        if not res.converged:
            warnings.warn(f"SMO stopped after {res.n_iter} iterations", NonConvergenceWarning, stacklevel=2)
        beta = res.alpha[:n] - res.alpha[n:]
        self.alpha_ = res.alpha
        self.support_ = np.flatnonzero(beta != 0)
        self.dual_coef_ = beta[self.support_]
        self.support_vectors_ = X[self.support_]
        self.intercept_ = -res.rho
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "dual_coef_")
        X = check_array(X, dtype=float)
        if not len(self.support_):
            return np.full(len(X), self.intercept_)
        return rbf_kernel(X, self.support_vectors_, self.gamma) @ self.dual_coef_ + self.intercept_
