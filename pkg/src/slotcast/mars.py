"""Additive MARS: paired hinge forward pass and GCV backward pruning."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import TooFewRows

log = logging.getLogger(__name__)

_COL_TOL = 1e-10


@dataclass(frozen=True)
class HingeBasis:
    """``max(0, x - knot)`` for direction +1, ``max(0, knot - x)`` for direction -1."""

    feature: int
    knot: float
    direction: int

    def __call__(self, x):
        return np.maximum(0.0, self.direction * (np.asarray(x, dtype=float) - self.knot))

    def label(self, feature_names=None) -> str:
        name = feature_names[self.feature] if feature_names is not None else f"x{self.feature}"
        if self.direction > 0:
            return f"h({name} - {self.knot:g})"
        return f"h({self.knot:g} - {name})"


def hinge_eval(basis: HingeBasis, x):
    return basis(x)


def _design(X, terms):
    cols = [np.ones(len(X))] + [t(X[:, t.feature]) for t in terms]
    return np.column_stack(cols)


def _rss(B, y):
    coef, *_ = np.linalg.lstsq(B, y, rcond=None)
    r = y - B @ coef
    return float(r @ r), coef


def gcv(rss, n, n_terms, penalty=3.0):
    """Generalized cross-validation with effective parameters ``M + penalty * (M - 1) / 2``."""
    c = n_terms + penalty * (n_terms - 1) / 2
    if c >= n:
        return np.inf
    return (rss / n) / (1 - c / n) ** 2


def _pair_gains(Q, r, C1, C2):
    """RSS reduction from adding each candidate hinge pair to the span of ``Q``.

    Returns (gain, use1, use2): columns that are (numerically) already in the
    span are left out so a degenerate hinge never enters the model.
    """
    n1 = (C1 * C1).sum(axis=0)
    n2 = (C2 * C2).sum(axis=0)
    C1 = C1 - Q @ (Q.T @ C1)
    C2 = C2 - Q @ (Q.T @ C2)
    a = (C1 * C1).sum(axis=0)
    d = (C2 * C2).sum(axis=0)
    b = (C1 * C2).sum(axis=0)
    u1 = r @ C1
    u2 = r @ C2
    ok1 = a > _COL_TOL * np.maximum(n1, 1e-300)
    ok2 = d > _COL_TOL * np.maximum(n2, 1e-300)
    g1 = np.where(ok1, u1**2 / np.where(ok1, a, 1.0), 0.0)
    g2 = np.where(ok2, u2**2 / np.where(ok2, d, 1.0), 0.0)
    det = a * d - b * b
    pair_ok = ok1 & ok2 & (det > _COL_TOL * a * d)
    safe = np.where(pair_ok, det, 1.0)
    g12 = np.where(pair_ok, (d * u1**2 - 2 * b * u1 * u2 + a * u2**2) / safe, 0.0)
    gain = np.maximum(g12, np.maximum(g1, g2))
    use1 = np.where(pair_ok, True, ok1 & (g1 >= g2))
    use2 = np.where(pair_ok, True, ok2 & ~(ok1 & (g1 >= g2)))
    return gain, use1, use2


def mars_forward(X, y, max_terms=21, threshold=0.001):
    """Greedy forward pass over hinge pairs with knots at observed values.

    Each step adds the pair (or the single non-degenerate half) that most
    lowers the residual sum of squares of the least-squares refit; ties go
    to the lower feature index, then the lower knot. Stops at ``max_terms``
    (intercept included) or when R^2 improves by less than ``threshold``.
    Returns ``(terms, rsq_path)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < 10:
        raise TooFewRows("MARS needs at least 10 rows")
    tss = float(np.sum((y - y.mean()) ** 2))
    terms: list[HingeBasis] = []
    rsq_path = [0.0]
    if tss == 0:
        return terms, rsq_path
    knots = [np.unique(X[:, f]) for f in range(p)]
    while 1 + len(terms) < max_terms:
        B = _design(X, terms)
        Q, _ = np.linalg.qr(B)
        r = y - Q @ (Q.T @ y)
        best = None
        for f in range(p):
            t = knots[f]
            diff = X[:, f][:, None] - t[None, :]
            gain, use1, use2 = _pair_gains(Q, r, np.maximum(diff, 0), np.maximum(-diff, 0))
            k = int(np.argmax(gain))
            if best is None or gain[k] > best[0] * (1 + 1e-12) + 1e-300:
                best = (float(gain[k]), f, float(t[k]), bool(use1[k]), bool(use2[k]))
        if best is None or best[0] <= 0:
            break
        gain, f, knot, use1, use2 = best
        new = []
        if use1:
            new.append(HingeBasis(f, knot, +1))
        if use2:
            new.append(HingeBasis(f, knot, -1))
        if 1 + len(terms) + len(new) > max_terms:
            new = new[:1]
        rss, _ = _rss(_design(X, terms + new), y)
        rsq = 1 - rss / tss
        if rsq - rsq_path[-1] < threshold:
            log.debug("MARS forward stop: delta R2 %.3g below %.3g", rsq - rsq_path[-1], threshold)
            break
        terms.extend(new)
        rsq_path.append(rsq)
    return terms, rsq_path


@dataclass
class MarsFit:
    terms: list
    intercept: float
    coefficients: np.ndarray
    rss: float
    gcv: float
    rsq: float
    grsq: float
    gcv_path: list
    pruned: list


def mars_backward(X, y, terms, penalty=3.0) -> MarsFit:
    """Delete one term at a time while that strictly lowers GCV (the intercept always stays)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    tss = float(np.sum((y - y.mean()) ** 2))
    current = list(terms)
    rss, coef = _rss(_design(X, current), y)
    score = gcv(rss, n, 1 + len(current), penalty)
    path, pruned = [score], []
    while current:
        trials = []
        for i in range(len(current)):
            rest = current[:i] + current[i + 1:]
            r, _ = _rss(_design(X, rest), y)
            trials.append((gcv(r, n, 1 + len(rest), penalty), i))
        best, i = min(trials)
        if not best < score:
            break
        pruned.append(current.pop(i))
        score = best
        path.append(score)
    rss, coef = _rss(_design(X, current), y)
    gcv0 = gcv(tss, n, 1, penalty)
    grsq = 1 - score / gcv0 if gcv0 > 0 else 0.0
    rsq = 1 - rss / tss if tss > 0 else 0.0
    return MarsFit(current, float(coef[0]), coef[1:], rss, score, rsq, grsq, path, pruned)


class MARSRegressor(RegressorMixin, BaseEstimator):
    """Degree-one MARS model: a sum of hinge functions of single predictors."""

    def __init__(self, max_terms=21, threshold=0.001, penalty=3.0, feature_names=None):
        self.max_terms = max_terms
        self.threshold = threshold
        self.penalty = penalty
        self.feature_names = feature_names

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        self.forward_terms_, self.forward_rsq_ = mars_forward(X, y, self.max_terms, self.threshold)
        fit = mars_backward(X, y, self.forward_terms_, self.penalty)
        self.fit_ = fit
        self.terms_ = fit.terms
        self.intercept_ = fit.intercept
        self.coef_ = fit.coefficients
        self.rss_, self.gcv_, self.rsq_, self.grsq_ = fit.rss, fit.gcv, fit.rsq, fit.grsq
        self.n_features_in_ = X.shape[1]
        log.info("MARS: %d forward terms, %d pruned, penalty %s", len(self.forward_terms_),
                 len(fit.pruned), self.penalty)
        return self

    def predict(self, X):
        check_is_fitted(self, "terms_")
        X = check_array(X, dtype=float)
        return _design(X, self.terms_) @ np.concatenate([[self.intercept_], self.coef_])

    def term_labels(self):
        check_is_fitted(self, "terms_")
        return ["(Intercept)"] + [t.label(self.feature_names) for t in self.terms_]

    def summary(self) -> str:
        labels = self.term_labels()
        width = max(len(s) for s in labels)
        coefs = [self.intercept_, *self.coef_]
        lines = [f"{lab:<{width}}  {c: .6g}" for lab, c in zip(labels, coefs)]
        n_forward = 1 + len(self.forward_terms_)
        lines.append(f"Selected {1 + len(self.terms_)} of {n_forward} terms")
        lines.append(f"GCV {self.gcv_:.4g}  RSS {self.rss_:.4f}  GRSq {self.grsq_:.4f}  RSq {self.rsq_:.4f}")
        return "\n".join(lines)
