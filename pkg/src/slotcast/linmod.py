"""Linear models: OLS with VIF screening and stepwise AIC selection, IRLS
logistic regression, and residual diagnostics."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import AllZeroResiduals, RankDeficient, SeparationWarning, SingleClass

log = logging.getLogger(__name__)

VIF_INFINITE = math.inf


def _with_intercept(X: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(len(X)), X])


def _lstsq(A: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        raise RankDeficient(f"design of {A.shape[1]} columns has rank {rank}")
    return coef, y - A @ coef


def _r_squared(y: np.ndarray, resid: np.ndarray) -> float:
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        return 0.0
    return 1.0 - float(resid @ resid) / tss


@dataclass(frozen=True)
class OlsFit:
    intercept: float
    coefficients: np.ndarray
    std_errors: np.ndarray  # intercept first
    pvalues: np.ndarray  # intercept first
    residuals: np.ndarray
    rss: float
    r2: float
    adj_r2: float
    f_stat: float
    f_pvalue: float
    aic: float
    selected: tuple[str, ...] = ()


def aic(rss: float, n: int, k: int) -> float:
    """Gaussian AIC up to an additive constant; ``k`` counts every fitted coefficient."""
    return n * math.log(max(rss, 1e-300) / n) + 2 * k


def ols(X, y, names=None) -> OlsFit:
    """Ordinary least squares with an intercept and the usual inference."""
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    A = _with_intercept(X)
    k = p + 1
    if n <= k:
        raise RankDeficient(f"{n} rows cannot identify {k} coefficients")
    coef, resid = _lstsq(A, y)
    rss = float(resid @ resid)
    r2 = _r_squared(y, resid)
    dof = n - k
    sigma2 = rss / dof
    cov = sigma2 * np.linalg.pinv(A.T @ A)
    se = np.sqrt(np.clip(np.diag(cov), 0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(se > 0, coef / se, np.where(coef == 0, 0.0, np.inf))
    pvals = 2 * stats.t.sf(np.abs(tvals), dof)
    adj = 1 - (1 - r2) * (n - 1) / dof if p else r2
    if p and r2 < 1:
        f = (r2 / p) / ((1 - r2) / dof)
        fp = float(stats.f.sf(f, p, dof))
    else:
        f, fp = (math.inf, 0.0) if p else (0.0, 1.0)
    return OlsFit(
        intercept=float(coef[0]), coefficients=coef[1:], std_errors=se, pvalues=pvals,
        residuals=resid, rss=rss, r2=r2, adj_r2=adj, f_stat=float(f), f_pvalue=fp,
        aic=aic(rss, n, k), selected=tuple(names) if names is not None else tuple(range(p)),
    )


def vif(X) -> np.ndarray:
    """Variance inflation factor of each column against all the others.

    Perfectly explained columns (and constant columns) get ``inf``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n < p + 2:
        raise RankDeficient(f"VIF needs at least {p + 2} rows for {p} predictors, got {n}")
    out = np.empty(p)
    for i in range(p):
        y = X[:, i]
        others = _with_intercept(np.delete(X, i, axis=1))
        coef, *_ = np.linalg.lstsq(others, y, rcond=None)
        resid = y - others @ coef
        tss = float(np.sum((y - y.mean()) ** 2))
        unexplained = float(resid @ resid) / tss if tss > 0 else 0.0
        out[i] = VIF_INFINITE if unexplained < 1e-12 else 1.0 / unexplained
    return out


def drop_collinear(X, names, vif_threshold: float = 10.0) -> tuple[list[str], list[tuple[str, float]]]:
    """Repeatedly drop the highest-VIF predictor until every VIF is at most the threshold.

    Ties on the maximum remove the lexicographically greatest name. Returns the
    kept names (original order) and the removal log as ``(name, vif)`` pairs.
    """
    if vif_threshold <= 1:
        raise ValueError("vif_threshold must exceed 1")
    X = np.asarray(X, dtype=float)
    keep = list(names)
    cols = list(range(X.shape[1]))
    removed: list[tuple[str, float]] = []
    while len(cols) > 1:
        values = vif(X[:, cols])
        worst = values.max()
        if worst <= vif_threshold:
            break
        tied = [j for j, v in enumerate(values) if v == worst]
        j = max(tied, key=lambda t: keep[t])
        removed.append((keep[j], float(worst)))
        log.info("dropping %s (VIF %.3f)", keep[j], worst)
        del keep[j], cols[j]
    return keep, removed


class VIFSelector(TransformerMixin, BaseEstimator):
    """Transformer keeping the columns that survive :func:`drop_collinear`."""

    def __init__(self, vif_threshold=10.0, feature_names=None):
        self.vif_threshold = vif_threshold
        self.feature_names = feature_names

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        names = list(self.feature_names) if self.feature_names is not None else [f"x{i}" for i in range(X.shape[1])]
        kept, self.removed_ = drop_collinear(X, names, self.vif_threshold)
        self.support_ = np.array([n in kept for n in names])
        self.selected_names_ = kept
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "support_")
        return check_array(X, dtype=float)[:, self.support_]


class StepwiseOLS(RegressorMixin, BaseEstimator):
    """OLS regression with stepwise predictor selection by AIC.

    Parameters
    ----------
    direction : {"backward", "forward", None}
        ``backward`` starts from all predictors and removes, one at a time,
        the non-significant predictor whose removal lowers AIC the most.
        ``forward`` starts from the intercept-only model and adds the
        significant predictor that lowers AIC the most. ``None`` fits all
        predictors.
    alpha : float or None
        Significance level of the coefficient t-tests gating each step.
        ``None`` turns the gate off, leaving a pure AIC search.
    feature_names : sequence of str, optional
        Names used for ``selected_``.
    """

    def __init__(self, direction="backward", alpha=0.05, feature_names=None):
        self.direction = direction
        self.alpha = alpha
        self.feature_names = feature_names

    def _fit_subset(self, X, y, subset):
        return ols(X[:, list(subset)], y, names=[self._names[j] for j in subset])

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        n, p = X.shape
        self._names = list(self.feature_names) if self.feature_names is not None else [f"x{i}" for i in range(p)]
        if self.direction not in ("backward", "forward", None):
            raise ValueError(f"unknown direction {self.direction!r}")
        self.path_ = []
        if self.direction == "forward":
            current: list[int] = []
            fit = self._fit_subset(X, y, current)
            while True:
                best = None
                for j in range(p):
                    if j in current:
                        continue
                    trial = sorted(current + [j])
                    try:
                        cand = self._fit_subset(X, y, trial)
                    except RankDeficient:
                        continue
                    pval = cand.pvalues[1 + trial.index(j)]
                    significant = self.alpha is None or pval <= self.alpha
                    if cand.aic < fit.aic and significant and (best is None or cand.aic < best[1].aic):
                        best = (j, cand)
                if best is None:
                    break
                current = sorted(current + [best[0]])
                fit = best[1]
                self.path_.append(("+", self._names[best[0]], fit.aic))
        else:
            current = list(range(p))
            fit = self._fit_subset(X, y, current)
            while self.direction == "backward" and current:
                best = None
                for pos, j in enumerate(current):
                    if self.alpha is not None and fit.pvalues[1 + pos] <= self.alpha:
                        continue
                    trial = current[:pos] + current[pos + 1:]
                    cand = self._fit_subset(X, y, trial)
                    if cand.aic < fit.aic and (best is None or cand.aic < best[1].aic):
                        best = (j, cand)
                if best is None:
                    break
                current.remove(best[0])
                fit = best[1]
                self.path_.append(("-", self._names[best[0]], fit.aic))
        self.support_ = np.isin(np.arange(p), current)
        self.fit_ = fit
        self.selected_ = list(fit.selected)
        self.coef_ = np.zeros(p)
        self.coef_[current] = fit.coefficients
        self.intercept_ = fit.intercept
        self.n_features_in_ = p
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        return X @ self.coef_ + self.intercept_


def _sigmoid(z):
    return special.expit(z)


def log_likelihood(coef: np.ndarray, A: np.ndarray, y: np.ndarray) -> float:
    """Bernoulli log-likelihood for a design that already carries its intercept column."""
    z = A @ coef
    return float(np.sum(y * z - np.logaddexp(0.0, z)))


class IRLSLogisticRegression(ClassifierMixin, BaseEstimator):
    """Binary logistic regression fitted by iteratively reweighted least squares.

    A row is labelled 1 only when its probability strictly exceeds
    ``threshold``. Perfect separation shows up as diverging coefficients: the
    fit stops once their norm passes ``max_coef_norm`` (rescaling them onto
    that norm), or when the iteration cap is hit with every training row
    fitted to within 1e-6. Either way ``separated_`` is set and a
    :class:`SeparationWarning` is emitted.
    """

    def __init__(self, threshold=0.5, max_iter=100, tol=1e-8, ridge=1e-10, max_coef_norm=1e3):
        self.threshold = threshold
        self.max_iter = max_iter
        self.tol = tol
        self.ridge = ridge
        self.max_coef_norm = max_coef_norm

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        classes = np.unique(y)
        if len(classes) != 2:
            raise SingleClass(f"need two classes, got {classes.tolist()}")
        self.classes_ = classes
        t = (y == classes[1]).astype(float)
        A = _with_intercept(X)
        beta = np.zeros(A.shape[1])
        self.separated_ = False
        self.converged_ = False
        for it in range(1, self.max_iter + 1):
            mu = _sigmoid(A @ beta)
            w = np.clip(mu * (1 - mu), 1e-12, None)
            H = A.T @ (w[:, None] * A) + self.ridge * np.eye(A.shape[1])
            step = np.linalg.solve(H, A.T @ (t - mu))
            beta = beta + step
            norm = np.linalg.norm(beta)
            if norm > self.max_coef_norm:
                beta *= self.max_coef_norm / norm
                self.separated_ = True
                break
            if np.max(np.abs(step)) < self.tol:
                self.converged_ = True
                break
        self.n_iter_ = it
        if not self.converged_ and np.max(np.abs(t - _sigmoid(A @ beta))) < 1e-6:
            self.separated_ = True
        if self.separated_:
            warnings.warn("logistic coefficients diverged; data look separable", SeparationWarning, stacklevel=2)
        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:]
        self.log_likelihood_ = log_likelihood(beta, A, t)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p1 = _sigmoid(self.decision_function(X))
        return np.column_stack([1 - p1, p1])

    def predict(self, X):
        p1 = self.predict_proba(X)[:, 1]
        return np.where(p1 > self.threshold, self.classes_[1], self.classes_[0])


@dataclass(frozen=True)
class DiagnosticsReport:
    bp_stat: float
    bp_p: float
    dw_stat: float
    dw_interpretation: str
    extra: dict = field(default_factory=dict)


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-square distribution via the regularized incomplete gamma."""
    if x <= 0:
        return 1.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def breusch_pagan(residuals, design) -> tuple[float, float]:
    """Breusch-Pagan statistic ``n * R^2`` of squared residuals on the design, and its p-value.

    ``design`` holds the model's predictors without an intercept column.
    """
    e2 = np.asarray(residuals, dtype=float) ** 2
    Z = np.asarray(design, dtype=float).reshape(len(e2), -1)
    n, k = Z.shape
    if n <= k + 1:
        raise RankDeficient("too few residuals for the auxiliary regression")
    A = _with_intercept(Z)
    coef, resid = _lstsq(A, e2)
    stat = n * max(_r_squared(e2, resid), 0.0)
    return stat, chi2_sf(stat, k)


def durbin_watson(residuals) -> float:
    e = np.asarray(residuals, dtype=float)
    if len(e) < 2:
        raise ValueError("need at least two residuals")
    denom = float(e @ e)
    if denom == 0.0:
        raise AllZeroResiduals("Durbin-Watson undefined for all-zero residuals")
    return float(np.sum(np.diff(e) ** 2) / denom)


def interpret_dw(dw: float, band: float = 0.5) -> str:
    if dw < 2 - band:
        return "positive_autocorrelation"
    if dw > 2 + band:
        return "negative_autocorrelation"
    return "no_autocorrelation"


def diagnostics(residuals, design) -> DiagnosticsReport:
    bp, bp_p = breusch_pagan(residuals, design)
    dw = durbin_watson(residuals)
    return DiagnosticsReport(bp, bp_p, dw, interpret_dw(dw))
