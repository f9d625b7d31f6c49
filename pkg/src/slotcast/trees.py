"""CART trees and tree ensembles (bagging, AdaBoost.M1, gradient boosting, random forest)."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import SingleClass, TooFewRows

LEAF = -1
_TIE_EPS = 1e-12


@dataclass
class CartNode:
    """Nested view of one tree node; ``split_feature is None`` marks a leaf."""

    split_feature: int | None
    split_value: float
    left: "CartNode | None"
    right: "CartNode | None"
    leaf_value: np.ndarray
    n_samples: int


class Tree:
    """A fitted binary tree stored as parallel node arrays (node 0 is the root).

    ``value[i]`` is the weighted class distribution (classification) or the
    weighted mean target (regression, a length-1 vector) of node ``i``.
    Rows with ``x[feature] <= threshold`` go left.
    """

    def __init__(self, feature, threshold, left, right, value, n_samples, depth):
        self.feature = np.asarray(feature, dtype=np.intp)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.intp)
        self.right = np.asarray(right, dtype=np.intp)
        self.value = np.asarray(value, dtype=float).reshape(len(self.feature), -1)
        self.n_samples = np.asarray(n_samples, dtype=np.intp)
        self.depth = np.asarray(depth, dtype=np.intp)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Index of the leaf reached by every row."""
        node = np.zeros(len(X), dtype=np.intp)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active[rows] = self.feature[node[rows]] != LEAF
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def path_lengths(self, X: np.ndarray) -> np.ndarray:
        return self.depth[self.apply(X)]

    def to_nodes(self, i: int = 0) -> CartNode:
        if self.feature[i] == LEAF:
            return CartNode(None, math.nan, None, None, self.value[i].copy(), int(self.n_samples[i]))
        return CartNode(int(self.feature[i]), float(self.threshold[i]), self.to_nodes(int(self.left[i])),
                        self.to_nodes(int(self.right[i])), self.value[i].copy(), int(self.n_samples[i]))

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return np.array_equal(self.threshold, other.threshold, equal_nan=True) and all(
            np.array_equal(getattr(self, a), getattr(other, a))
            for a in ("feature", "left", "right", "value", "n_samples"))

    # s-expression round trip -------------------------------------------------

    def to_sexpr(self, feature_names=None) -> str:
        def emit(i):
            vals = " ".join(repr(float(v)) for v in self.value[i])
            if self.feature[i] == LEAF:
                return f"(leaf (n {self.n_samples[i]}) (value {vals}))"
            f = int(self.feature[i])
            label = f' "{feature_names[f]}"' if feature_names is not None else ""
            return (f"(split (feature {f}{label}) (threshold {float(self.threshold[i])!r}) "
                    f"(n {self.n_samples[i]}) (value {vals}) {emit(self.left[i])} {emit(self.right[i])})")
        return emit(0)

    @classmethod
    def from_sexpr(cls, text: str) -> "Tree":
        return cls._from_parsed(parse_sexpr(text))

    @classmethod
    def _from_parsed(cls, expr) -> "Tree":
        cols = {k: [] for k in ("feature", "threshold", "left", "right", "value", "n", "depth")}

        def field(node, key):
            return next(item[1:] for item in node[1:] if isinstance(item, list) and item[0] == key)

        def walk(node, depth):
            i = len(cols["feature"])
            for k in cols:
                cols[k].append(None)
            cols["value"][i] = [float(v) for v in field(node, "value")]
            cols["n"][i] = int(field(node, "n")[0])
            cols["depth"][i] = depth
            if node[0] == "leaf":
                cols["feature"][i], cols["threshold"][i] = LEAF, math.nan
                cols["left"][i] = cols["right"][i] = LEAF
            else:
                cols["feature"][i] = int(field(node, "feature")[0])
                cols["threshold"][i] = float(field(node, "threshold")[0])
                kids = [c for c in node[1:] if isinstance(c, list) and c[0] in ("leaf", "split")]
                cols["left"][i] = walk(kids[0], depth + 1)
                cols["right"][i] = walk(kids[1], depth + 1)
            return i

        walk(expr, 0)
        return cls(cols["feature"], cols["threshold"], cols["left"], cols["right"],
                   cols["value"], cols["n"], cols["depth"])


_TOKEN = re.compile(r'\s*(\(|\)|"[^"]*"|[^\s()"]+)')


def parse_sexpr(text: str):
    """Parse one s-expression into nested lists of strings (quotes stripped)."""
    tokens = _TOKEN.findall(text)
    pos = 0

    def read():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            out = []
            while tokens[pos] != ")":
                out.append(read())
            pos += 1
            return out
        return tok[1:-1] if tok.startswith('"') else tok

    expr = read()
    if pos != len(tokens):
        raise ValueError("trailing tokens after s-expression")
    return expr


# -- builder ------------------------------------------------------------------

def _node_impurity(stats_w, task):
    if task == "cls":
        total = stats_w.sum()
        return 1.0 - float(np.sum((stats_w / total) ** 2)) if total > 0 else 0.0
    w, wy, wyy = stats_w
    return max(wyy / w - (wy / w) ** 2, 0.0) if w > 0 else 0.0


def _best_split(Xn, yn, wn, features, task, n_classes, min_node):
    """Best (child impurity, feature, threshold) over ``features`` for one node, or None.

    All candidate features are scanned at once: column ``j`` of each array
    below is feature ``features[j]`` sorted ascending, and row ``i`` is the
    boundary between sorted positions ``i`` and ``i + 1``.
    """
    m = len(yn)
    if m < 2 * min_node:
        return None
    features = np.asarray(features, dtype=np.intp)
    cols = Xn[:, features]
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    ws = wn[order]
    W = wn.sum()
    valid = xs[:-1] < xs[1:]
    n_left = np.arange(1, m)
    valid &= ((n_left >= min_node) & (m - n_left >= min_node))[:, None]
    wl = np.cumsum(ws, axis=0)[:-1]
    wr = W - wl
    valid &= (wl > 0) & (wr > 0)
    if not valid.any():
        return None
    wl_safe = np.where(valid, wl, 1.0)
    wr_safe = np.where(valid, wr, 1.0)
    ys = yn[order]
    if task == "cls":
        # w * gini = w - sum_k c_k^2 / w on each side
        sq_l = np.zeros_like(wl)
        sq_r = np.zeros_like(wl)
        for k in range(n_classes):
            wk = ws * (ys == k)
            cl = np.cumsum(wk, axis=0)[:-1]
            cr = wk.sum(axis=0) - cl
            sq_l += cl * cl
            sq_r += cr * cr
        child = (wl - sq_l / wl_safe + wr - sq_r / wr_safe) / W
    else:
        wy = ws * ys
        sl = np.cumsum(wy, axis=0)[:-1]
        ssl = np.cumsum(wy * ys, axis=0)[:-1]
        st = wy.sum(axis=0)
        sst = (wy * ys).sum(axis=0)
        child = np.clip(ssl - sl**2 / wl_safe + (sst - ssl) - (st - sl) ** 2 / wr_safe, 0, None) / W
    child = np.where(valid, child, np.inf)
    rows = np.argmin(child, axis=0)  # first minimum -> lowest split value per feature
    per_feature = child[rows, np.arange(len(features))]
    best = per_feature.min()
    j = int(np.flatnonzero(per_feature <= best + _TIE_EPS * max(1.0, abs(best)))[0])
    i = rows[j]
    lo, hi = xs[i, j], xs[i + 1, j]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return float(per_feature[j]), int(features[j]), float(thr)


def build_tree(X, y, sample_weight, task, n_classes=0, min_node=5, max_depth=30,
               min_impurity_decrease=1e-7, max_features=None, rng=None) -> Tree:
    """Grow a CART tree greedily (Gini for ``task="cls"``, squared error for ``"reg"``).

    Each split is the best over all candidate features and all midpoints of
    consecutive distinct sorted values; ties go to the lower feature index,
    then the lower threshold. A split is kept only if it lowers the node's
    (weighted) impurity by at least ``min_impurity_decrease``. With
    ``max_features`` set, every node draws that many candidate features
    uniformly without replacement from ``rng``.
    """
    n, p = X.shape
    feat, thr, left, right, value, count, depths = [], [], [], [], [], [], []

    def node_stats(idx):
        w = sample_weight[idx]
        if task == "cls":
            s = np.bincount(y[idx], weights=w, minlength=n_classes).astype(float)
            return s, s / s.sum()
        yy = y[idx]
        s = np.array([w.sum(), w @ yy, w @ (yy * yy)])
        return s, np.array([s[1] / s[0]])

    root = np.arange(n)
    stack = [(root, 0, None, False)]
    while stack:
        idx, depth, parent, is_right = stack.pop()
        i = len(feat)
        if parent is not None:
            (right if is_right else left)[parent] = i
        stats_w, val = node_stats(idx)
        feat.append(LEAF)
        thr.append(math.nan)
        left.append(LEAF)
        right.append(LEAF)
        value.append(val)
        count.append(len(idx))
        depths.append(depth)
        impurity = _node_impurity(stats_w, task)
        if depth >= max_depth or len(idx) < 2 * min_node or impurity <= 1e-15:
            continue
        if max_features is not None and max_features < p:
            features = np.sort(rng.choice(p, size=max_features, replace=False))
        else:
            features = range(p)
        best = _best_split(X[idx], y[idx], sample_weight[idx], features, task, n_classes, min_node)
        if best is None:
            continue
        child_imp, f, t = best
        if impurity - child_imp < min_impurity_decrease:
            continue
        feat[i], thr[i] = f, t
        go_left = X[idx, f] <= t
        # right pushed first so the left subtree is numbered first
        stack.append((idx[~go_left], depth + 1, i, True))
        stack.append((idx[go_left], depth + 1, i, False))
    return Tree(feat, thr, left, right, value, count, depths)


# -- single trees -------------------------------------------------------------

class _CartBase(BaseEstimator):
    _task = "cls"

    def __init__(self, min_node=5, max_depth=30, min_impurity_decrease=1e-7, max_features=None, random_state=0):
        self.min_node = min_node
        self.max_depth = max_depth
        self.min_impurity_decrease = min_impurity_decrease
        self.max_features = max_features
        self.random_state = random_state

    def _grow(self, X, y_enc, sample_weight, n_classes=0, rng=None):
        if len(X) < 2 * self.min_node:
            raise TooFewRows(f"need at least {2 * self.min_node} rows, got {len(X)}")
        if self.max_features is not None and not 1 <= self.max_features <= X.shape[1]:
            raise ValueError("max_features must lie in [1, n_features]")
        if rng is None:
            rng = np.random.default_rng(self.random_state)
        return build_tree(X, y_enc, sample_weight, self._task, n_classes, self.min_node,
                          self.max_depth, self.min_impurity_decrease, self.max_features, rng)

    def to_sexpr(self, feature_names=None) -> str:
        check_is_fitted(self, "tree_")
        return self.tree_.to_sexpr(feature_names)


class CARTClassifier(ClassifierMixin, _CartBase):
    """Binary-split classification tree grown on weighted Gini impurity."""

    _task = "cls"

    def fit(self, X, y, sample_weight=None, rng=None):
        X, y = check_X_y(X, y, dtype=float)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        self.tree_ = self._grow(X, y_enc, w, len(self.classes_), rng)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "tree_")
        return self.tree_.predict_value(check_array(X, dtype=float))

    def predict(self, X):
        # argmax picks the lowest class index on ties
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class CARTRegressor(RegressorMixin, _CartBase):
    """Binary-split regression tree grown on squared error."""

    _task = "reg"

    def fit(self, X, y, sample_weight=None, rng=None):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        self.tree_ = self._grow(X, y, w, rng=rng)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        return self.tree_.predict_value(check_array(X, dtype=float))[:, 0]


# -- ensembles ----------------------------------------------------------------

def member_rng(seed, index):
    """Independent generator per ensemble member; insensitive to fitting order."""
    return np.random.default_rng([int(seed), int(index)])


class _EnsembleBase(BaseEstimator):
    kind = "bag"

    def _tree_params(self):
        return dict(min_node=self.min_node, max_depth=self.max_depth,
                    min_impurity_decrease=self.min_impurity_decrease)

    def to_sexpr(self, feature_names=None) -> str:
        check_is_fitted(self, "estimators_")
        weights = " ".join(repr(float(w)) for w in self.estimator_weights_)
        members = " ".join(t.tree_.to_sexpr(feature_names) for t in self.estimators_)
        return f"(ensemble (kind {self.kind}) (seed {self.random_state}) (weights {weights}) (members {members}))"


def _draw_sample(rng, n, bootstrap):
    if bootstrap:
        return rng.integers(0, n, size=n)
    return np.arange(n)


class _BaggedTrees(_EnsembleBase):
    """Shared bootstrap-and-grow loop for bagging and random forests."""

    def _fit_members(self, X, y, task):
        n = len(X)
        if n < 2 * self.min_node:
            raise TooFewRows(f"need at least {2 * self.min_node} rows, got {n}")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        mtry = getattr(self, "max_features", None)
        if mtry is not None and not 1 <= mtry <= X.shape[1]:
            raise ValueError("max_features must lie in [1, n_features]")
        self.estimators_, self.samples_ = [], []
        for i in range(self.n_estimators):
            rng = member_rng(self.random_state, i)
            sample = _draw_sample(rng, n, self.bootstrap)
            Est = CARTClassifier if task == "cls" else CARTRegressor
            tree = Est(max_features=mtry, random_state=None, **self._tree_params())
            Xs, ys = X[sample], y[sample]
            if len(Xs) < 2 * self.min_node:
                raise TooFewRows("bootstrap sample too small")
            if task == "cls":
                # keep the ensemble's class indexing even if a class is missing from the sample
                tree.classes_ = self.classes_
                tree.tree_ = tree._grow(Xs, ys, np.ones(n), len(self.classes_), rng)
                tree.n_features_in_ = X.shape[1]
            else:
                tree.fit(Xs, ys, rng=rng)
            self.estimators_.append(tree)
            self.samples_.append(sample)
        self.estimator_weights_ = np.ones(self.n_estimators)

    def _member_votes(self, X):
        X = check_array(X, dtype=float)
        counts = np.zeros((len(X), len(self.classes_)), dtype=int)
        for tree in self.estimators_:
            pred = np.argmax(tree.tree_.predict_value(X), axis=1)
            counts[np.arange(len(X)), pred] += 1
        return counts

    def vote_counts(self, X):
        check_is_fitted(self, "estimators_")
        return self._member_votes(X)

    def _oob(self, X, y_enc, task):
        n = len(X)
        if task == "cls":
            votes = np.zeros((n, len(self.classes_)), dtype=int)
        else:
            sums, hits = np.zeros(n), np.zeros(n, dtype=int)
        for tree, sample in zip(self.estimators_, self.samples_):
            out = np.ones(n, dtype=bool)
            out[sample] = False
            if not out.any():
                continue
            rows = np.flatnonzero(out)
            vals = tree.tree_.predict_value(X[rows])
            if task == "cls":
                votes[rows, np.argmax(vals, axis=1)] += 1
            else:
                sums[rows] += vals[:, 0]
                hits[rows] += 1
        if task == "cls":
            seen = votes.sum(axis=1) > 0
            if not seen.any():
                return math.nan
            return float(np.mean(np.argmax(votes[seen], axis=1) != y_enc[seen]))
        seen = hits > 0
        if not seen.any():
            return math.nan
        return float(np.mean((sums[seen] / hits[seen] - y_enc[seen]) ** 2))


class BaggingClassifier(ClassifierMixin, _BaggedTrees):
    """Bootstrap-aggregated CART classifiers combined by simple majority (ties to the lowest class)."""

    kind = "bag"

    def __init__(self, n_estimators=25, bootstrap=True, min_node=5, max_depth=30,
                 min_impurity_decrease=1e-7, random_state=0):
        self.n_estimators = n_estimators
        self.bootstrap = bootstrap
        self.min_node = min_node
        self.max_depth = max_depth
        self.min_impurity_decrease = min_impurity_decrease
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        self._fit_members(X, y_enc, "cls")
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        counts = self.vote_counts(X)
        return counts / counts.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.vote_counts(X), axis=1)]


class BaggingRegressor(RegressorMixin, _BaggedTrees):
    """Bootstrap-aggregated CART regressors averaged."""

    kind = "bag"

    def __init__(self, n_estimators=100, bootstrap=True, min_node=5, max_depth=30,
                 min_impurity_decrease=1e-7, random_state=0):
        self.n_estimators = n_estimators
        self.bootstrap = bootstrap
        self.min_node = min_node
        self.max_depth = max_depth
        self.min_impurity_decrease = min_impurity_decrease
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        self._fit_members(X, y, "reg")
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "estimators_")
        X = check_array(X, dtype=float)
        return np.mean([t.tree_.predict_value(X)[:, 0] for t in self.estimators_], axis=0)


class RandomForestClassifier(BaggingClassifier):
    """Random forest: bootstrap samples plus ``max_features`` random candidates per node.

    ``oob_error_`` is the misclassification rate of out-of-bag majority votes.
    """

    kind = "rf"

    def __init__(self, n_estimators=500, max_features=3, bootstrap=True, min_node=1, max_depth=10_000,
                 min_impurity_decrease=0.0, random_state=0):
        super().__init__(n_estimators=n_estimators, bootstrap=bootstrap, min_node=min_node,
                         max_depth=max_depth, min_impurity_decrease=min_impurity_decrease,
                         random_state=random_state)
        self.max_features = max_features

    def fit(self, X, y):
        super().fit(X, y)
        X, y = check_X_y(X, y, dtype=float)
        self.oob_error_ = self._oob(X, np.searchsorted(self.classes_, y), "cls")
        return self


class RandomForestRegressor(BaggingRegressor):
    """Random-forest regression; ``oob_error_`` is the out-of-bag mean squared error."""

    kind = "rf"

    def __init__(self, n_estimators=500, max_features=3, bootstrap=True, min_node=5, max_depth=10_000,
                 min_impurity_decrease=0.0, random_state=0):
        super().__init__(n_estimators=n_estimators, bootstrap=bootstrap, min_node=min_node,
                         max_depth=max_depth, min_impurity_decrease=min_impurity_decrease,
                         random_state=random_state)
        self.max_features = max_features

    def fit(self, X, y):
        super().fit(X, y)
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        self.oob_error_ = self._oob(X, y, "reg")
        return self


class AdaBoostM1Classifier(ClassifierMixin, _EnsembleBase):
    """AdaBoost.M1 with weighted-Gini CART members for binary labels.

    Each round fits a tree to the current sample weights, takes its weighted
    error ``eps`` and member weight ``0.5 * log((1 - eps) / eps)``, then
    reweights the rows and renormalizes. Boosting stops early once a member
    reaches ``eps >= 0.5`` or ``eps == 0``.
    """

    kind = "adaboost"

    def __init__(self, n_estimators=100, max_depth=3, min_node=5, min_impurity_decrease=1e-7, random_state=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_node = min_node
        self.min_impurity_decrease = min_impurity_decrease
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        if len(self.classes_) != 2:
            raise SingleClass("AdaBoost.M1 here needs exactly two classes")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        n = len(y)
        sign = 2 * y_enc - 1
        w = np.full(n, 1.0 / n)
        self.estimators_, weights, self.errors_, self.sample_weight_sums_ = [], [], [], []
        for t in range(self.n_estimators):
            tree = CARTClassifier(**self._tree_params())
            tree.fit(X, y_enc, sample_weight=w, rng=member_rng(self.random_state, t))
            h = 2 * tree.predict(X) - 1
            miss = h != sign
            eps = float(w[miss].sum())
            self.errors_.append(eps)
            if eps >= 0.5:
                if not self.estimators_:
                    # a first member no better than chance still seeds the ensemble
                    self.estimators_.append(tree)
                    weights.append(1e-10)
                break
            alpha = 0.5 * math.log((1 - eps) / max(eps, 1e-10))
            self.estimators_.append(tree)
            weights.append(alpha)
            if eps == 0:
                break
            w = w * np.exp(-alpha * sign * h)
            w /= w.sum()
            self.sample_weight_sums_.append(float(w.sum()))
        self.estimator_weights_ = np.array(weights)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "estimators_")
        X = check_array(X, dtype=float)
        score = np.zeros(len(X))
        for alpha, tree in zip(self.estimator_weights_, self.estimators_):
            score += alpha * (2 * tree.predict(X) - 1)
        return score

    def predict_proba(self, X):
        p1 = 0.5 * (1 + self.decision_function(X) / self.estimator_weights_.sum())
        return np.column_stack([1 - p1, p1])

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]


class GradientBoostingRegressor(RegressorMixin, _EnsembleBase):
    """Squared-error gradient boosting: start at the mean, add shrunken CART fits to residuals."""

    kind = "gradboost"

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=4, min_node=5,
                 min_impurity_decrease=1e-7, random_state=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_node = min_node
        self.min_impurity_decrease = min_impurity_decrease
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if len(y) < 2 * self.min_node:
            raise TooFewRows(f"need at least {2 * self.min_node} rows, got {len(y)}")
        self.init_ = float(y.mean())
        F = np.full(len(y), self.init_)
        self.estimators_, self.train_rss_ = [], []
        for t in range(self.n_estimators):
            tree = CARTRegressor(**self._tree_params())
            tree.fit(X, y - F, rng=member_rng(self.random_state, t))
            F = F + self.learning_rate * tree.predict(X)
            self.estimators_.append(tree)
            self.train_rss_.append(float(np.sum((y - F) ** 2)))
        self.estimator_weights_ = np.full(len(self.estimators_), self.learning_rate)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "estimators_")
        X = check_array(X, dtype=float)
        out = np.full(len(X), self.init_)
        for tree in self.estimators_:
            out += self.learning_rate * tree.tree_.predict_value(X)[:, 0]
        return out
