"""Small fully connected network (sigmoid hidden units) trained by full-batch gradient descent."""
from __future__ import annotations

import logging
import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import NonConvergenceWarning, SingleClass
from .features import MinMaxScaler

log = logging.getLogger(__name__)

_P_EPS = 1e-15


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def init_params(sizes, rng, scale=0.5):
    """Uniform(-scale, scale) weights and biases for consecutive layer sizes."""
    return [(rng.uniform(-scale, scale, size=(a, b)), rng.uniform(-scale, scale, size=b))
            for a, b in zip(sizes, sizes[1:])]


def forward(params, X, output="linear"):
    """Activations of every layer, input first; the last entry has shape (n,)."""
    acts = [X]
    a = X
    for k, (W, b) in enumerate(params):
        z = a @ W + b
        last = k == len(params) - 1
        a = z if last and output == "linear" else sigmoid(z)
        acts.append(a)
    acts[-1] = acts[-1][:, 0]
    return acts


def loss_value(pred, y, loss="sse"):
    if loss == "sse":
        return 0.5 * float(np.sum((pred - y) ** 2))
    p = np.clip(pred, _P_EPS, 1 - _P_EPS)
    return -float(np.sum(y * np.log(p) + (1 - y) * np.log(1 - p)))


def mlp_gradient(params, X, y, output="linear", loss="sse"):
    """Loss and analytic backpropagation gradients ``[(dW, db), ...]`` summed over rows."""
    acts = forward(params, X, output)
    pred = acts[-1]
    if loss == "ce" and output == "sigmoid":
        delta = pred - y
    elif loss == "sse":
        delta = pred - y
        if output == "sigmoid":
            delta = delta * pred * (1 - pred)
    else:
        raise ValueError("cross-entropy needs a sigmoid output")
    delta = delta[:, None]
    grads = []
    for k in range(len(params) - 1, -1, -1):
        a_prev = acts[k]
        W = params[k][0]
        grads.append((a_prev.T @ delta, delta.sum(axis=0)))
        if k:
            delta = (delta @ W.T) * a_prev * (1 - a_prev)
    return loss_value(pred, y, loss), grads[::-1]


def _grad_norm(grads):
    return float(np.sqrt(sum(np.sum(dW**2) + np.sum(db**2) for dW, db in grads)))


def train_mlp(params, X, y, output="linear", loss="sse", lr=0.01, max_steps=10**6, tol=1e-7,
              record_steps=1000):
    """Full-batch gradient descent; a step that raises the loss is rejected and the rate halved.

    Accepted steps let the rate grow by 5% up to ``lr`` again. Returns
    ``(params, loss, steps, converged, history)`` where ``history`` holds the
    losses of the first ``record_steps`` accepted iterates.
    """
    params = [(W.copy(), b.copy()) for W, b in params]
    cur_loss, grads = mlp_gradient(params, X, y, output, loss)
    history = [cur_loss]
    rate = lr
    steps = 0
    converged = False
    while steps < max_steps:
        if _grad_norm(grads) < tol:
            converged = True
            break
        trial = [(W - rate * dW, b - rate * db) for (W, b), (dW, db) in zip(params, grads)]
        new_loss, new_grads = mlp_gradient(trial, X, y, output, loss)
        steps += 1
        if new_loss <= cur_loss:
            params, cur_loss, grads = trial, new_loss, new_grads
            rate = min(rate * 1.05, lr)
            if len(history) < record_steps:
                history.append(cur_loss)
        else:
            rate *= 0.5
            if rate < 1e-300:
                break
    return params, cur_loss, steps, converged, history


class _MLPBase(BaseEstimator):
    _output = "linear"
    _loss = "sse"

    def __init__(self, hidden_layers=(1,), lr=0.01, max_steps=10**6, tol=1e-7, init_scale=0.5,
                 scale_inputs=True, random_state=0):
        self.hidden_layers = hidden_layers
        self.lr = lr
        self.max_steps = max_steps
        self.tol = tol
        self.init_scale = init_scale
        self.scale_inputs = scale_inputs
        self.random_state = random_state

    def _fit(self, X, y):
        if any(h < 1 for h in self.hidden_layers) or self.max_steps < 1:
            raise ValueError("hidden layer sizes and max_steps must be >= 1")
        if self.scale_inputs:
            self.scaler_ = MinMaxScaler().fit(X)
            X = self.scaler_.transform(X)
        rng = np.random.default_rng(self.random_state)
        sizes = [X.shape[1], *self.hidden_layers, 1]
        params = init_params(sizes, rng, self.init_scale)
        params, final, steps, converged, history = train_mlp(
            params, X, y, self._output, self._loss, self.lr, self.max_steps, self.tol)
        self.weights_ = [W for W, _ in params]
        self.biases_ = [b for _, b in params]
        self.final_loss_, self.steps_used_, self.converged_ = final, steps, converged
        self.loss_history_ = np.array(history)
        self.n_features_in_ = X.shape[1]
        if not converged:
            warnings.warn(f"gradient norm above {self.tol:g} after {steps} steps", NonConvergenceWarning,
                          stacklevel=3)
        log.info("MLP %s: steps=%d loss=%.6g init=+-%s", sizes, steps, final, self.init_scale)
        return self

    @property
    def params_(self):
        return list(zip(self.weights_, self.biases_))

    def _output_values(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X, dtype=float)
        if self.scale_inputs:
            X = self.scaler_.transform(X)
        return forward(self.params_, X, self._output)[-1]


class MLPRegressor(RegressorMixin, _MLPBase):
    """Linear output unit, half sum-of-squares loss; the response is used unscaled."""

    _output = "linear"
    _loss = "sse"

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        return self._fit(X, y)

    def predict(self, X):
        return self._output_values(X)


class MLPClassifier(ClassifierMixin, _MLPBase):
    """Sigmoid output unit trained on cross-entropy; label 1 when the output exceeds 0.5."""

    _output = "sigmoid"
    _loss = "ce"

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        if len(self.classes_) != 2:
            raise SingleClass("classifier needs two classes")
        return self._fit(X, y_enc.astype(float))

    def predict_proba(self, X):
        p = np.clip(self._output_values(X), _P_EPS, 1 - _P_EPS)
        return np.column_stack([1 - p, p])

    def predict(self, X):
        return self.classes_[(self.predict_proba(X)[:, 1] > 0.5).astype(int)]
