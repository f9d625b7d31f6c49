"""Single-layer LSTM with a dense scalar head, trained on mean absolute error with Adam."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ShapeMismatch, TooFewRows
from ..features import MinMaxScaler
from .adam import AdamState, adam_step

log = logging.getLogger(__name__)

PARAM_NAMES = ("W", "U", "b", "Wd", "bd")
SLOT_COLUMNS = ("open", "high", "low", "close", "volume", "index")


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _glorot(rng, fan_in, fan_out, shape):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_lstm(n_inputs, units, rng):
    """Glorot input weights, orthogonal recurrent weights, zero biases except forget = 1."""
    H = units
    U = np.concatenate([np.linalg.qr(rng.normal(size=(H, H)))[0] for _ in range(4)], axis=1)
    b = np.zeros(4 * H)
    b[H:2 * H] = 1.0
    return {
        "W": _glorot(rng, n_inputs, 4 * H, (n_inputs, 4 * H)),
        "U": U,
        "b": b,
        "Wd": _glorot(rng, H, 1, (H, 1)),
        "bd": np.zeros(1),
    }


def lstm_forward(params, X):
    """Prediction for each sequence in ``X`` (n, steps, inputs) plus the cache for backprop.

    Gate blocks in the stacked weights are ordered input, forget, candidate, output.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[1] == 0:
        raise ShapeMismatch("expected a non-empty (n, steps, inputs) array")
    W, U, b = params["W"], params["U"], params["b"]
    if X.shape[2] != W.shape[0]:
        raise ShapeMismatch(f"input width {X.shape[2]} != {W.shape[0]}")
    n, T, _ = X.shape
    H = U.shape[0]
    h = np.zeros((n, H))
    c = np.zeros((n, H))
    steps = []
    for t in range(T):
        z = X[:, t] @ W + h @ U + b
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = _sigmoid(z[:, 3 * H:])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        steps.append((X[:, t], h_prev, c_prev, i, f, g, o, tc))
    pred = (h @ params["Wd"] + params["bd"])[:, 0]
    return pred, {"steps": steps, "h": h, "c": c}


def lstm_backward(params, cache, dpred):
    """Gradients of a loss with ``d loss / d pred = dpred`` through time."""
    U = params["U"]
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    d = dpred[:, None]
    grads["Wd"] = cache["h"].T @ d
    grads["bd"] = d.sum(axis=0)
    dh = d @ params["Wd"].T
    dc_next = np.zeros_like(dh)
    for x, h_prev, c_prev, i, f, g, o, tc in reversed(cache["steps"]):
        do = dh * tc
        dc = dc_next + dh * o * (1 - tc * tc)
        dz = np.concatenate([
            dc * g * i * (1 - i),
            dc * c_prev * f * (1 - f),
            dc * i * (1 - g * g),
            do * o * (1 - o),
        ], axis=1)
        dc_next = dc * f
        grads["W"] += x.T @ dz
        grads["U"] += h_prev.T @ dz
        grads["b"] += dz.sum(axis=0)
        dh = dz @ U.T
    return grads


def mae_loss_grad(params, X, y):
    pred, cache = lstm_forward(params, X)
    err = pred - y
    return float(np.mean(np.abs(err))), lstm_backward(params, cache, np.sign(err) / len(y))


class LSTMRegressor(RegressorMixin, BaseEstimator):
    """LSTM layer of ``units`` cells feeding one linear output, fit by mini-batch Adam on MAE.

    ``X`` is (n, steps, inputs); a 2-D array is read as one step per row.
    Per-epoch training and validation MAE are kept in ``train_loss_`` and
    ``val_loss_``.
    """

    def __init__(self, units=50, epochs=100, batch_size=72, lr=0.001, shuffle=False, random_state=0):
        self.units = units
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.shuffle = shuffle
        self.random_state = random_state

    @staticmethod
    def _as_seq(X):
        X = np.asarray(X, dtype=float)
        return X[:, None, :] if X.ndim == 2 else X

    def fit(self, X, y, validation=None):
        if self.units < 1 or self.batch_size < 1:
            raise ValueError("units and batch_size must be >= 1")
        X = self._as_seq(X)
        y = np.asarray(y, dtype=float)
        if len(X) != len(y):
            raise ShapeMismatch("X and y lengths differ")
        rng = np.random.default_rng(self.random_state)
        self.params_ = init_lstm(X.shape[2], self.units, rng)
        state = AdamState(lr=self.lr)
        names = list(PARAM_NAMES)
        plist = [self.params_[k] for k in names]
        self.train_loss_, self.val_loss_ = [], []
        n = len(y)
        for _ in range(self.epochs):
            order = rng.permutation(n) if self.shuffle else np.arange(n)
            total = 0.0
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                loss, grads = mae_loss_grad(self.params_, X[idx], y[idx])
                total += loss * len(idx)
                adam_step(state, plist, [grads[k] for k in names])
            self.train_loss_.append(total / n)
            if validation is not None:
                Xv, yv = validation
                self.val_loss_.append(float(np.mean(np.abs(self.predict(Xv) - yv))))
        self.n_features_in_ = X.shape[2]
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        return lstm_forward(self.params_, self._as_seq(X))[0]


def slot_values(slots) -> np.ndarray:
    """Open, high, low, close, volume and index level of each slot bar, one row per slot."""
    return np.array([[s.first_open, s.high_max, s.low_min, s.last_close, s.vol_mean, s.index_mean]
                     for s in slots], dtype=float)


@dataclass
class LstmReport:
    train_loss: list
    val_loss: list
    rmse: float
    pearson: float
    predictions: np.ndarray
    actuals: np.ndarray


def _supervised(scaled):
    """One-step framing: the six scaled values at t predict the scaled open at t + 1."""
    return scaled[:-1], scaled[1:, 0]


def lstm_experiment(values, split=500, test_values=None, target=None, **params) -> LstmReport:
    """Fit on the first ``split`` rows (or all of ``values`` when ``test_values`` is given) and validate on the rest.

    Scaling uses training rows only. RMSE and Pearson correlation are computed
    on de-scaled opens. ``target`` optionally replaces the next-open targets
    (used for control experiments); it must align with the supervised rows.
    """
    values = np.asarray(values, dtype=float)
    if test_values is None:
        if len(values) < split + 10:
            raise TooFewRows(f"need at least {split + 10} rows, got {len(values)}")
        train_raw, test_raw = values[:split], values[split:]
    else:
        train_raw, test_raw = values, np.asarray(test_values, dtype=float)
    scaler = MinMaxScaler().fit(train_raw)
    X_tr, y_tr = _supervised(scaler.transform(train_raw))
    X_te, y_te = _supervised(scaler.transform(test_raw))
    if target is not None:
        y_tr, y_te = target
    model = LSTMRegressor(**params).fit(X_tr, y_tr, validation=(X_te, y_te))
    lo, hi = scaler.params_.mins[0], scaler.params_.maxs[0]
    pred = model.predict(X_te) * (hi - lo) + lo
    actual = y_te * (hi - lo) + lo
    rmse = float(np.sqrt(np.mean((pred - actual) ** 2)))
    pearson = float(np.corrcoef(pred, actual)[0, 1]) if np.std(pred) > 0 and np.std(actual) > 0 else math.nan
    log.info("LSTM: train %d rows, validate %d rows, RMSE %.4f", len(y_tr), len(y_te), rmse)
    return LstmReport(model.train_loss_, model.val_loss_, rmse, pearson, pred, actual)
