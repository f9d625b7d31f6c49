"""1-D convolutional forecasters mapping past daily values to the next five opens."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ShapeMismatch
from .adam import AdamState, adam_step

WEEK = 5


def _glorot(rng, fan_in, fan_out, shape):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Conv1D:
    """Valid (unpadded) convolution over time; input (batch, steps, channels)."""

    def __init__(self, in_channels, filters, kernel, rng, relu=True):
        self.kernel = kernel
        self.relu = relu
        self.W = _glorot(rng, kernel * in_channels, kernel * filters, (kernel, in_channels, filters))
        self.b = np.zeros(filters)

    def out_shape(self, shape):
        steps, _ = shape
        if self.kernel > steps:
            raise ShapeMismatch(f"kernel {self.kernel} longer than sequence {steps}")
        return steps - self.kernel + 1, self.W.shape[2]

    def forward(self, x):
        self.x = x
        self.win = np.lib.stride_tricks.sliding_window_view(x, self.kernel, axis=1)  # (B, L', C, k)
        z = np.einsum("btck,kcf->btf", self.win, self.W) + self.b
        self.mask = z > 0 if self.relu else None
        return z * self.mask if self.relu else z

    def backward(self, dout):
        if self.relu:
            dout = dout * self.mask
        self.dW = np.einsum("btck,btf->kcf", self.win, dout)
        self.db = dout.sum(axis=(0, 1))
        dx = np.zeros_like(self.x)
        steps = dout.shape[1]
        for j in range(self.kernel):
            dx[:, j:j + steps, :] += dout @ self.W[j].T
        return dx

    @property
    def params(self):
        return [self.W, self.b]

    @property
    def grads(self):
        return [self.dW, self.db]


class MaxPool1D:
    """Non-overlapping max pooling; trailing steps that do not fill a window are dropped."""

    def __init__(self, size):
        self.size = size

    def out_shape(self, shape):
        steps, ch = shape
        if steps // self.size < 1:
            raise ShapeMismatch(f"pool {self.size} longer than sequence {steps}")
        return steps // self.size, ch

    def forward(self, x):
        B, L, C = x.shape
        Lo = L // self.size
        self.in_shape = x.shape
        blocks = x[:, :Lo * self.size].reshape(B, Lo, self.size, C)
        self.arg = blocks.argmax(axis=2)
        return blocks.max(axis=2)

    def backward(self, dout):
        B, L, C = self.in_shape
        Lo = dout.shape[1]
        dblocks = np.zeros((B, Lo, self.size, C))
        np.put_along_axis(dblocks, self.arg[:, :, None, :], dout[:, :, None, :], axis=2)
        dx = np.zeros(self.in_shape)
        dx[:, :Lo * self.size] = dblocks.reshape(B, Lo * self.size, C)
        return dx

    params = grads = property(lambda self: [])


class Flatten:
    def out_shape(self, shape):
        return (int(np.prod(shape)),)

    def forward(self, x):
        self.in_shape = x.shape
        return x.reshape(len(x), -1)

    def backward(self, dout):
        return dout.reshape(self.in_shape)

    params = grads = property(lambda self: [])


class Dense:
    def __init__(self, n_in, n_out, rng, relu=False):
        self.relu = relu
        self.W = _glorot(rng, n_in, n_out, (n_in, n_out))
        self.b = np.zeros(n_out)

    def out_shape(self, shape):
        if shape != (self.W.shape[0],):
            raise ShapeMismatch(f"dense expects width {self.W.shape[0]}, got {shape}")
        return (self.W.shape[1],)

    def forward(self, x):
        self.x = x
        z = x @ self.W + self.b
        self.mask = z > 0 if self.relu else None
        return z * self.mask if self.relu else z

    def backward(self, dout):
        if self.relu:
            dout = dout * self.mask
        self.dW = self.x.T @ dout
        self.db = dout.sum(axis=0)
        return dout @ self.W.T

    @property
    def params(self):
        return [self.W, self.b]

    @property
    def grads(self):
        return [self.dW, self.db]


class Sequential:
    def __init__(self, layers, input_shape):
        self.layers = layers
        shape = input_shape
        self.shapes = [shape]
        for layer in layers:
            shape = layer.out_shape(shape)
            self.shapes.append(shape)

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    @property
    def params(self):
        return [p for layer in self.layers for p in layer.params]

    @property
    def grads(self):
        return [g for layer in self.layers for g in layer.grads]


class MultiHead:
    """One sub-network per input variable; flattened head outputs are concatenated into a shared tail."""

    def __init__(self, heads, tail):
        self.heads = heads
        self.tail = tail
        self.widths = [h.shapes[-1][0] for h in heads]

    def forward(self, x):
        if x.shape[2] != len(self.heads):
            raise ShapeMismatch(f"{len(self.heads)} heads but {x.shape[2]} variables")
        feats = [h.forward(x[:, :, v:v + 1]) for v, h in enumerate(self.heads)]
        self.in_shape = x.shape
        return self.tail.forward(np.concatenate(feats, axis=1))

    def backward(self, dout):
        dcat = self.tail.backward(dout)
        dx = np.zeros(self.in_shape)
        start = 0
        for v, (h, w) in enumerate(zip(self.heads, self.widths)):
            dx[:, :, v:v + 1] = h.backward(dcat[:, start:start + w])
            start += w
        return dx

    @property
    def params(self):
        return [p for h in self.heads for p in h.params] + self.tail.params

    @property
    def grads(self):
        return [g for h in self.heads for g in h.grads] + self.tail.grads


@dataclass(frozen=True)
class CnnSpec:
    variant: str
    input_steps: int
    n_variables: int
    layers: tuple
    epochs: int
    batch_size: int


CNN_SPECS = {
    "M1": CnnSpec("M1", 5, 1, (("conv", 16, 3), ("pool", 2), ("flatten",), ("dense", 10), ("dense", WEEK)), 20, 4),
    "M2": CnnSpec("M2", 10, 1, (("conv", 16, 3), ("pool", 2), ("flatten",), ("dense", 10), ("dense", WEEK)), 20, 4),
    "M3": CnnSpec("M3", 10, 5, (("conv", 32, 3), ("conv", 32, 3), ("pool", 2), ("conv", 16, 3), ("pool", 1),
                                ("flatten",), ("dense", 100), ("dense", WEEK)), 70, 16),
    # per-variable head: conv(16, 3) -> pool(2) -> flatten; shared tail dense(100) -> dense(5)
    "M4": CnnSpec("M4", 10, 5, (("head", ("conv", 16, 3), ("pool", 2), ("flatten",)), ("dense", 100),
                                ("dense", WEEK)), 70, 16),
}


def _make_layers(descs, shape, rng, final_linear=True):
    layers = []
    for k, desc in enumerate(descs):
        kind = desc[0]
        last = k == len(descs) - 1
        if kind == "conv":
            layer = Conv1D(shape[1], desc[1], desc[2], rng)
        elif kind == "pool":
            layer = MaxPool1D(desc[1])
        elif kind == "flatten":
            layer = Flatten()
        else:
            layer = Dense(shape[0], desc[1], rng, relu=not (last and final_linear))
        shape = layer.out_shape(shape)
        layers.append(layer)
    return layers, shape


def build_cnn(variant, rng=None):
    """``(spec, network)`` for one of the variants M1-M4 with freshly initialised weights."""
    spec = CNN_SPECS[variant]
    rng = np.random.default_rng(0) if rng is None else rng
    if spec.layers[0][0] == "head":
        head_desc = spec.layers[0][1:]
        heads = []
        for _ in range(spec.n_variables):
            layers, _ = _make_layers(head_desc, (spec.input_steps, 1), rng, final_linear=False)
            heads.append(Sequential(layers, (spec.input_steps, 1)))
        width = sum(h.shapes[-1][0] for h in heads)
        tail_layers, _ = _make_layers(spec.layers[1:], (width,), rng)
        return spec, MultiHead(heads, Sequential(tail_layers, (width,)))
    layers, _ = _make_layers(spec.layers, (spec.input_steps, spec.n_variables), rng)
    return spec, Sequential(layers, (spec.input_steps, spec.n_variables))


def mse_loss_grad(net, X, Y):
    pred = net.forward(X)
    err = pred - Y
    loss = float(np.mean(err**2))
    net.backward(2 * err / err.size)
    return loss, pred


class CNNForecaster(RegressorMixin, BaseEstimator):
    """Trains one CNN variant with Adam on mean squared error over the five outputs."""

    def __init__(self, variant="M1", epochs=None, batch_size=None, lr=0.001, random_state=0):
        self.variant = variant
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.random_state = random_state

    def fit(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        rng = np.random.default_rng(self.random_state)
        self.spec_, self.net_ = build_cnn(self.variant, rng)
        if X.shape[1:] != (self.spec_.input_steps, self.spec_.n_variables) or Y.shape[1:] != (WEEK,):
            raise ShapeMismatch(f"{self.variant} expects inputs {(self.spec_.input_steps, self.spec_.n_variables)}")
        epochs = self.spec_.epochs if self.epochs is None else self.epochs
        batch = self.spec_.batch_size if self.batch_size is None else self.batch_size
        state = AdamState(lr=self.lr)
        params = self.net_.params
        self.loss_curve_ = []
        n = len(X)
        for _ in range(epochs):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                loss, _ = mse_loss_grad(self.net_, X[idx], Y[idx])
                total += loss * len(idx)
                adam_step(state, params, self.net_.grads)
            self.loss_curve_.append(total / n)
        return self

    def predict(self, X):
        check_is_fitted(self, "net_")
        return self.net_.forward(np.asarray(X, dtype=float))
