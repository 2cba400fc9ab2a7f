"""Minimal layer set with exact reverse-mode gradients.

Tensors are float64 numpy arrays, NCHW for spatial layers and (batch,
features) for dense layers.  Each layer caches what its backward pass needs
during forward; backward consumes the most recent forward's cache.

Layer semantics:
  * Conv3x3: stride 1, zero padding 1 (shape preserving)
  * MaxPool2: 2x2 window, stride 2, gradient routed to the first argmax in
    row-major window order
  * Upsample2: nearest-neighbor x2, backward sums over each replicated block
  * Dense / ReLU / Flatten / Softmax: the usual definitions
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "Parameter",
    "Conv3x3",
    "ReLU",
    "MaxPool2",
    "Upsample2",
    "Flatten",
    "Dense",
    "Softmax",
]


class Parameter:
    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def size(self):
        return self.value.size


def he_uniform(rng, shape, fan_in):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    kind = "?"
    frozen = False

    def parameters(self):
        return []

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError


class Conv3x3(Layer):
    kind = "conv3x3"

    def __init__(self, in_channels, out_channels, rng=None):
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        fan_in = 9 * self.in_channels
        if rng is None:
            weight = np.zeros((self.out_channels, self.in_channels, 3, 3))
        else:
            weight = he_uniform(rng, (self.out_channels, self.in_channels, 3, 3), fan_in)
        self.weight = Parameter(weight)
        self.bias = Parameter(np.zeros(self.out_channels))
        self._cols = None
        self._in_shape = None

    def parameters(self):
        return [self.weight, self.bias]

    def forward(self, x):
        b, c, h, w = x.shape
        if c != self.in_channels:
            raise ValueError(f"conv expects {self.in_channels} channels, got {c}")
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        win = sliding_window_view(xp, (3, 3), axis=(2, 3))  # (B,C,H,W,3,3)
        cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5))
        cols = cols.reshape(b * h * w, c * 9)
        wmat = self.weight.value.reshape(self.out_channels, c * 9)
        out = cols @ wmat.T + self.bias.value
        self._cols = cols
        self._in_shape = x.shape
        return out.reshape(b, h, w, self.out_channels).transpose(0, 3, 1, 2)

    def backward(self, grad):
        if self._cols is None:
            raise RuntimeError("backward called before forward")
        b, c, h, w = self._in_shape
        gmat = np.ascontiguousarray(grad.transpose(0, 2, 3, 1)).reshape(
            b * h * w, self.out_channels
        )
        if not self.frozen:
            self.weight.grad += (gmat.T @ self._cols).reshape(self.weight.value.shape)
            self.bias.grad += gmat.sum(axis=0)
        wmat = self.weight.value.reshape(self.out_channels, c * 9)
        dcols = (gmat @ wmat).reshape(b, h, w, c, 3, 3).transpose(0, 3, 4, 5, 1, 2)
        dxp = np.zeros((b, c, h + 2, w + 2))
        for ki in range(3):
            for kj in range(3):
                dxp[:, :, ki:ki + h, kj:kj + w] += dcols[:, :, ki, kj]
        return dxp[:, :, 1:h + 1, 1:w + 1]


class ReLU(Layer):
    kind = "relu"

    def __init__(self):
        self._mask = None

    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad):
        if self._mask is None:
            raise RuntimeError("backward called before forward")
        return grad * self._mask


class MaxPool2(Layer):
    kind = "maxpool2"

    def __init__(self):
        self._argmax = None
        self._in_shape = None

    def forward(self, x):
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ValueError(f"maxpool needs even spatial dims, got {h}x{w}")
        win = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
        flat = win.reshape(b, c, h // 2, w // 2, 4)
        idx = flat.argmax(axis=-1)  # first occurrence wins ties
        self._argmax = idx
        self._in_shape = x.shape
        return np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        if self._argmax is None:
            raise RuntimeError("backward called before forward")
        b, c, h, w = self._in_shape
        flat = np.zeros((b, c, h // 2, w // 2, 4))
        np.put_along_axis(flat, self._argmax[..., None], grad[..., None], axis=-1)
        win = flat.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        return win.reshape(b, c, h, w)


class Upsample2(Layer):
    kind = "upsample2"

    def forward(self, x):
        return x.repeat(2, axis=2).repeat(2, axis=3)

    def backward(self, grad):
        b, c, h, w = grad.shape
        return grad.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


class Flatten(Layer):
    kind = "flatten"

    def __init__(self):
        self._in_shape = None

    def forward(self, x):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        if self._in_shape is None:
            raise RuntimeError("backward called before forward")
        return grad.reshape(self._in_shape)


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_features, out_features, rng=None):
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        if rng is None:
            weight = np.zeros((self.out_features, self.in_features))
        else:
            weight = he_uniform(rng, (self.out_features, self.in_features), self.in_features)
        self.weight = Parameter(weight)
        self.bias = Parameter(np.zeros(self.out_features))
        self._x = None

    def parameters(self):
        return [self.weight, self.bias]

    def forward(self, x):
        if x.shape[1] != self.in_features:
            raise ValueError(f"dense expects {self.in_features} features, got {x.shape[1]}")
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, grad):
        if self._x is None:
            raise RuntimeError("backward called before forward")
        if not self.frozen:
            self.weight.grad += grad.T @ self._x
            self.bias.grad += grad.sum(axis=0)
        return grad @ self.weight.value


class Softmax(Layer):
    kind = "softmax"

    def __init__(self):
        self._probs = None

    def forward(self, x):
        shifted = x - x.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        self._probs = e / e.sum(axis=1, keepdims=True)
        return self._probs

    def backward(self, grad):
        if self._probs is None:
            raise RuntimeError("backward called before forward")
        p = self._probs
        return p * (grad - (grad * p).sum(axis=1, keepdims=True))
