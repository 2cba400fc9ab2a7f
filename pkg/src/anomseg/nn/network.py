"""Sequential network container and the binary weights format.

Weights files ("ANW1"): little-endian, magic bytes b"ANW1", uint32 layer
count, then per layer a uint8 type tag, type-specific uint32 shape fields,
and float32 weight then bias data for parametric layers.
"""

import struct

import numpy as np

from .layers import Conv3x3, Dense, Flatten, MaxPool2, ReLU, Softmax, Upsample2

__all__ = ["Network", "save_weights", "load_weights"]

_TAGS = {
    "conv3x3": 1,
    "relu": 2,
    "maxpool2": 3,
    "upsample2": 4,
    "flatten": 5,
    "dense": 6,
    "softmax": 7,
}
_PLAIN_BUILDERS = {2: ReLU, 3: MaxPool2, 4: Upsample2, 5: Flatten, 7: Softmax}


class Network:
    """A sequential stack of layers with reverse-mode backprop."""

    def __init__(self, layers):
        self.layers = list(layers)
        self._forward_done = False

    def forward(self, x):
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            out = layer.forward(out)
        self._forward_done = True
        return out

    def __call__(self, x):
        return self.forward(x)

    def backward(self, grad):
        if not self._forward_done:
            raise RuntimeError("backward called before forward")
        out = np.asarray(grad, dtype=np.float64)
        for layer in reversed(self.layers):
            out = layer.backward(out)
        return out

    def parameters(self):
        params = []
        for layer in self.layers:
            params.extend(layer.parameters())
        return params

    def zero_grads(self):
        for p in self.parameters():
            p.grad[...] = 0.0

    def parameter_count(self):
        return sum(p.size for p in self.parameters())

    def layer_counts(self):
        counts = {}
        for layer in self.layers:
            counts[layer.kind] = counts.get(layer.kind, 0) + 1
        return counts

    def freeze(self):
        for layer in self.layers:
            layer.frozen = True
        return self


def save_weights(network, path):
    with open(path, "wb") as fh:
        fh.write(b"ANW1")
        fh.write(struct.pack("<I", len(network.layers)))
        for layer in network.layers:
            fh.write(struct.pack("<B", _TAGS[layer.kind]))
            if layer.kind == "conv3x3":
                fh.write(struct.pack("<II", layer.in_channels, layer.out_channels))
                fh.write(layer.weight.value.astype("<f4").tobytes())
                fh.write(layer.bias.value.astype("<f4").tobytes())
            elif layer.kind == "dense":
                fh.write(struct.pack("<II", layer.in_features, layer.out_features))
                fh.write(layer.weight.value.astype("<f4").tobytes())
                fh.write(layer.bias.value.astype("<f4").tobytes())


def _read_exact(fh, n, path):
    data = fh.read(n)
    if len(data) != n:
        raise ValueError(f"truncated weights file {path}")
    return data


def load_weights(path):
    with open(path, "rb") as fh:
        if fh.read(4) != b"ANW1":
            raise ValueError(f"not a weights file (bad magic): {path}")
        (n_layers,) = struct.unpack("<I", _read_exact(fh, 4, path))
        layers = []
        for _ in range(n_layers):
            (tag,) = struct.unpack("<B", _read_exact(fh, 1, path))
            if tag == 1:
                cin, cout = struct.unpack("<II", _read_exact(fh, 8, path))
                layer = Conv3x3(cin, cout)
                wn = cout * cin * 9
                layer.weight.value[...] = np.frombuffer(
                    _read_exact(fh, 4 * wn, path), dtype="<f4"
                ).astype(np.float64).reshape(cout, cin, 3, 3)
                layer.bias.value[...] = np.frombuffer(
                    _read_exact(fh, 4 * cout, path), dtype="<f4"
                ).astype(np.float64)
            elif tag == 6:
                fin, fout = struct.unpack("<II", _read_exact(fh, 8, path))
                layer = Dense(fin, fout)
                layer.weight.value[...] = np.frombuffer(
                    _read_exact(fh, 4 * fin * fout, path), dtype="<f4"
                ).astype(np.float64).reshape(fout, fin)
                layer.bias.value[...] = np.frombuffer(
                    _read_exact(fh, 4 * fout, path), dtype="<f4"
                ).astype(np.float64)
            elif tag in _PLAIN_BUILDERS:
                layer = _PLAIN_BUILDERS[tag]()
            else:
                raise ValueError(f"unknown layer tag {tag} in {path}")
            layers.append(layer)
        trailing = fh.read(1)
        if trailing:
            raise ValueError(f"trailing bytes in weights file {path}")
    return Network(layers)
