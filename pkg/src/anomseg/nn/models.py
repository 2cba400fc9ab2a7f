"""Model builders: patch reconstructor, frozen feature extractor, classifier."""

import numpy as np

from .layers import Conv3x3, Dense, Flatten, MaxPool2, ReLU, Softmax, Upsample2
from .network import Network, load_weights

__all__ = [
    "build_reconstructor",
    "build_feature_extractor",
    "build_classifier",
    "FeatureExtractor",
    "IdentityExtractor",
]

# encoder-decoder channel plan: 7 convs, 3 pools, 3 upsamples, ~5k parameters
_RECON_PLAN = [9, 10, 10, 10, 10, 10]


def build_reconstructor(channels=3, seed=0):
    """Shape-preserving encoder-decoder for square patches (dims % 8 == 0).

    conv+ReLU blocks around three max-pooling and three nearest-neighbor
    upsampling stages; the final conv is linear.  He-uniform init from seed.
    """
    if channels not in (1, 3):
        raise ValueError(f"channels must be 1 or 3, got {channels}")
    rng = np.random.default_rng(seed)
    c = _RECON_PLAN
    layers = [
        Conv3x3(channels, c[0], rng), ReLU(), MaxPool2(),
        Conv3x3(c[0], c[1], rng), ReLU(), MaxPool2(),
        Conv3x3(c[1], c[2], rng), ReLU(), MaxPool2(),
        Conv3x3(c[2], c[3], rng), ReLU(), Upsample2(),
        Conv3x3(c[3], c[4], rng), ReLU(), Upsample2(),
        Conv3x3(c[4], c[5], rng), ReLU(), Upsample2(),
        Conv3x3(c[5], channels, rng),
    ]
    return Network(layers)


class FeatureExtractor:
    """Frozen conv stack used only for the feature-space loss.

    Weights never change after construction; backward still propagates
    gradients to the input tensor.
    """

    def __init__(self, network):
        self.network = network.freeze()

    def forward(self, x):
        return self.network.forward(x)

    def __call__(self, x):
        return self.forward(x)

    def backward(self, grad):
        return self.network.backward(grad)

    def snapshot(self):
        """Copies of all weights, for immutability checks."""
        return [p.value.copy() for p in self.network.parameters()]


class IdentityExtractor:
    """Pass-through extractor; features are the inputs themselves."""

    def forward(self, x):
        return np.asarray(x, dtype=np.float64)

    def __call__(self, x):
        return self.forward(x)

    def backward(self, grad):
        return grad


def build_feature_extractor(seed=0, weights_file=None, channels=3):
    """Deterministic frozen extractor: 3 conv(->16)+ReLU+pool stages.

    With weights_file set, loads an arbitrary compatible frozen stack from
    the binary weights format instead of the seeded built-in.
    """
    if weights_file is not None:
        return FeatureExtractor(load_weights(weights_file))
    rng = np.random.default_rng(seed)
    layers = [
        Conv3x3(channels, 16, rng), ReLU(), MaxPool2(),
        Conv3x3(16, 16, rng), ReLU(), MaxPool2(),
        Conv3x3(16, 16, rng), ReLU(), MaxPool2(),
    ]
    return FeatureExtractor(Network(layers))


def build_classifier(n_classes, input_size=64, channels=3, seed=0):
    """Patch classifier: 3 conv+ReLU+pool stages, one dense layer, softmax."""
    if n_classes < 2:
        raise ValueError(f"need at least 2 classes, got {n_classes}")
    if input_size % 8 or input_size < 8:
        raise ValueError(f"input_size must be a positive multiple of 8, got {input_size}")
    rng = np.random.default_rng(seed)
    spatial = input_size // 8
    layers = [
        Conv3x3(channels, 16, rng), ReLU(), MaxPool2(),
        Conv3x3(16, 32, rng), ReLU(), MaxPool2(),
        Conv3x3(32, 64, rng), ReLU(), MaxPool2(),
        Flatten(),
        Dense(64 * spatial * spatial, n_classes, rng),
        Softmax(),
    ]
    return Network(layers)
