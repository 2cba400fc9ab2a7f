"""Training loops for the patch reconstructor and the optional classifier,
plus patch-wise image reconstruction at inference time.

Everything is single-threaded and bitwise deterministic for a given seed:
the network init, the patch shuffle, and the noise stream are all derived
from one SeedSequence.
"""

import numpy as np

from ..image import decompose_patches, reassemble_patches
from ..validation import check_image, ensure_channels
from .losses import combined_loss_and_grad, cross_entropy, cross_entropy_grad
from .models import build_feature_extractor, build_reconstructor
from .network import Network
from .optim import AdamState, adam_step

__all__ = [
    "collect_patches",
    "train_reconstructor",
    "train_classifier",
    "reconstruct_image",
]


def _as_nchw(images_hwc):
    return np.stack(images_hwc).transpose(0, 3, 1, 2).astype(np.float64)


def _resolve_images(train_images, channels):
    """Accept a manifest or a sequence of arrays; yield (H, W, channels) images."""
    entries = getattr(train_images, "train_entries", None)
    if entries is not None:
        from ..image import load_image

        manifest = train_images
        return [
            load_image(manifest.resolve(e), channels=channels)
            for e in manifest.train_entries()
        ]
    return [ensure_channels(check_image(img), channels) for img in train_images]


def collect_patches(images, patch_size, channels=3, max_patches=None):
    """Decompose images into an (N, C, P, P) patch tensor, row-major order."""
    patches = []
    for img in _resolve_images(images, channels):
        grid = decompose_patches(img, patch_size)
        patches.extend(grid.patches)
        if max_patches is not None and len(patches) >= max_patches:
            patches = patches[:max_patches]
            break
    if not patches:
        raise ValueError("no training patches (empty training set)")
    return _as_nchw(patches)


def train_reconstructor(
    train_images,
    *,
    patch_size=64,
    noise_std=0.05,
    epochs=30,
    batch_size=16,
    learning_rate=0.001,
    alpha_feature=0.7,
    alpha_pixel=0.3,
    seed=0,
    max_patches=None,
    extractor=None,
    channels=3,
):
    """Train the patch reconstructor as a denoising autoencoder.

    Each batch input is the clean patch plus clamped Gaussian noise; the
    target is the clean patch; the loss blends feature and pixel terms.
    Returns (network, per-epoch mean loss history).
    """
    if patch_size % 8 or patch_size < 8:
        raise ValueError(f"patch_size must be a positive multiple of 8, got {patch_size}")
    if epochs < 0 or batch_size < 1:
        raise ValueError("epochs must be >= 0 and batch_size >= 1")
    patches = collect_patches(train_images, patch_size, channels, max_patches)
    n = len(patches)

    root = np.random.SeedSequence(seed)
    net_seed, extractor_seed, shuffle_seed, noise_seed = root.spawn(4)
    network = build_reconstructor(channels, seed=net_seed)
    if extractor is None:
        extractor = build_feature_extractor(seed=extractor_seed, channels=channels)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    noise_rng = np.random.default_rng(noise_seed)

    state = AdamState(learning_rate=learning_rate)
    params = network.parameters()
    history = []
    for epoch in range(epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            clean = patches[idx]
            if noise_std > 0:
                noisy = np.clip(
                    clean + noise_rng.normal(0.0, noise_std, size=clean.shape), 0.0, 1.0
                )
            else:
                noisy = clean
            recon = network.forward(noisy)
            loss, grad = combined_loss_and_grad(
                clean, recon, extractor, alpha_feature, alpha_pixel
            )
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss {loss} at epoch {epoch}, batch {start // batch_size}"
                )
            network.zero_grads()
            network.backward(grad)
            adam_step(state, [p.value for p in params], [p.grad for p in params])
            total += loss * len(idx)
        history.append(total / n)
    return network, history


def reconstruct_image(network, img, patch_size, batch_chunk=64):
    """Patch-wise reconstruction of a full image, clamped to [0, 1]."""
    img = check_image(img)
    grid = decompose_patches(img, patch_size)
    tensor = _as_nchw(grid.patches)
    outputs = []
    for start in range(0, len(tensor), batch_chunk):
        out = network.forward(tensor[start:start + batch_chunk])
        outputs.append(np.clip(out, 0.0, 1.0))
    stacked = np.concatenate(outputs).transpose(0, 2, 3, 1)
    grid.patches = list(stacked)
    return reassemble_patches(grid)


def train_classifier(
    patches,
    labels,
    *,
    epochs=20,
    batch_size=32,
    learning_rate=0.0001,
    seed=0,
    n_classes=None,
):
    """Train the optional patch classifier with cross-entropy.

    patches: (N, H, W, C) array or list of (H, W, C) images, H == W and a
    multiple of 8.  Returns (network, per-epoch training accuracy history).
    """
    from .models import build_classifier

    tensor = _as_nchw([check_image(p) for p in patches])
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(tensor):
        raise ValueError("patches and labels length mismatch")
    present = np.unique(labels)
    if len(present) < 2:
        raise ValueError("need at least 2 classes in the training labels")
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError("labels out of range")
    size = tensor.shape[2]
    if tensor.shape[3] != size:
        raise ValueError("classifier patches must be square")

    root = np.random.SeedSequence(seed)
    net_seed, shuffle_seed = root.spawn(2)
    network = build_classifier(n_classes, input_size=size,
                               channels=tensor.shape[1], seed=net_seed)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    onehot = np.eye(n_classes)[labels]

    state = AdamState(learning_rate=learning_rate)
    params = network.parameters()
    history = []
    n = len(tensor)
    for epoch in range(epochs):
        order = shuffle_rng.permutation(n)
        correct = 0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            probs = network.forward(tensor[idx])
            loss = cross_entropy(probs, onehot[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}")
            correct += int((probs.argmax(axis=1) == labels[idx]).sum())
            network.zero_grads()
            network.backward(cross_entropy_grad(probs, onehot[idx]))
            adam_step(state, [p.value for p in params], [p.grad for p in params])
        history.append(correct / n)
    return network, history


def classify_patches(network, patches):
    """Predicted labels and probabilities for a batch of (H, W, C) patches."""
    tensor = _as_nchw([check_image(p) for p in patches])
    probs = network.forward(tensor)
    return probs.argmax(axis=1), probs
