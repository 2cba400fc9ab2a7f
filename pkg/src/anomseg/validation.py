"""Input validation helpers shared across the package.

Images are numpy arrays of shape (H, W, C) with C in {1, 3}, dtype float64,
values in [0, 1].  Validators return the canonical form so callers can accept
(H, W) grayscale arrays or float32 data transparently.
"""

import numpy as np

__all__ = [
    "check_image",
    "check_same_shape",
    "ensure_channels",
    "check_seed",
]


def check_image(img, name="image"):
    """Validate and canonicalize an image array.

    Accepts (H, W) or (H, W, C) arrays with C in {1, 3}; returns a float64
    (H, W, C) array.  Raises ValueError for wrong rank, channel count,
    non-finite values, or values outside [0, 1].
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"{name}: expected 2D or 3D array, got shape {arr.shape}")
    if arr.shape[2] not in (1, 3):
        raise ValueError(f"{name}: expected 1 or 3 channels, got {arr.shape[2]}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name}: empty image {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(
            f"{name}: values outside [0, 1] (min={arr.min():.4g}, max={arr.max():.4g})"
        )
    return arr


def check_same_shape(a, b, names=("first", "second")):
    if a.shape != b.shape:
        raise ValueError(
            f"shape mismatch: {names[0]} {a.shape} vs {names[1]} {b.shape}"
        )


def ensure_channels(img, channels):
    """Replicate or validate the channel count of a canonical image."""
    if channels not in (1, 3):
        raise ValueError(f"channels must be 1 or 3, got {channels}")
    if img.shape[2] == channels:
        return img
    if img.shape[2] == 1 and channels == 3:
        return np.repeat(img, 3, axis=2)
    raise ValueError(f"cannot convert {img.shape[2]}-channel image to {channels}")


def check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)
