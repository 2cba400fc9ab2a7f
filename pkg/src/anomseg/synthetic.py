"""Synthetic dataset generation.

Stands in for real X-ray corpora at desk scale.  Each dataset has three
groups of equal size: normal training images, normal test images, and test
images with 1-3 injected anomalous shapes recorded as exact ground-truth
boxes.  Two background styles with different mean brightness and texture act
as distinct "scanner domains" for cross-style experiments.
"""

import os
from dataclasses import dataclass

import numpy as np

from .image import bilinear_resize, save_image
from .manifest import AnnotatedBox, DatasetManifest, ManifestEntry, save_manifest

__all__ = [
    "SyntheticSpec",
    "BACKGROUND_TEXTURE_STD",
    "synth_background",
    "inject_anomalies",
    "make_images",
    "generate_synthetic",
]

BACKGROUND_MODELS = ("textured_blobs", "gradient_noise")
SHAPE_KINDS = ("disk", "bar", "polygon")

# spatial std of the texture component, per background model (documented
# constants used by the detectability precondition below)
BACKGROUND_TEXTURE_STD = {"textured_blobs": 0.045, "gradient_noise": 0.07}
_BACKGROUND_MEAN = {"textured_blobs": 0.55, "gradient_noise": 0.40}

# per-channel scaling of the intensity shift, so anomalies are tinted rather
# than gray and separate cleanly in disparity color space
_CHANNEL_FACTORS = np.array([1.0, 0.9, 0.8])


@dataclass(frozen=True)
class SyntheticSpec:
    """Configuration for one synthetic dataset.

    count is the number of images per group (train / test-normal /
    test-abnormal).  anomaly_intensity_shift may be negative for dark
    anomalies; its magnitude must be at least 3x the background texture std
    so injected shapes are detectable by construction.
    """

    count: int
    image_dims: tuple = (128, 128)
    background_model: str = "textured_blobs"
    anomaly_shapes: tuple = SHAPE_KINDS
    anomaly_intensity_shift: float = 0.35
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        m, n = self.image_dims
        if m < 32 or n < 32:
            raise ValueError(f"image dims too small for shape injection: {self.image_dims}")
        if self.background_model not in BACKGROUND_MODELS:
            raise ValueError(f"unknown background model {self.background_model!r}")
        for kind in self.anomaly_shapes:
            if kind not in SHAPE_KINDS:
                raise ValueError(f"unknown anomaly shape {kind!r}")
        floor = 3.0 * BACKGROUND_TEXTURE_STD[self.background_model]
        if self.anomaly_shapes and abs(self.anomaly_intensity_shift) < floor:
            raise ValueError(
                f"anomaly_intensity_shift magnitude {abs(self.anomaly_intensity_shift)}"
                f" below 3x background texture std ({floor:.3f})"
            )


def _smooth_field(rng, dims, grid, std):
    """Random low-frequency field: coarse normal grid upsampled bilinearly."""
    coarse = rng.standard_normal((grid, grid, 1))
    field = bilinear_resize(np.clip(coarse * 0.1 + 0.5, 0, 1), dims) - 0.5
    scale = field.std()
    if scale < 1e-12:
        return np.zeros(dims + (1,))
    return field * (std / scale)


def synth_background(model, dims, rng):
    """One background image of the requested style, (H, W, 3) in [0, 1]."""
    m, n = int(dims[0]), int(dims[1])
    if model == "textured_blobs":
        base = _BACKGROUND_MEAN[model] + _smooth_field(rng, (m, n), 7, 0.042)
        grain = _smooth_field(rng, (m, n), max(8, m // 4), 0.012)
        img = base + grain
        tint_std = 0.008
    elif model == "gradient_noise":
        theta = rng.uniform(0, 2 * np.pi)
        yy, xx = np.mgrid[0:m, 0:n]
        ramp = (np.cos(theta) * xx / max(n - 1, 1) + np.sin(theta) * yy / max(m - 1, 1))
        ramp = (ramp - ramp.mean())[:, :, None]
        denom = ramp.std() if ramp.std() > 1e-12 else 1.0
        img = _BACKGROUND_MEAN[model] + ramp * (0.045 / denom)
        img = img + _smooth_field(rng, (m, n), max(16, m // 2), 0.05)
        img = img + rng.normal(0.0, 0.008, size=(m, n, 1))
        tint_std = 0.006
    else:
        raise ValueError(f"unknown background model {model!r}")
    tints = np.concatenate(
        [_smooth_field(rng, (m, n), 5, tint_std) for _ in range(3)], axis=2
    )
    return np.clip(img + tints, 0.0, 1.0)


def _render_disk(rng, dims):
    m, n = dims
    r = int(rng.integers(6, 13))
    cy = int(rng.integers(4 + r, m - 4 - r))
    cx = int(rng.integers(4 + r, n - 4 - r))
    yy, xx = np.mgrid[cy - r:cy + r + 1, cx - r:cx + r + 1]
    mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
    bbox = (cx - r, cy - r, cx + r, cy + r)
    return bbox, mask

def _render_bar(rng, dims):
    m, n = dims
    length = int(rng.integers(14, 29))
    width = int(rng.integers(4, 8))
    if rng.random() < 0.5:
        h, w = width, length
    else:
        h, w = length, width
    y0 = int(rng.integers(4, m - 4 - h))
    x0 = int(rng.integers(4, n - 4 - w))
    bbox = (x0, y0, x0 + w - 1, y0 + h - 1)
    return bbox, np.ones((h, w), dtype=bool)

def _render_polygon(rng, dims):
    # convex octagon: a rectangle with all four corners cut by < 1/3 per side,
    # which keeps the rendered extremes on the intended bbox and the fill
    # ratio above 3/4
    m, n = dims
    h = int(rng.integers(14, 27))
    w = int(rng.integers(14, 27))
    y0 = int(rng.integers(4, m - 4 - h))
    x0 = int(rng.integers(4, n - 4 - w))
    cut_y = rng.integers(1, max(2, h // 3), size=4)
    cut_x = rng.integers(1, max(2, w // 3), size=4)
    # vertices in CCW order starting from the top edge, local coordinates
    verts = np.array([
        (cut_x[0], 0), (w - 1 - cut_x[1], 0),
        (w - 1, cut_y[1]), (w - 1, h - 1 - cut_y[2]),
        (w - 1 - cut_x[2], h - 1), (cut_x[3], h - 1),
        (0, h - 1 - cut_y[3]), (0, cut_y[0]),
    ], dtype=np.float64)
    yy, xx = np.mgrid[0:h, 0:w]
    mask = np.ones((h, w), dtype=bool)
    for i in range(len(verts)):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % len(verts)]
        cross = (bx - ax) * (yy - ay) - (by - ay) * (xx - ax)
        mask &= cross >= 0
    bbox = (x0, y0, x0 + w - 1, y0 + h - 1)
    return bbox, mask

_RENDERERS = {"disk": _render_disk, "bar": _render_bar, "polygon": _render_polygon}


def _boxes_clear(bbox, taken, margin=4):
    x0, y0, x1, y1 = bbox
    for tx0, ty0, tx1, ty1 in taken:
        if x0 <= tx1 + margin and tx0 <= x1 + margin \
                and y0 <= ty1 + margin and ty0 <= y1 + margin:
            return False
    return True


def inject_anomalies(img, shapes, shift, rng, n_shapes=None):
    """Stamp 1-3 non-overlapping shapes into an image.

    Returns the modified image and the list of AnnotatedBox ground truths
    (labels index into the shapes tuple).
    """
    if not shapes:
        return img, []
    m, n = img.shape[:2]
    if n_shapes is None:
        n_shapes = int(rng.integers(1, 4))
    out = img.copy()
    taken, boxes = [], []
    for _ in range(n_shapes):
        for _attempt in range(50):
            kind_idx = int(rng.integers(0, len(shapes)))
            bbox, mask = _RENDERERS[shapes[kind_idx]](rng, (m, n))
            if _boxes_clear(bbox, taken):
                break
        else:
            continue
        x0, y0, x1, y1 = bbox
        region = out[y0:y1 + 1, x0:x1 + 1]
        region[mask] = np.clip(region[mask] + shift * _CHANNEL_FACTORS, 0.0, 1.0)
        taken.append(bbox)
        boxes.append(AnnotatedBox(bbox, label=kind_idx))
    return out, boxes


def make_images(spec):
    """Generate all images in memory.

    Returns a list of (name, role, image, boxes) tuples in a fixed order:
    train normals, test normals, then test abnormals.  Deterministic for a
    given spec.
    """
    rng = np.random.default_rng(spec.seed)
    out = []
    for i in range(spec.count):
        img = synth_background(spec.background_model, spec.image_dims, rng)
        out.append((f"train_{i:04d}.png", "train", img, []))
    for i in range(spec.count):
        img = synth_background(spec.background_model, spec.image_dims, rng)
        out.append((f"test_normal_{i:04d}.png", "test", img, []))
    for i in range(spec.count):
        img = synth_background(spec.background_model, spec.image_dims, rng)
        img, boxes = inject_anomalies(
            img, spec.anomaly_shapes, spec.anomaly_intensity_shift, rng
        )
        out.append((f"test_abnormal_{i:04d}.png", "test", img, boxes))
    return out


def generate_synthetic(spec, out_dir):
    """Write a synthetic dataset (images/ plus manifest.txt) to out_dir."""
    images_dir = os.path.join(out_dir, "images")
    try:
        os.makedirs(images_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    entries = []
    for name, role, img, boxes in make_images(spec):
        rel = os.path.join("images", name)
        save_image(os.path.join(out_dir, rel), img)
        entries.append(ManifestEntry(rel, role, tuple(boxes)))
    manifest = DatasetManifest(entries, list(spec.anomaly_shapes), root=out_dir)
    save_manifest(manifest, os.path.join(out_dir, "manifest.txt"))
    return manifest.validate(check_paths=True)
