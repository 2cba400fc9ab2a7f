"""Image I/O, patch decomposition/reassembly, resizing, and noise perturbation.

All in-memory images are float64 (H, W, C) arrays with values in [0, 1] and
C in {1, 3}.  Files are 8-bit PNG or binary PPM/PGM.
"""

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from .validation import check_image, ensure_channels

__all__ = [
    "load_image",
    "save_image",
    "bilinear_resize",
    "PatchGrid",
    "decompose_patches",
    "reassemble_patches",
    "perturb_gaussian",
    "draw_boxes",
]

_SUPPORTED_EXT = {".png", ".ppm", ".pgm"}


def load_image(path, channels=None):
    """Load an 8-bit PNG/PPM/PGM file as a float64 (H, W, C) array in [0, 1].

    Grayscale sources yield one channel; pass channels=3 to replicate.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such image file: {path}")
    try:
        with PILImage.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB" if im.mode in ("RGBA", "P", "CMYK") else "L")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise ValueError(f"cannot decode image file {path}: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"zero-dimension raster: {path}")
    img = check_image(arr, name=path)
    if channels is not None:
        img = ensure_channels(img, channels)
    return img


def save_image(path, img):
    """Write an image as 8-bit PNG, PPM (color), or PGM (grayscale)."""
    ext = os.path.splitext(path)[1].lower()
    if ext not in _SUPPORTED_EXT:
        raise ValueError(f"unsupported raster extension {ext!r} (use .png/.ppm/.pgm)")
    img = check_image(img)
    data = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    if img.shape[2] == 1:
        pil = PILImage.fromarray(data[:, :, 0], mode="L")
    else:
        pil = PILImage.fromarray(data, mode="RGB")
    if ext == ".pgm" and img.shape[2] == 3:
        pil = pil.convert("L")
    if ext == ".ppm" and img.shape[2] == 1:
        pil = pil.convert("RGB")
    pil.save(path)


def bilinear_resize(img, out_shape):
    """Bilinear resize to (out_h, out_w) with corner-aligned sampling."""
    img = check_image(img)
    out_h, out_w = int(out_shape[0]), int(out_shape[1])
    if out_h < 1 or out_w < 1:
        raise ValueError(f"invalid target shape {out_shape}")
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.copy()
    rows = np.linspace(0.0, h - 1.0, out_h) if out_h > 1 else np.array([(h - 1) / 2.0])
    cols = np.linspace(0.0, w - 1.0, out_w) if out_w > 1 else np.array([(w - 1) / 2.0])
    r0 = np.floor(rows).astype(int)
    c0 = np.floor(cols).astype(int)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (rows - r0)[:, None, None]
    fc = (cols - c0)[None, :, None]
    top = img[r0][:, c0] * (1 - fc) + img[r0][:, c1] * fc
    bot = img[r1][:, c0] * (1 - fc) + img[r1][:, c1] * fc
    return top * (1 - fr) + bot * fr


@dataclass
class PatchGrid:
    """Non-overlapping square tiling of a reflect-padded image.

    patches are value copies in row-major tile order; reassembly crops the
    padding so decompose -> reassemble reproduces the input exactly.
    """

    patch_size: int
    rows: int
    cols: int
    original_dims: tuple
    padding: tuple  # (pad_bottom, pad_right)
    patches: list

    def __post_init__(self):
        if self.rows * self.cols != len(self.patches):
            raise ValueError(
                f"grid {self.rows}x{self.cols} inconsistent with "
                f"{len(self.patches)} patches"
            )
        m, n = self.original_dims
        if (m + self.padding[0]) % self.patch_size or (n + self.padding[1]) % self.patch_size:
            raise ValueError("padded dims are not multiples of the patch size")


def decompose_patches(img, patch_size):
    """Tile an image into non-overlapping patch_size x patch_size patches.

    The image is reflect-padded on the bottom/right edges up to the next
    multiple of patch_size, then split row-major.
    """
    img = check_image(img)
    p = int(patch_size)
    if p < 4:
        raise ValueError(f"patch_size must be >= 4, got {p}")
    m, n = img.shape[:2]
    if p > 4 * max(m, n):
        raise ValueError(f"patch_size {p} exceeds 4x the largest image dim ({m}x{n})")
    rows = -(-m // p)
    cols = -(-n // p)
    pad_b = rows * p - m
    pad_r = cols * p - n
    padded = np.pad(img, ((0, pad_b), (0, pad_r), (0, 0)), mode="reflect") \
        if (pad_b or pad_r) else img
    patches = []
    for i in range(rows):
        for j in range(cols):
            patches.append(padded[i * p:(i + 1) * p, j * p:(j + 1) * p].copy())
    return PatchGrid(p, rows, cols, (m, n), (pad_b, pad_r), patches)


def reassemble_patches(grid):
    """Stitch a PatchGrid back into an image of its original dims."""
    p = grid.patch_size
    m, n = grid.original_dims
    c = grid.patches[0].shape[2]
    full = np.empty((grid.rows * p, grid.cols * p, c), dtype=np.float64)
    for idx, patch in enumerate(grid.patches):
        if patch.shape != (p, p, c):
            raise ValueError(f"patch {idx} has shape {patch.shape}, expected {(p, p, c)}")
        i, j = divmod(idx, grid.cols)
        full[i * p:(i + 1) * p, j * p:(j + 1) * p] = patch
    return full[:m, :n].copy()


def draw_boxes(img, boxes, labels=None, color=(255, 32, 32)):
    """Overlay bounding boxes (and optional text labels) on an image.

    boxes are (x0, y0, x1, y1) inclusive coords; labels, when given, is a
    matching list of strings (None entries are skipped).  Returns a new
    (H, W, 3) image in [0, 1].
    """
    from PIL import ImageDraw

    img = ensure_channels(check_image(img), 3)
    data = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    pil = PILImage.fromarray(data, mode="RGB")
    drawer = ImageDraw.Draw(pil)
    for i, box in enumerate(boxes):
        x0, y0, x1, y1 = box
        drawer.rectangle([x0, y0, x1, y1], outline=color, width=1)
        if labels is not None and labels[i]:
            drawer.text((x0 + 1, max(0, y0 - 10)), str(labels[i]), fill=color)
    return np.asarray(pil, dtype=np.float64) / 255.0


def perturb_gaussian(img, std, seed):
    """Add zero-mean Gaussian noise (stddev std) and clamp to [0, 1].

    Deterministic for a given seed; std=0 returns the input unchanged.
    """
    if std < 0:
        raise ValueError(f"noise std must be >= 0, got {std}")
    img = check_image(img)
    if std == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    noisy = img + rng.normal(0.0, std, size=img.shape)
    return np.clip(noisy, 0.0, 1.0)
