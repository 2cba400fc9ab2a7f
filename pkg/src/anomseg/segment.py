"""Anomaly instance extraction from reconstruction disparity maps.

Stages: signed disparity (stylized minus reconstructed), K-means clustering
of the per-pixel disparity colors, selection of the non-background clusters
(the cluster whose centroid is nearest the origin is background, since
disparity is ~0 wherever reconstruction succeeds), morphological cleanup,
8-connected component labeling, and bounding-box fitting.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .spectral import stylize_fda, stylize_gaussian
from .validation import check_same_shape

__all__ = [
    "DisparityMap",
    "KMeansResult",
    "InstanceMask",
    "Detection",
    "SegmenterConfig",
    "disparity_map",
    "anomaly_scores",
    "kmeans",
    "assign_clusters",
    "select_anomalous_clusters",
    "morphological_cleanup",
    "connected_components",
    "fit_bbox",
    "segment_scan",
]

# above this many pixels, k-means fits on a deterministic stride subsample
# and then assigns every pixel to its nearest centroid
KMEANS_PIXEL_LIMIT = 512 * 512


def disparity_map(stylized, reconstructed):
    """Signed per-channel difference, stylized - reconstructed, in [-1, 1]."""
    stylized = np.asarray(stylized, dtype=np.float64)
    reconstructed = np.asarray(reconstructed, dtype=np.float64)
    check_same_shape(stylized, reconstructed, ("stylized", "reconstructed"))
    if stylized.ndim != 3 or stylized.shape[2] != 3:
        raise ValueError(f"disparity needs (H, W, 3) inputs, got {stylized.shape}")
    return stylized - reconstructed


DisparityMap = np.ndarray  # (H, W, 3) signed values in [-1, 1]


def anomaly_scores(disparity):
    """Per-pixel anomaly score: L2 norm over channels scaled into [0, 1]."""
    return np.sqrt((disparity ** 2).sum(axis=2)) / np.sqrt(disparity.shape[2])


@dataclass
class KMeansResult:
    centroids: np.ndarray  # (C, dim)
    labels: np.ndarray  # (n,) nearest-centroid index per point
    wcss: float
    n_iter: int
    wcss_history: list = field(default_factory=list)

    @property
    def n_clusters(self):
        return len(self.centroids)


def _nearest(points, centroids):
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels, d2[np.arange(len(points)), labels]


def _kmeanspp(points, n_clusters, rng):
    n = len(points)
    centroids = np.empty((n_clusters, points.shape[1]))
    centroids[0] = points[rng.integers(0, n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for k in range(1, n_clusters):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(0, n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[k] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[k]) ** 2).sum(axis=1))
    return centroids


def kmeans(points, n_clusters, seed=0, max_iter=100):
    """Lloyd iterations with k-means++ seeding, deterministic for a seed.

    Empty clusters are reseeded to the point farthest from its assigned
    centroid.  The within-cluster sum of squares is recorded after every
    assignment and verified non-increasing.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"points must be (n, dim), got {points.shape}")
    n = len(points)
    if n_clusters < 1:
        raise ValueError(f"n_clusters must be >= 1, got {n_clusters}")
    if n < n_clusters:
        raise ValueError(f"{n} points cannot fill {n_clusters} clusters")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(points, n_clusters, rng)
    labels, d2 = _nearest(points, centroids)
    wcss_history = [float(d2.sum())]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        # reseed empty clusters to the globally farthest point
        counts = np.bincount(labels, minlength=n_clusters)
        for k in np.flatnonzero(counts == 0):
            centroids[k] = points[d2.argmax()]
            labels, d2 = _nearest(points, centroids)
            counts = np.bincount(labels, minlength=n_clusters)
        # update step: means minimize the within-cluster sums
        for k in range(n_clusters):
            if counts[k]:
                centroids[k] = points[labels == k].mean(axis=0)
        new_labels, d2 = _nearest(points, centroids)
        wcss = float(d2.sum())
        if wcss > wcss_history[-1] + 1e-9 * max(1.0, wcss_history[-1]):
            raise AssertionError(
                f"wcss increased at iteration {n_iter}: "
                f"{wcss_history[-1]} -> {wcss}"
            )
        wcss_history.append(wcss)
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return KMeansResult(centroids, labels, wcss_history[-1], n_iter, wcss_history)


def assign_clusters(points, centroids):
    """Nearest-centroid label for each point."""
    labels, _ = _nearest(np.asarray(points, dtype=np.float64), centroids)
    return labels


def select_anomalous_clusters(disparity, result, pixel_labels=None):
    """Candidate anomaly mask: everything outside the background cluster.

    The background cluster is the one whose centroid has the smallest L2
    norm in disparity space (ties broken by lower cluster index).
    """
    h, w = disparity.shape[:2]
    if pixel_labels is None:
        pixel_labels = result.labels
    if pixel_labels.size != h * w:
        raise ValueError("pixel labels do not cover the disparity map")
    norms = np.sqrt((result.centroids ** 2).sum(axis=1))
    background = int(norms.argmin())
    return (pixel_labels.reshape(h, w) != background)


def _structuring_element(radius):
    # square element (Chebyshev ball): opening preserves axis-aligned
    # rectangles at least as large as the element, corners included
    size = 2 * int(radius) + 1
    return np.ones((size, size), dtype=bool)


@dataclass
class SegmenterConfig:
    n_clusters: int = 4
    min_area: int | None = None  # None: 0.05% of the image area, at least 1
    opening_radius: int = 2
    kmeans_max_iter: int = 100
    kmeans_seed: int = 0

    def __post_init__(self):
        if self.n_clusters < 2:
            raise ValueError(f"n_clusters must be >= 2, got {self.n_clusters}")
        if self.min_area is not None and self.min_area < 1:
            raise ValueError(f"min_area must be >= 1, got {self.min_area}")
        if self.opening_radius < 0:
            raise ValueError(f"opening_radius must be >= 0, got {self.opening_radius}")

    def resolve_min_area(self, image_shape):
        if self.min_area is not None:
            return self.min_area
        return max(1, int(0.0005 * image_shape[0] * image_shape[1]))


def morphological_cleanup(mask, config, image_shape=None):
    """Opening with a square element, then removal of small components."""
    mask = np.asarray(mask, dtype=bool)
    if config.opening_radius > 0:
        opened = ndimage.binary_opening(
            mask, structure=_structuring_element(config.opening_radius)
        )
    else:
        opened = mask.copy()
    min_area = config.resolve_min_area(image_shape or mask.shape)
    if min_area > 1:
        cleaned = np.zeros_like(opened)
        for instance in connected_components(opened):
            if instance.area >= min_area:
                cleaned[instance.pixels[:, 0], instance.pixels[:, 1]] = True
        return cleaned
    return opened


@dataclass
class InstanceMask:
    component_id: int
    pixels: np.ndarray  # (n, 2) array of (row, col), raster order
    shape: tuple

    @property
    def area(self):
        return len(self.pixels)


def connected_components(mask):
    """8-connected components, ids assigned in raster discovery order."""
    mask = np.asarray(mask, dtype=bool)
    labeled, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return []
    flat = labeled.ravel()
    nonzero = np.flatnonzero(flat)
    first_seen = {}
    for idx in nonzero:
        label = flat[idx]
        if label not in first_seen:
            first_seen[label] = idx
            if len(first_seen) == count:
                break
    order = sorted(first_seen, key=first_seen.get)
    instances = []
    for new_id, label in enumerate(order, start=1):
        pixels = np.argwhere(labeled == label)
        instances.append(InstanceMask(new_id, pixels, mask.shape))
    return instances


def fit_bbox(instance):
    """Minimal axis-aligned box (x0, y0, x1, y1) over the mask pixels."""
    if instance.area < 1:
        raise ValueError("cannot fit a bbox to an empty mask")
    rows = instance.pixels[:, 0]
    cols = instance.pixels[:, 1]
    return (int(cols.min()), int(rows.min()), int(cols.max()), int(rows.max()))


@dataclass
class Detection:
    bbox: tuple
    score: float
    mask: InstanceMask
    class_label: int | None = None


def segment_scan(
    scan,
    network,
    reference,
    *,
    sigma=5.0,
    patch_size=64,
    config=None,
    use_fda=False,
    beta=5.0,
):
    """Full inference pipeline for one scan.

    stylize -> patch-wise reconstruct -> disparity -> k-means -> cluster
    selection -> morphology -> connected components -> boxes.  Each
    detection's score is the mean per-pixel anomaly score over its mask.
    """
    from .nn.training import reconstruct_image
    from .validation import check_image, ensure_channels

    if config is None:
        config = SegmenterConfig()
    scan = ensure_channels(check_image(scan), 3)
    reference = ensure_channels(check_image(reference), 3)
    if use_fda:
        stylized = stylize_fda(scan, reference, beta)
    else:
        stylized = stylize_gaussian(scan, reference, sigma)
    reconstructed = reconstruct_image(network, stylized, patch_size)
    disparity = disparity_map(stylized, reconstructed)

    points = disparity.reshape(-1, 3)
    if len(points) > KMEANS_PIXEL_LIMIT:
        stride = -(-len(points) // KMEANS_PIXEL_LIMIT)
        sample = points[::stride]
    else:
        sample = points
    result = kmeans(sample, config.n_clusters,
                    seed=config.kmeans_seed, max_iter=config.kmeans_max_iter)
    pixel_labels = (
        result.labels if sample is points else assign_clusters(points, result.centroids)
    )
    candidate = select_anomalous_clusters(disparity, result, pixel_labels)
    cleaned = morphological_cleanup(candidate, config, disparity.shape[:2])

    scores = anomaly_scores(disparity)
    detections = []
    for instance in connected_components(cleaned):
        score = float(scores[instance.pixels[:, 0], instance.pixels[:, 1]].mean())
        detections.append(Detection(fit_bbox(instance), score, instance))
    return detections
