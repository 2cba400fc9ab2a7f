"""Scikit-learn style estimators wrapping the functional pipeline.

All estimators follow the sklearn contract: constructor arguments are stored
verbatim (get_params/set_params/clone work), validation happens in fit, and
fitted attributes carry a trailing underscore.  X is a list/sequence of
(H, W, C) float images in [0, 1] rather than a 2D feature matrix, since the
pipeline operates on rasters of possibly differing sizes.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .image import bilinear_resize
from .nn.network import Network
from .nn.training import (
    classify_patches,
    reconstruct_image,
    train_classifier,
    train_reconstructor,
)
from .segment import SegmenterConfig, segment_scan
from .spectral import (
    reference_magnitude,
    stylize_fda,
    stylize_gaussian,
    stylize_gaussian_from_magnitude,
)
from .validation import check_image, ensure_channels

__all__ = [
    "FourierStylizer",
    "PatchReconstructor",
    "AnomalySegmenter",
    "PatchClassifier",
]


def _images(X, channels=3):
    if isinstance(X, np.ndarray) and X.ndim == 3:
        X = [X]
    return [ensure_channels(check_image(x), channels) for x in X]


class FourierStylizer(TransformerMixin, BaseEstimator):
    """Frequency-domain stylization toward a reference domain.

    Parameters
    ----------
    sigma : float
        Gaussian window scale (bins) for the magnitude-blending scheme.
    method : {"gaussian", "fda"}
        "gaussian" adds the windowed reference magnitude to the input
        magnitude; "fda" swaps the low-frequency magnitudes inside a
        rectangular window instead.
    beta : float
        Rectangular half-width (bins) for the "fda" method.

    fit(X) stores reference images from the target domain.  With several
    references the gaussian method blends their mean magnitude spectrum;
    the fda method always uses the first reference.
    """

    def __init__(self, sigma=5.0, method="gaussian", beta=5.0):
        self.sigma = sigma
        self.method = method
        self.beta = beta

    def fit(self, X, y=None):
        if self.method not in ("gaussian", "fda"):
            raise ValueError(f"unknown method {self.method!r}")
        refs = _images(X)
        if not refs:
            raise ValueError("need at least one reference image")
        self.reference_images_ = refs
        return self

    def _check_fitted(self):
        if not hasattr(self, "reference_images_"):
            raise NotFittedError("FourierStylizer is not fitted")

    def stylize(self, img):
        self._check_fitted()
        img = ensure_channels(check_image(img), 3)
        if self.method == "fda":
            return stylize_fda(img, self.reference_images_[0], self.beta)
        if len(self.reference_images_) == 1:
            return stylize_gaussian(img, self.reference_images_[0], self.sigma)
        mag = reference_magnitude(self.reference_images_, img.shape[:2])
        return stylize_gaussian_from_magnitude(img, mag, self.sigma)

    def transform(self, X):
        return [self.stylize(img) for img in _images(X)]


class PatchReconstructor(TransformerMixin, BaseEstimator):
    """Denoising patch autoencoder fitted on normal images.

    fit(X) trains the small encoder-decoder on noise-perturbed patches of X;
    transform(X) returns patch-wise reconstructions.  Fitted attributes:
    network_, loss_history_, n_parameters_.
    """

    def __init__(self, patch_size=64, noise_std=0.05, epochs=30, batch_size=16,
                 learning_rate=0.001, alpha_feature=0.7, alpha_pixel=0.3,
                 max_patches=None, random_state=0):
        self.patch_size = patch_size
        self.noise_std = noise_std
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.alpha_feature = alpha_feature
        self.alpha_pixel = alpha_pixel
        self.max_patches = max_patches
        self.random_state = random_state

    def fit(self, X, y=None):
        network, history = train_reconstructor(
            _images(X),
            patch_size=self.patch_size,
            noise_std=self.noise_std,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            alpha_feature=self.alpha_feature,
            alpha_pixel=self.alpha_pixel,
            seed=self.random_state,
            max_patches=self.max_patches,
        )
        self.network_ = network
        self.loss_history_ = history
        self.n_parameters_ = network.parameter_count()
        return self

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise NotFittedError("PatchReconstructor is not fitted")

    def reconstruct(self, img):
        self._check_fitted()
        img = ensure_channels(check_image(img), 3)
        return reconstruct_image(self.network_, img, self.patch_size)

    def transform(self, X):
        return [self.reconstruct(img) for img in _images(X)]


class AnomalySegmenter(BaseEstimator):
    """End-to-end unsupervised anomaly instance segmentation.

    fit(X) trains the reconstructor on normal images and keeps a stylization
    reference from the same domain; predict(X) returns a list of Detection
    lists, one per scan.

    Parameters mirror the pipeline stages: stylization (sigma / method /
    beta), reconstruction training (patch_size, noise_std, epochs,
    batch_size, learning_rate, alpha_feature, alpha_pixel, max_patches), and
    disparity clustering (n_clusters, min_area, opening_radius).  reference
    selects the stylization reference: "first" keeps the first training
    image, "average" blends the magnitude spectra of all of them, or pass an
    explicit image array.
    """

    def __init__(self, sigma=5.0, method="gaussian", beta=5.0, patch_size=64,
                 noise_std=0.05, epochs=30, batch_size=16, learning_rate=0.001,
                 alpha_feature=0.7, alpha_pixel=0.3, max_patches=None,
                 n_clusters=4, min_area=None, opening_radius=2,
                 reference="first", random_state=0):
        self.sigma = sigma
        self.method = method
        self.beta = beta
        self.patch_size = patch_size
        self.noise_std = noise_std
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.alpha_feature = alpha_feature
        self.alpha_pixel = alpha_pixel
        self.max_patches = max_patches
        self.n_clusters = n_clusters
        self.min_area = min_area
        self.opening_radius = opening_radius
        self.reference = reference
        self.random_state = random_state

    def fit(self, X, y=None):
        images = _images(X)
        if not images:
            raise ValueError("need at least one normal training image")
        network, history = train_reconstructor(
            images,
            patch_size=self.patch_size,
            noise_std=self.noise_std,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            alpha_feature=self.alpha_feature,
            alpha_pixel=self.alpha_pixel,
            seed=self.random_state,
            max_patches=self.max_patches,
        )
        self.network_ = network
        self.loss_history_ = history
        if isinstance(self.reference, str):
            if self.reference == "first":
                self.reference_images_ = [images[0]]
            elif self.reference == "average":
                self.reference_images_ = images
            else:
                raise ValueError(f"unknown reference mode {self.reference!r}")
        else:
            self.reference_images_ = [ensure_channels(check_image(self.reference), 3)]
        return self

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise NotFittedError("AnomalySegmenter is not fitted")

    def segmenter_config(self):
        return SegmenterConfig(
            n_clusters=self.n_clusters,
            min_area=self.min_area,
            opening_radius=self.opening_radius,
            kmeans_seed=self.random_state,
        )

    def segment(self, img):
        self._check_fitted()
        return segment_scan(
            img,
            self.network_,
            self.reference_images_[0],
            sigma=self.sigma,
            patch_size=self.patch_size,
            config=self.segmenter_config(),
            use_fda=(self.method == "fda"),
            beta=self.beta,
        )

    def predict(self, X):
        """Detections per scan (list of lists of Detection)."""
        return [self.segment(img) for img in _images(X)]

    def predict_abnormal(self, X):
        """Scan-level decision: True when at least one detection survives."""
        return [len(dets) > 0 for dets in self.predict(X)]


class PatchClassifier(ClassifierMixin, BaseEstimator):
    """Optional patch classifier for recognizing anomaly categories.

    fit(X, y) trains the small conv classifier on (H, W, C) patches; inputs
    are resized to patch_size x patch_size.  Follows the sklearn classifier
    contract (classes_, predict, predict_proba).
    """

    def __init__(self, patch_size=64, epochs=20, batch_size=32,
                 learning_rate=0.0001, random_state=0):
        self.patch_size = patch_size
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.random_state = random_state

    def _prepare(self, X):
        size = (self.patch_size, self.patch_size)
        return [bilinear_resize(img, size) for img in _images(X)]

    def fit(self, X, y):
        y = np.asarray(y)
        self.classes_, indices = np.unique(y, return_inverse=True)
        network, history = train_classifier(
            self._prepare(X),
            indices,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=self.random_state,
            n_classes=len(self.classes_),
        )
        self.network_ = network
        self.accuracy_history_ = history
        return self

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise NotFittedError("PatchClassifier is not fitted")

    def predict_proba(self, X):
        self._check_fitted()
        _, probs = classify_patches(self.network_, self._prepare(X))
        return probs

    def predict(self, X):
        return self.classes_[self.predict_proba(X).argmax(axis=1)]
