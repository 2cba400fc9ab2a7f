"""Unsupervised anomaly instance segmentation toolkit.

Pipeline: frequency-domain stylization of input scans, patch-wise
reconstruction by a small trained encoder-decoder, and extraction of
anomalous object instances from the reconstruction disparity maps.
"""

__version__ = "0.1.0"

from .estimators import (
    AnomalySegmenter,
    FourierStylizer,
    PatchClassifier,
    PatchReconstructor,
)

__all__ = [
    "AnomalySegmenter",
    "FourierStylizer",
    "PatchClassifier",
    "PatchReconstructor",
    "__version__",
]
