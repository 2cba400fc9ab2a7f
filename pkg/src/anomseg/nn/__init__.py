from .layers import Conv3x3, Dense, Flatten, MaxPool2, Parameter, ReLU, Softmax, Upsample2
from .losses import (
    combined_loss,
    combined_loss_and_grad,
    cross_entropy,
    cross_entropy_grad,
    feature_loss,
    feature_loss_grad,
    pixel_loss,
    pixel_loss_grad,
)
from .models import (
    FeatureExtractor,
    IdentityExtractor,
    build_classifier,
    build_feature_extractor,
    build_reconstructor,
)
from .network import Network, load_weights, save_weights
from .optim import AdamState, adam_step
from .training import (
    classify_patches,
    collect_patches,
    reconstruct_image,
    train_classifier,
    train_reconstructor,
)

__all__ = [
    "AdamState",
    "Conv3x3",
    "Dense",
    "FeatureExtractor",
    "Flatten",
    "IdentityExtractor",
    "MaxPool2",
    "Network",
    "Parameter",
    "ReLU",
    "Softmax",
    "Upsample2",
    "adam_step",
    "build_classifier",
    "build_feature_extractor",
    "build_reconstructor",
    "classify_patches",
    "collect_patches",
    "combined_loss",
    "combined_loss_and_grad",
    "cross_entropy",
    "cross_entropy_grad",
    "feature_loss",
    "feature_loss_grad",
    "load_weights",
    "pixel_loss",
    "pixel_loss_grad",
    "reconstruct_image",
    "save_weights",
    "train_classifier",
    "train_reconstructor",
]
