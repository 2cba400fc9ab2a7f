"""Training losses and their gradients.

pixel_loss is the mean squared difference averaged over every element (batch,
channels, pixels), so its magnitude is resolution independent.  feature_loss
is the mean absolute difference between feature maps of a frozen extractor
(L1, not squared).  combined_loss blends the two; the defaults weight the
feature term 0.7 and the pixel term 0.3.
"""

import numpy as np

__all__ = [
    "pixel_loss",
    "pixel_loss_grad",
    "feature_loss",
    "feature_loss_grad",
    "combined_loss",
    "combined_loss_and_grad",
    "cross_entropy",
    "cross_entropy_grad",
]

_PROB_FLOOR = 1e-12


def _check_shapes(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def pixel_loss(target, recon):
    """Mean over all elements of the squared difference."""
    target, recon = np.asarray(target), np.asarray(recon)
    _check_shapes(target, recon)
    return float(np.mean((target - recon) ** 2))


def pixel_loss_grad(target, recon):
    """Gradient of pixel_loss with respect to recon."""
    _check_shapes(target, recon)
    return 2.0 * (recon - target) / target.size


def feature_loss(target, recon, extractor):
    """Mean absolute difference between extractor features of both tensors."""
    target, recon = np.asarray(target), np.asarray(recon)
    _check_shapes(target, recon)
    f_target = extractor.forward(target)
    f_recon = extractor.forward(recon)
    return float(np.mean(np.abs(f_target - f_recon)))


def feature_loss_grad(target, recon, extractor):
    """Gradient of feature_loss with respect to recon.

    Runs the extractor on the target first and on recon second so the
    extractor's cached activations belong to recon when backpropagating.
    """
    _check_shapes(target, recon)
    f_target = extractor.forward(target)
    f_recon = extractor.forward(recon)
    sign = np.sign(f_recon - f_target) / f_target.size
    return extractor.backward(sign)


def combined_loss(target, recon, extractor, weight_feature=0.7, weight_pixel=0.3):
    if weight_feature < 0 or weight_pixel < 0:
        raise ValueError("loss weights must be non-negative")
    return (
        weight_feature * feature_loss(target, recon, extractor)
        + weight_pixel * pixel_loss(target, recon)
    )


def combined_loss_and_grad(target, recon, extractor, weight_feature=0.7, weight_pixel=0.3):
    """Value and gradient (w.r.t. recon) of the blended training loss.

    Computes both loss terms from a single extractor pass pair.
    """
    if weight_feature < 0 or weight_pixel < 0:
        raise ValueError("loss weights must be non-negative")
    target, recon = np.asarray(target), np.asarray(recon)
    _check_shapes(target, recon)
    f_target = extractor.forward(target)
    f_recon = extractor.forward(recon)
    value_f = float(np.mean(np.abs(f_target - f_recon)))
    value_p = float(np.mean((target - recon) ** 2))
    sign = np.sign(f_recon - f_target) / f_target.size
    grad = weight_feature * extractor.backward(sign)
    grad += weight_pixel * 2.0 * (recon - target) / target.size
    value = weight_feature * value_f + weight_pixel * value_p
    return value, grad


def cross_entropy(probs, targets):
    """Mean negative log-likelihood of one-hot targets under given probs.

    Probabilities are floored at 1e-12 before the log.
    """
    probs, targets = np.asarray(probs), np.asarray(targets)
    _check_shapes(probs, targets)
    clipped = np.maximum(probs, _PROB_FLOOR)
    return float(-np.sum(targets * np.log(clipped)) / probs.shape[0])


def cross_entropy_grad(probs, targets):
    """Gradient of cross_entropy with respect to probs."""
    probs, targets = np.asarray(probs), np.asarray(targets)
    _check_shapes(probs, targets)
    clipped = np.maximum(probs, _PROB_FLOOR)
    return -targets / clipped / probs.shape[0]
