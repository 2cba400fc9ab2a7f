"""Centered 2D Fourier transforms and frequency-domain stylization.

The forward transform used throughout is the normalized, center-aligned DFT

    X[u, v] = (1/MN) * sum_{s,t} (-1)^(s+t) x[s, t] exp(-j2pi(us/M + vt/N))

so the DC term sits at bin (M//2, N//2) for even dims and equals the image
mean.  The inverse is the exact adjoint without the 1/MN factor:

    x[s, t] = sum_{u,v} (-1)^(u+v) X[u, v] exp(+j2pi(su/M + tv/N))

Stylization blends a reference scan's magnitude spectrum into an input scan's
magnitude spectrum while keeping the input phase untouched.  Two windows are
provided: a normalized Gaussian of scale sigma (peak 1/(2*pi*sigma^2)), and
the rectangular low-frequency swap used by Fourier domain adaptation (FDA).
"""

import numpy as np

from .image import bilinear_resize
from .validation import check_image, check_same_shape

__all__ = [
    "fft2_centered",
    "ifft2_centered",
    "ifft2_centered_complex",
    "gaussian_window",
    "stylization_mask",
    "reference_magnitude",
    "stylize_gaussian",
    "stylize_fda",
]


def _sign_grid(m, n):
    s = np.arange(m)[:, None] + np.arange(n)[None, :]
    return np.where(s % 2 == 0, 1.0, -1.0)


def fft2_centered(channel):
    """Normalized centered 2D DFT of one real (or complex) M x N channel."""
    arr = np.asarray(channel)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2D array, got shape {arr.shape}")
    m, n = arr.shape
    return np.fft.fft2(arr * _sign_grid(m, n)) / (m * n)


def ifft2_centered_complex(spec):
    """Inverse of fft2_centered, keeping the complex result.

    The alternating centering factor is applied at the output spatial
    indices, which makes the pair an exact transform/inverse for any dims.
    """
    arr = np.asarray(spec, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D spectrum, got shape {arr.shape}")
    m, n = arr.shape
    return np.fft.ifft2(arr) * (m * n) * _sign_grid(m, n)


def ifft2_centered(spec, max_imag=1e-6):
    """Inverse centered DFT for conjugate-symmetric spectra.

    Asserts the imaginary residue stays below max_imag before discarding it.
    """
    out = ifft2_centered_complex(spec)
    residue = np.abs(out.imag).max()
    if residue >= max_imag:
        raise ValueError(
            f"spectrum is not conjugate-symmetric: imaginary residue {residue:.3g}"
        )
    return out.real


def gaussian_window(m, n, sigma):
    """Normalized isotropic Gaussian window on the centered frequency grid.

    Value at offset (du, dv) from the center bin (m//2, n//2) is
    exp(-(du^2 + dv^2) / (2 sigma^2)) / (2 pi sigma^2).
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    du = (np.arange(m) - m // 2)[:, None]
    dv = (np.arange(n) - n // 2)[None, :]
    r2 = du.astype(np.float64) ** 2 + dv.astype(np.float64) ** 2
    return np.exp(-r2 / (2.0 * sigma ** 2)) / (2.0 * np.pi * sigma ** 2)


def reference_magnitude(references, dims):
    """Mean centered-spectrum magnitude of one or more reference images.

    Each reference is bilinearly resized to dims=(M, N) first; the result has
    shape (M, N, C) matching the first reference's channel count.
    """
    if isinstance(references, np.ndarray):
        references = [references]
    if len(references) == 0:
        raise ValueError("need at least one reference image")
    m, n = int(dims[0]), int(dims[1])
    acc = None
    channels = None
    for ref in references:
        ref = check_image(ref)
        if channels is None:
            channels = ref.shape[2]
        elif ref.shape[2] != channels:
            raise ValueError("reference images must share a channel count")
        ref = bilinear_resize(ref, (m, n))
        mag = np.stack(
            [np.abs(fft2_centered(ref[:, :, c])) for c in range(channels)], axis=2
        )
        acc = mag if acc is None else acc + mag
    return acc / len(references)


def stylization_mask(reference, sigma, dims=None):
    """Gaussian-windowed reference magnitude, per channel.

    Returns |F{reference}| * G as an (M, N, C) array; dims defaults to the
    reference's own shape (pass dims to resize the reference first).
    """
    reference = check_image(reference)
    if dims is None:
        dims = reference.shape[:2]
    mag = reference_magnitude(reference, dims)
    window = gaussian_window(dims[0], dims[1], sigma)
    return mag * window[:, :, None]


def _stylized_channel(channel, extra_magnitude):
    spec = fft2_centered(channel)
    phase = np.exp(1j * np.angle(spec))
    boosted = (np.abs(spec) + extra_magnitude) * phase
    return ifft2_centered(boosted, max_imag=1e-6)


def stylize_gaussian(img, reference, sigma, clip=True):
    """Blend the reference's Gaussian-windowed magnitude into an image.

    Per channel, the output magnitude is |X| + |Y| * G(sigma) with the input
    phase kept, then inverse transformed.  The reference is resized to the
    input dims if needed.  clip=False skips the final clamp to [0, 1].
    """
    img = check_image(img)
    reference = check_image(reference)
    if img.shape[2] != reference.shape[2]:
        raise ValueError(
            f"channel mismatch: input {img.shape[2]} vs reference {reference.shape[2]}"
        )
    mask = stylization_mask(reference, sigma, dims=img.shape[:2])
    return _apply_mask(img, mask, clip)


def stylize_gaussian_from_magnitude(img, ref_mag, sigma, clip=True):
    """Gaussian stylization from a precomputed reference magnitude (M, N, C)."""
    img = check_image(img)
    ref_mag = np.asarray(ref_mag, dtype=np.float64)
    if ref_mag.shape != img.shape:
        raise ValueError(
            f"reference magnitude shape {ref_mag.shape} != image shape {img.shape}"
        )
    window = gaussian_window(img.shape[0], img.shape[1], sigma)
    return _apply_mask(img, ref_mag * window[:, :, None], clip)


def _apply_mask(img, mask, clip):
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        out[:, :, c] = _stylized_channel(img[:, :, c], mask[:, :, c])
    return np.clip(out, 0.0, 1.0) if clip else out


def stylize_fda(img, reference, beta, clip=True):
    """Rectangular low-frequency magnitude swap (FDA baseline).

    Magnitude bins within Chebyshev distance beta of the spectrum center are
    replaced by the reference's; phase is preserved.  beta is an absolute
    half-width in bins and must satisfy beta < min(M, N) / 2.
    """
    img = check_image(img)
    reference = check_image(reference)
    if img.shape[2] != reference.shape[2]:
        raise ValueError(
            f"channel mismatch: input {img.shape[2]} vs reference {reference.shape[2]}"
        )
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    m, n = img.shape[:2]
    if beta >= min(m, n) / 2:
        raise ValueError(
            f"beta {beta} covers the full spectrum of a {m}x{n} image"
        )
    reference = bilinear_resize(reference, (m, n))
    du = np.abs(np.arange(m) - m // 2)[:, None]
    dv = np.abs(np.arange(n) - n // 2)[None, :]
    window = (du <= beta) & (dv <= beta)
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        spec = fft2_centered(img[:, :, c])
        ref_mag = np.abs(fft2_centered(reference[:, :, c]))
        magnitude = np.abs(spec)
        magnitude[window] = ref_mag[window]
        phase = np.exp(1j * np.angle(spec))
        out[:, :, c] = ifft2_centered(magnitude * phase, max_imag=1e-6)
    return np.clip(out, 0.0, 1.0) if clip else out
