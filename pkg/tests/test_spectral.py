import numpy as np
import pytest

from anomseg.spectral import (
    fft2_centered,
    gaussian_window,
    ifft2_centered,
    ifft2_centered_complex,
    reference_magnitude,
    stylization_mask,
    stylize_fda,
    stylize_gaussian,
)


def naive_dft2_centered(x):
    """Direct O(M^2 N^2) evaluation of the normalized centered forward DFT."""
    m, n = x.shape
    out = np.zeros((m, n), dtype=np.complex128)
    for u in range(m):
        for v in range(n):
            acc = 0.0 + 0.0j
            for s in range(m):
                for t in range(n):
                    sign = -1.0 if (s + t) % 2 else 1.0
                    acc += sign * x[s, t] * np.exp(-2j * np.pi * (u * s / m + v * t / n))
            out[u, v] = acc / (m * n)
    return out


def naive_idft2_centered(spec):
    """Direct evaluation of the centered inverse transform (no 1/MN factor).

    The alternating centering sign lands on the output spatial sample; the
    literal spectrum-side placement is not the inverse of the forward
    transform (a center-bin-only spectrum would alternate instead of being
    constant).
    """
    m, n = spec.shape
    out = np.zeros((m, n), dtype=np.complex128)
    for s in range(m):
        for t in range(n):
            acc = 0.0 + 0.0j
            for u in range(m):
                for v in range(n):
                    acc += spec[u, v] * np.exp(2j * np.pi * (s * u / m + t * v / n))
            sign = -1.0 if (s + t) % 2 else 1.0
            out[s, t] = sign * acc
    return out


class TestForwardTransform:
    def test_constant_image_is_dc_only(self):
        x = np.full((8, 8), 0.37)
        spec = fft2_centered(x)
        center = spec[4, 4]
        assert abs(center - 0.37) < 1e-12
        spec[4, 4] = 0.0
        assert np.abs(spec).max() < 1e-12

    def test_corner_impulse_2x2(self):
        x = np.zeros((2, 2))
        x[0, 0] = 1.0
        spec = fft2_centered(x)
        assert np.allclose(spec, 0.25, atol=1e-12)

    @pytest.mark.parametrize("dims", [(8, 8), (12, 10)])
    def test_matches_naive_dft(self, dims):
        rng = np.random.default_rng(7)
        x = rng.random(dims)
        assert np.abs(fft2_centered(x) - naive_dft2_centered(x)).max() < 1e-9

    def test_linearity(self):
        rng = np.random.default_rng(11)
        x, y = rng.random((16, 16)), rng.random((16, 16))
        lhs = fft2_centered(2.5 * x + 0.3 * y)
        rhs = 2.5 * fft2_centered(x) + 0.3 * fft2_centered(y)
        assert np.abs(lhs - rhs).max() < 1e-9

    def test_parseval(self):
        rng = np.random.default_rng(13)
        for dims in [(16, 16), (12, 10), (9, 7)]:
            x = rng.random(dims)
            spec = fft2_centered(x)
            spatial = np.sum(x ** 2)
            spectral = dims[0] * dims[1] * np.sum(np.abs(spec) ** 2)
            assert abs(spatial - spectral) / spatial < 1e-6

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            fft2_centered(np.zeros((0, 4)))


class TestInverseTransform:
    def test_round_trip(self):
        rng = np.random.default_rng(3)
        x = rng.random((16, 16))
        back = ifft2_centered(fft2_centered(x))
        assert np.abs(back - x).max() < 1e-9

    def test_center_bin_only_gives_constant(self):
        spec = np.zeros((8, 8), dtype=np.complex128)
        spec[4, 4] = 0.42
        out = ifft2_centered(spec)
        assert np.allclose(out, 0.42, atol=1e-12)

    def test_random_spectrum_matches_naive(self):
        rng = np.random.default_rng(5)
        spec = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        got = ifft2_centered_complex(spec)
        want = naive_idft2_centered(spec)
        assert np.abs(got - want).max() < 1e-9

    def test_non_symmetric_spectrum_rejected_on_real_path(self):
        rng = np.random.default_rng(9)
        spec = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        with pytest.raises(ValueError):
            ifft2_centered(spec)


class TestGaussianWindow:
    def test_center_value(self):
        w = gaussian_window(32, 32, 5.0)
        assert abs(w[16, 16] - 1.0 / (2 * np.pi * 25.0)) < 1e-12
        assert abs(w[16, 16] - 0.0063662) < 1e-7

    def test_half_maximum_radius(self):
        sigma = 5.0
        w = gaussian_window(64, 64, sigma)
        center = w[32, 32]
        r = sigma * np.sqrt(2 * np.log(2))
        # interpolate along the center row at radius r
        lo, hi = int(np.floor(r)), int(np.ceil(r))
        frac = r - lo
        val = (1 - frac) * w[32, 32 + lo] + frac * w[32, 32 + hi]
        assert abs(val - 0.5 * center) < 0.01 * center

    def test_symmetry_odd_dims(self):
        w = gaussian_window(9, 7, 3.0)
        assert np.allclose(w, w[::-1, :], atol=0)
        assert np.allclose(w, w[:, ::-1], atol=0)

    def test_positive_and_maximal_at_center(self):
        w = gaussian_window(16, 12, 2.0)
        assert (w > 0).all()
        assert w.argmax() == np.ravel_multi_index((8, 6), w.shape)

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            gaussian_window(8, 8, 0.0)


class TestStylizationMask:
    def test_zero_reference_gives_zero_mask(self):
        mask = stylization_mask(np.zeros((16, 16, 3)), sigma=5.0)
        assert np.abs(mask).max() == 0.0

    def test_constant_reference_dc_only(self):
        c = 0.6
        mask = stylization_mask(np.full((16, 16, 1), c), sigma=5.0)
        center = mask[8, 8, 0]
        assert abs(center - c / (2 * np.pi * 25.0)) < 1e-12
        mask[8, 8, 0] = 0.0
        assert np.abs(mask).max() < 1e-12

    def test_energy_fraction_outside_radius_increases_with_sigma(self):
        # flat reference magnitude: mask is the window itself
        m = n = 64
        du = (np.arange(m) - m // 2)[:, None].astype(float)
        dv = (np.arange(n) - n // 2)[None, :].astype(float)
        outside = du ** 2 + dv ** 2 > 4.0 ** 2
        fractions = []
        for sigma in (5.0, 10.0, 25.0, 50.0):
            w = gaussian_window(m, n, sigma)
            energy = w ** 2
            fractions.append(energy[outside].sum() / energy.sum())
        assert all(a < b for a, b in zip(fractions, fractions[1:]))


class TestGaussianStylization:
    def test_zero_reference_is_identity(self):
        rng = np.random.default_rng(17)
        x = rng.random((16, 16, 3))
        out = stylize_gaussian(x, np.zeros_like(x), sigma=5.0, clip=False)
        assert np.abs(out - x).max() < 1e-9

    def test_constant_input_and_reference(self):
        # only the DC bin changes: 0.5 * (1 + 1/(2 pi 25)) = 0.5031831...
        x = np.full((16, 16, 3), 0.5)
        out = stylize_gaussian(x, x.copy(), sigma=5.0, clip=False)
        expected = 0.5 * (1.0 + 1.0 / (2 * np.pi * 25.0))
        assert abs(expected - 0.50318310) < 1e-7
        assert np.abs(out - expected).max() < 1e-9

    def test_phase_preserved(self):
        rng = np.random.default_rng(19)
        x = rng.random((16, 16, 3))
        ref = rng.random((16, 16, 3))
        out = stylize_gaussian(x, ref, sigma=5.0, clip=False)
        for c in range(3):
            before = fft2_centered(x[:, :, c])
            after = fft2_centered(out[:, :, c])
            significant = np.abs(before) > 1e-9
            dphi = np.angle(after[significant]) - np.angle(before[significant])
            dphi = (dphi + np.pi) % (2 * np.pi) - np.pi
            assert np.abs(dphi).max() < 1e-6

    def test_reference_resized_when_dims_differ(self):
        rng = np.random.default_rng(23)
        x = rng.random((16, 16, 3))
        ref = rng.random((24, 20, 3))
        out = stylize_gaussian(x, ref, sigma=5.0)
        assert out.shape == x.shape

    def test_rejects_bad_sigma(self):
        x = np.zeros((8, 8, 1))
        with pytest.raises(ValueError):
            stylize_gaussian(x, x, sigma=-1.0)


class TestFdaStylization:
    def test_reference_equal_input_is_identity(self):
        rng = np.random.default_rng(29)
        x = rng.random((16, 16, 3))
        out = stylize_fda(x, x.copy(), beta=5.0, clip=False)
        assert np.abs(out - x).max() < 1e-9

    def test_tiny_beta_swaps_only_the_mean(self):
        rng = np.random.default_rng(31)
        x = rng.random((16, 16, 1)) * 0.5 + 0.25
        ref = rng.random((16, 16, 1)) * 0.5 + 0.25
        out = stylize_fda(x, ref, beta=0.5, clip=False)
        # residual after removing the mean shift should vanish
        shifted = x[:, :, 0] + (out[:, :, 0].mean() - x[:, :, 0].mean())
        assert np.abs(out[:, :, 0] - shifted).max() < 1e-9
        assert abs(out[:, :, 0].mean() - ref[:, :, 0].mean()) < 1e-9

    def test_rejects_oversized_beta(self):
        x = np.zeros((16, 16, 1))
        with pytest.raises(ValueError):
            stylize_fda(x, x, beta=8.0)

    def test_differs_from_gaussian_scheme(self):
        rng = np.random.default_rng(37)
        x = rng.random((32, 32, 3))
        ref = rng.random((32, 32, 3))
        a = stylize_gaussian(x, ref, sigma=5.0)
        b = stylize_fda(x, ref, beta=5.0)
        assert np.abs(a - b).max() > 1e-6


class TestReferenceMagnitude:
    def test_averages_over_references(self):
        rng = np.random.default_rng(41)
        refs = [rng.random((16, 16, 3)) for _ in range(3)]
        mags = [
            np.stack([np.abs(fft2_centered(r[:, :, c])) for c in range(3)], axis=2)
            for r in refs
        ]
        got = reference_magnitude(refs, (16, 16))
        assert np.allclose(got, sum(mags) / 3, atol=1e-12)

    def test_rejects_empty_list(self):
        with pytest.raises(ValueError):
            reference_magnitude([], (8, 8))
