import numpy as np
import pytest

from anomseg.nn import (
    AdamState,
    IdentityExtractor,
    adam_step,
    build_feature_extractor,
    combined_loss,
    cross_entropy,
    feature_loss,
    pixel_loss,
)


class TestPixelLoss:
    def test_identical_inputs(self):
        x = np.random.default_rng(0).random((2, 3, 4, 4))
        assert pixel_loss(x, x.copy()) == 0.0

    def test_unit_difference(self):
        assert pixel_loss(np.ones((2, 3, 4, 4)), np.zeros((2, 3, 4, 4))) == 1.0

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(1)
        a, b = rng.random((2, 2, 3, 3)), rng.random((2, 2, 3, 3))
        acc = 0.0
        for i in np.ndindex(a.shape):
            acc += (a[i] - b[i]) ** 2
        assert abs(pixel_loss(a, b) - acc / a.size) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            pixel_loss(np.zeros((1, 2)), np.zeros((2, 1)))


class TestFeatureLoss:
    def test_identical_inputs(self):
        x = np.random.default_rng(2).random((1, 3, 8, 8))
        extractor = build_feature_extractor(seed=0)
        assert feature_loss(x, x.copy(), extractor) == 0.0

    def test_identity_extractor_unit_difference(self):
        ones, zeros = np.ones((2, 3, 4, 4)), np.zeros((2, 3, 4, 4))
        assert feature_loss(ones, zeros, IdentityExtractor()) == 1.0


class TestCombinedLoss:
    def test_zero_for_equal_inputs(self):
        x = np.random.default_rng(3).random((1, 3, 8, 8))
        extractor = build_feature_extractor(seed=1)
        assert combined_loss(x, x.copy(), extractor, 0.7, 0.3) == 0.0

    def test_identity_extractor_composition(self):
        ones, zeros = np.ones((2, 3, 4, 4)), np.zeros((2, 3, 4, 4))
        value = combined_loss(ones, zeros, IdentityExtractor(), 0.7, 0.3)
        assert abs(value - 1.0) < 1e-12

    def test_default_weights(self):
        import inspect

        from anomseg.nn.losses import combined_loss as fn

        sig = inspect.signature(fn)
        assert sig.parameters["weight_feature"].default == 0.7
        assert sig.parameters["weight_pixel"].default == 0.3

    def test_rejects_negative_weights(self):
        x = np.zeros((1, 3, 8, 8))
        with pytest.raises(ValueError):
            combined_loss(x, x, IdentityExtractor(), -0.1, 0.3)


class TestCrossEntropy:
    def test_perfect_prediction(self):
        probs = np.eye(3)
        assert cross_entropy(probs, np.eye(3)) < 1e-10

    def test_uniform_prediction(self):
        probs = np.full((5, 4), 0.25)
        targets = np.eye(4)[np.arange(5) % 4]
        assert abs(cross_entropy(probs, targets) - np.log(4)) < 1e-12

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(4)
        logits = rng.random((6, 3)) + 0.1
        probs = logits / logits.sum(axis=1, keepdims=True)
        targets = np.eye(3)[rng.integers(0, 3, 6)]
        acc = 0.0
        for i in range(6):
            for j in range(3):
                acc -= targets[i, j] * np.log(max(probs[i, j], 1e-12))
        assert abs(cross_entropy(probs, targets) - acc / 6) < 1e-12


class TestAdam:
    def test_zero_gradient_is_identity(self):
        params = [np.array([1.0, -2.0]), np.array([[0.5]])]
        state = AdamState()
        before = [p.copy() for p in params]
        adam_step(state, params, [np.zeros(2), np.zeros((1, 1))])
        assert all(np.array_equal(p, b) for p, b in zip(params, before))

    def test_first_step_magnitude_is_learning_rate(self):
        # bias-corrected first step moves ~lr regardless of gradient scale
        for scale in (1e-4, 1.0, 1e4):
            params = [np.array([0.0])]
            state = AdamState(learning_rate=0.01)
            adam_step(state, params, [np.array([scale])])
            assert abs(abs(params[0][0]) - 0.01) < 1e-6

    def test_quadratic_trajectory(self):
        # minimize f(w) = w^2 from w0=1: strict decrease until the momentum
        # overshoot crosses zero (step ~11), then settles near 0
        w = np.array([1.0])
        state = AdamState(learning_rate=0.1)
        values = [w[0]]
        for _ in range(200):
            adam_step(state, [w], [2.0 * w])
            values.append(w[0])
        assert abs(w[0]) < 0.05
        from itertools import takewhile

        positive_prefix = list(takewhile(lambda v: v > 0, values))
        assert len(positive_prefix) >= 10
        assert all(b < a for a, b in zip(positive_prefix, positive_prefix[1:]))

    def test_rejects_non_finite_gradients(self):
        state = AdamState()
        with pytest.raises(FloatingPointError):
            adam_step(state, [np.zeros(2)], [np.array([np.nan, 0.0])])

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ValueError):
            adam_step(AdamState(), [np.zeros(2)], [])
