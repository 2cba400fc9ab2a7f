import numpy as np
import pytest

from anomseg.nn import Conv3x3, Dense, Flatten, MaxPool2, ReLU, Softmax, Upsample2
from oracles import naive_conv3x3


class TestConv3x3:
    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(3):
            conv = Conv3x3(3, 4, rng)
            x = rng.normal(size=(2, 3, 5, 6))
            got = conv.forward(x)
            want = naive_conv3x3(x, conv.weight.value, conv.bias.value)
            assert np.abs(got - want).max() < 1e-9

    def test_zero_weights_zero_output(self):
        conv = Conv3x3(3, 2)
        x = np.random.default_rng(1).normal(size=(1, 3, 4, 4))
        assert np.abs(conv.forward(x)).max() == 0.0

    def test_identity_kernel(self):
        conv = Conv3x3(1, 1)
        conv.weight.value[0, 0, 1, 1] = 1.0
        x = np.random.default_rng(2).normal(size=(1, 1, 6, 6))
        assert np.allclose(conv.forward(x), x, atol=0)

    def test_backward_before_forward_raises(self):
        conv = Conv3x3(1, 1)
        with pytest.raises(RuntimeError):
            conv.backward(np.zeros((1, 1, 4, 4)))

    def test_channel_mismatch_rejected(self):
        conv = Conv3x3(3, 2)
        with pytest.raises(ValueError):
            conv.forward(np.zeros((1, 1, 4, 4)))


class TestMaxPool2:
    def test_small_example(self):
        pool = MaxPool2()
        x = np.array([[1.0, 2.0, 5.0, 3.0],
                      [4.0, 0.0, 1.0, 2.0],
                      [7.0, 6.0, 0.0, 1.0],
                      [5.0, 8.0, 1.0, 9.0]]).reshape(1, 1, 4, 4)
        out = pool.forward(x)
        assert np.array_equal(out[0, 0], [[4.0, 5.0], [8.0, 9.0]])

    def test_gradient_routed_to_first_tie(self):
        pool = MaxPool2()
        x = np.full((1, 1, 2, 2), 3.0)  # all four tie
        pool.forward(x)
        grad = pool.backward(np.array([[[[1.0]]]]))
        expected = np.zeros((1, 1, 2, 2))
        expected[0, 0, 0, 0] = 1.0  # row-major first element of the window
        assert np.array_equal(grad, expected)

    def test_odd_dims_rejected(self):
        with pytest.raises(ValueError):
            MaxPool2().forward(np.zeros((1, 1, 3, 4)))


class TestUpsample2:
    def test_forward_repeats(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
        out = Upsample2().forward(x)
        assert np.array_equal(out[0, 0, :2, :2], [[1.0, 1.0], [1.0, 1.0]])
        assert out.shape == (1, 1, 4, 4)

    def test_backward_sums_blocks(self):
        up = Upsample2()
        up.forward(np.zeros((1, 1, 2, 2)))
        grad = np.arange(16.0).reshape(1, 1, 4, 4)
        back = up.backward(grad)
        assert back[0, 0, 0, 0] == 0 + 1 + 4 + 5


class TestReLU:
    def test_zero_gradient_for_negative_inputs(self):
        relu = ReLU()
        x = np.array([[-1.0, 0.0, 2.0]])
        out = relu.forward(x)
        assert np.array_equal(out, [[0.0, 0.0, 2.0]])
        grad = relu.backward(np.ones_like(x))
        assert np.array_equal(grad, [[0.0, 0.0, 1.0]])


class TestDenseSoftmaxFlatten:
    def test_dense_known_values(self):
        dense = Dense(2, 2)
        dense.weight.value[:] = [[1.0, 2.0], [3.0, 4.0]]
        dense.bias.value[:] = [0.5, -0.5]
        out = dense.forward(np.array([[1.0, 1.0]]))
        assert np.allclose(out, [[3.5, 6.5]], atol=0)

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(3)
        probs = Softmax().forward(rng.normal(size=(5, 7)) * 10)
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-6
        assert probs.min() >= 0

    def test_softmax_uniform_logits(self):
        probs = Softmax().forward(np.zeros((2, 4)))
        assert np.allclose(probs, 0.25, atol=1e-12)

    def test_flatten_round_trip(self):
        flat = Flatten()
        x = np.arange(24.0).reshape(2, 3, 2, 2)
        out = flat.forward(x)
        assert out.shape == (2, 12)
        assert np.array_equal(flat.backward(out), x)
