import numpy as np
import pytest
from mmreason.exceptions import (
    GradientContractError,
    NumericDomainError,
    ShapeMismatchError,
    UnsupportedOperationError,
    VocabularyIndexError,
)
from mmreason.tensor import (
    Tensor,
    backward,
    cross_entropy_loss,
    elementwise,
    embedding,
    finite_diff_check,
    layer_norm,
    matmul,
    no_grad,
    softmax_rows,
)


class TestMatmul:
    def test_identity(self):
        a = Tensor([[1, 0], [0, 1]])
        b = Tensor([[3, 4], [5, 6]])
        assert np.array_equal(matmul(a, b).data, [[3, 4], [5, 6]])

    def test_dot_product(self):
        assert matmul(Tensor([[1, 2]]), Tensor([[3], [4]])).data.tolist() == [[11]]

    def test_triple_loop_oracle(self, float64, rng):
        a, b = rng.normal(size=(4, 5)), rng.normal(size=(5, 3))
        expected = np.zeros((4, 3))
        for i in range(4):
            for j in range(3):
                for k in range(5):
                    expected[i, j] += a[i, k] * b[k, j]
        out = matmul(Tensor(a), Tensor(b)).data
        assert np.allclose(out, expected, atol=1e-12, rtol=0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestSoftmax:
    def test_uniform(self):
        assert np.allclose(softmax_rows(Tensor([[0.0, 0.0]])).data, [[0.5, 0.5]])

    def test_no_overflow(self):
        out = softmax_rows(Tensor([[1000.0, 1000.0]])).data
        assert np.all(np.isfinite(out))
        assert np.allclose(out, [[0.5, 0.5]])

    def test_values(self):
        out = softmax_rows(Tensor([[1.0, 2.0, 3.0]])).data
        assert np.allclose(out, [[0.09003057, 0.24472847, 0.66524096]], atol=1e-6)

    def test_rows_sum_to_one(self, float64, rng):
        out = softmax_rows(Tensor(rng.normal(scale=5.0, size=(6, 7)))).data
        assert np.allclose(out.sum(axis=-1), 1.0, atol=1e-6)

    def test_nan_rejected(self):
        with pytest.raises(NumericDomainError):
            softmax_rows(Tensor([[np.nan, 0.0]]))


class TestElementwise:
    def test_sigmoid(self):
        assert elementwise(Tensor(0.0), "sigmoid").item() == pytest.approx(0.5)
        value = elementwise(Tensor(2.0), "sigmoid").item()
        assert value == pytest.approx(0.8807971, abs=1e-6)

    def test_sigmoid_saturates_without_overflow(self, float64):
        out = elementwise(Tensor([-1000.0, 1000.0]), "sigmoid").data
        assert np.all(np.isfinite(out))
        assert out[0] == pytest.approx(0.0) and out[1] == pytest.approx(1.0)

    def test_relu(self):
        assert elementwise(Tensor(-3.0), "relu").item() == 0.0
        assert elementwise(Tensor(3.0), "relu").item() == 3.0

    def test_unknown_kind(self):
        with pytest.raises(UnsupportedOperationError, match="tanh"):
            elementwise(Tensor(1.0), "tanh")


class TestLayerNorm:
    def _norm(self, row, eps=1e-5):
        d = len(row)
        gain, bias = Tensor(np.ones(d)), Tensor(np.zeros(d))
        return layer_norm(Tensor([row]), gain, bias, eps).data[0]

    def test_constant_row(self):
        assert np.allclose(self._norm([1.0, 1.0, 1.0]), [0.0, 0.0, 0.0])

    def test_symmetric_row(self):
        assert np.allclose(self._norm([1.0, -1.0]), [1.0, -1.0], atol=1e-4)

    def test_values(self):
        expected = [-1.2247, 0.0, 1.2247]
        assert np.allclose(self._norm([1.0, 2.0, 3.0]), expected, atol=1e-3)

    def test_bad_eps(self):
        with pytest.raises(NumericDomainError):
            self._norm([1.0, 2.0], eps=0.0)
        with pytest.raises(NumericDomainError):
            self._norm([1.0, 2.0], eps=-1e-5)


class TestCrossEntropy:
    def test_uniform(self):
        loss = cross_entropy_loss(Tensor(np.zeros((1, 4))), [2])
        assert loss.item() == pytest.approx(np.log(4), abs=1e-6)

    def test_confident(self):
        logits = Tensor([[30.0, 0.0, 0.0]])
        assert cross_entropy_loss(logits, [0]).item() == pytest.approx(0.0, abs=1e-6)

    def test_value(self):
        loss = cross_entropy_loss(Tensor([[1.0, 2.0, 3.0]]), [0])
        assert loss.item() == pytest.approx(2.40761, abs=1e-4)

    def test_ignore_index(self):
        logits = Tensor([[1.0, 2.0, 3.0], [5.0, 0.0, 0.0]])
        loss = cross_entropy_loss(logits, [0, -100])
        assert loss.item() == pytest.approx(2.40761, abs=1e-4)

    def test_all_ignored_is_zero(self):
        loss = cross_entropy_loss(Tensor(np.zeros((2, 3))), [-100, -100])
        assert loss.item() == 0.0

    def test_target_out_of_range(self):
        with pytest.raises(VocabularyIndexError):
            cross_entropy_loss(Tensor(np.zeros((1, 3))), [3])


class TestBackward:
    def test_sum(self):
        x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        backward(x.sum())
        assert np.array_equal(x.grad, [1.0, 1.0, 1.0])

    def test_square(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        backward((x * x).sum())
        assert np.allclose(x.grad, [2.0, 4.0])

    def test_gradients_accumulate(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        backward(x.sum())
        backward(x.sum())
        assert np.array_equal(x.grad, [2.0, 2.0])

    def test_reused_tensor(self):
        x = Tensor([3.0], requires_grad=True)
        y = x * 2.0
        backward((y + y * x).sum())
        # d/dx (2x + 2x^2) = 2 + 4x
        assert np.allclose(x.grad, [14.0])

    def test_non_scalar_loss(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(GradientContractError):
            backward(x * 2.0)

    def test_loss_without_parameters(self):
        with pytest.raises(GradientContractError):
            backward(Tensor([1.0]).sum())

    def test_no_grad_records_nothing(self):
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            y = x * 2.0
        assert y.node is None and not y.requires_grad

    def test_cross_entropy_of_matmul(self, float64, rng):
        x = Tensor(rng.normal(size=(3, 4)))
        w = Tensor(rng.normal(size=(4, 5)))
        targets = [0, 4, 2]

        def loss(x, w):
            return cross_entropy_loss(matmul(x, w), targets)

        assert finite_diff_check(loss, [x, w]) <= 1e-4


class TestGradients:
    """Every differentiable operation agrees with central differences."""

    def test_sigmoid_sum(self, float64, rng):
        x = Tensor(rng.normal(size=(3, 4)))
        assert finite_diff_check(lambda x: elementwise(x, "sigmoid").sum(), [x]) <= 1e-6

    @pytest.mark.parametrize(
        "op",
        [
            lambda a, b: (a + b).sum(),
            lambda a, b: ((a - b) * (a - b)).sum(),
            lambda a, b: (a / (b * b + 1.0)).sum(),
            lambda a, b: matmul(a, b.T).mean(),
            lambda a, b: (softmax_rows(a) * b).sum(),
            lambda a, b: (elementwise(a, "relu") * b).sum(),
            lambda a, b: (a.reshape(4, 3).transpose(1, 0) * b).sum(),
        ],
    )
    def test_binary_ops(self, float64, rng, op):
        a = Tensor(rng.normal(size=(3, 4)) + 0.05)
        b = Tensor(rng.normal(size=(3, 4)))
        assert finite_diff_check(op, [a, b]) <= 1e-4

    def test_broadcasting(self, float64, rng):
        a = Tensor(rng.normal(size=(2, 3, 4)))
        b = Tensor(rng.normal(size=(4,)))
        assert finite_diff_check(lambda a, b: ((a * b) + b).sum(), [a, b]) <= 1e-4

    def test_layer_norm(self, float64, rng):
        x = Tensor(rng.normal(size=(3, 5)))
        gain = Tensor(rng.normal(size=5))
        bias = Tensor(rng.normal(size=5))
        weights = rng.normal(size=(3, 5))
        err = finite_diff_check(
            lambda x, g, b: (layer_norm(x, g, b) * weights).sum(), [x, gain, bias]
        )
        assert err <= 1e-4

    def test_embedding(self, float64, rng):
        weight = Tensor(rng.normal(size=(6, 3)))
        ids = np.array([[0, 5, 5], [2, 1, 0]])
        scale = rng.normal(size=(2, 3, 3))

        def loss(w):
            return (embedding(w, ids) * scale).sum()

        assert finite_diff_check(loss, [weight]) <= 1e-4

    def test_eps_out_of_range(self, float64):
        with pytest.raises(NumericDomainError):
            finite_diff_check(lambda x: x.sum(), [Tensor([1.0])], eps=1e-2)


def test_embedding_bad_id():
    with pytest.raises(VocabularyIndexError):
        embedding(Tensor(np.zeros((3, 2))), np.array([3]))
