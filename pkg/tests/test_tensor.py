import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import check_grads
from hsln.errors import ContractError, DimensionError, NumericalDomainError
from hsln.tensor import (Tensor, backward, concat, exp, getitem, log, log_softmax, logsumexp,
                         masked_fill, matmul, mean, no_grad, reference_mode, reshape, sigmoid,
                         softmax, stack, tanh, tmax, transpose, tsum)


class TestFiniteDifferences:
    def test_elementwise_chain(self, rng):
        check_grads(lambda a, b: tsum(tanh(a * b + a) * sigmoid(b - a)),
                    rng.normal(size=(3, 4)), rng.normal(size=(3, 4)))

    def test_bias_broadcast(self, rng):
        check_grads(lambda x, b: tsum(tanh(x + b)), rng.normal(size=(2, 3, 4)), rng.normal(size=4))

    def test_singleton_broadcast(self, rng):
        check_grads(lambda x, m: tsum(x * m), rng.normal(size=(2, 3, 4)), rng.normal(size=(2, 3, 1)))

    def test_matmul_2d(self, rng):
        check_grads(lambda a, b: tsum(tanh(matmul(a, b))), rng.normal(size=(3, 5)), rng.normal(size=(5, 2)))

    def test_matmul_batch_against_matrix(self, rng):
        check_grads(lambda a, b: tsum(matmul(a, b) * matmul(a, b)),
                    rng.normal(size=(2, 3, 4)), rng.normal(size=(4, 2)))

    def test_matmul_equal_batches(self, rng):
        check_grads(lambda a, b: tsum(tanh(matmul(a, b))), rng.normal(size=(2, 3, 4)), rng.normal(size=(2, 4, 5)))

    def test_exp_log(self, rng):
        check_grads(lambda x: tsum(log(exp(x) + 1.0)), rng.normal(size=6))

    def test_softmax_and_logsumexp(self, rng):
        w = rng.normal(size=(3, 5))
        check_grads(lambda x: tsum(softmax(x, axis=-1) * Tensor(w)), rng.normal(size=(3, 5)))
        check_grads(lambda x: tsum(logsumexp(x, axis=0)), rng.normal(size=(3, 5)))
        check_grads(lambda x: tsum(log_softmax(x, axis=1) * Tensor(w)), rng.normal(size=(3, 5)))

    def test_max_mean_reshape_transpose(self, rng):
        check_grads(lambda x: tsum(tmax(x, axis=1)) + mean(transpose(reshape(x, (4, 3)))),
                    rng.normal(size=(2, 6)))

    def test_indexing_concat_stack(self, rng):
        idx = np.array([[0, 2, 2], [1, 0, 2]])
        check_grads(lambda x, y: tsum(tanh(getitem(concat([x, y], axis=0), idx))),
                    rng.normal(size=(2, 4)), rng.normal(size=(1, 4)))
        check_grads(lambda x, y: tsum(stack([x, y * x], axis=1)), rng.normal(size=3), rng.normal(size=3))

    def test_masked_fill_blocks_gradient(self):
        x = Tensor(np.arange(4.0), requires_grad=True)
        backward(tsum(masked_fill(x, np.array([True, False, False, True]), 0.0) * 3.0))
        np.testing.assert_array_equal(x.grad, [0, 3, 3, 0])


class TestSoftmax:
    def test_equal_entries(self):
        np.testing.assert_allclose(softmax(Tensor([1.0, 1.0, 1.0, 1.0])).data, 0.25, rtol=1e-6)

    def test_large_inputs_are_stable(self):
        out = softmax(Tensor([1000.0, 1000.0])).data
        np.testing.assert_allclose(out, [0.5, 0.5])
        out = softmax(Tensor([1000.0, 0.0])).data
        assert np.all(np.isfinite(out)) and out[0] == pytest.approx(1.0)

    def test_masked_entries_get_zero_weight(self):
        out = softmax(Tensor([2.0, -np.inf, 0.5])).data
        assert out[1] == 0.0
        assert out.sum() == pytest.approx(1.0, abs=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (4, 6), elements=st.floats(-50, 50)))
    def test_rows_sum_to_one(self, x):
        out = softmax(Tensor(x), axis=-1).data
        np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-6)
        assert np.all(out >= 0)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 5, elements=st.floats(-20, 20)), st.floats(-100, 100))
    def test_shift_invariance(self, x, c):
        np.testing.assert_allclose(softmax(Tensor(x)).data, softmax(Tensor(x + c)).data, atol=1e-6)


class TestBackward:
    def test_shared_subexpression_accumulates(self):
        x = Tensor(3.0, requires_grad=True)
        y = x * x
        backward(y + y)
        assert x.grad == pytest.approx(12.0)

    def test_leaf_grads_accumulate_across_calls(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        backward(tsum(x * 2.0))
        backward(tsum(x * 2.0))
        np.testing.assert_array_equal(x.grad, [4.0, 4.0])

    def test_non_scalar_loss_rejected(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ContractError):
            backward(x * 2.0)

    def test_disconnected_loss_rejected(self):
        with pytest.raises(ContractError):
            backward(tsum(Tensor([1.0, 2.0])))

    def test_no_grad_records_nothing(self):
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            y = tsum(x * 2.0)
        assert not y.requires_grad

    def test_constants_receive_no_gradient(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        c = Tensor([5.0, 6.0])
        backward(tsum(x * c))
        assert c.grad is None
        np.testing.assert_array_equal(x.grad, [5.0, 6.0])

    def test_deterministic(self, rng):
        a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
        grads = []
        for _ in range(2):
            ta, tb = Tensor(a, requires_grad=True), Tensor(b, requires_grad=True)
            backward(tsum(tanh(matmul(ta, tb))))
            grads.append((ta.grad.copy(), tb.grad.copy()))
        np.testing.assert_array_equal(grads[0][0], grads[1][0])
        np.testing.assert_array_equal(grads[0][1], grads[1][1])


class TestDtypes:
    def test_float32_default(self):
        assert Tensor([1.0, 2.0]).dtype == np.float32

    def test_reference_mode(self):
        with reference_mode():
            assert Tensor([1.0]).dtype == np.float64
        assert Tensor([1.0]).dtype == np.float32


class TestErrors:
    def test_incompatible_shapes(self):
        with pytest.raises(DimensionError):
            Tensor(np.ones((2, 3))) + Tensor(np.ones((3, 2)))

    def test_leading_broadcast_not_allowed(self):
        with pytest.raises(DimensionError):
            Tensor(np.ones((2, 3))) + Tensor(np.ones((2, 1, 3)))

    def test_matmul_inner_mismatch(self):
        with pytest.raises(DimensionError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_exp_overflow(self):
        with pytest.raises(NumericalDomainError):
            exp(Tensor([1e4]))

    def test_log_non_positive(self):
        with pytest.raises(NumericalDomainError):
            log(Tensor([1.0, 0.0]))
        with pytest.raises(NumericalDomainError):
            log(Tensor([-1.0]))
