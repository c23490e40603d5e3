"""
Tests for the Tensor Core
=========================

Covers the reverse-mode engine, the differentiable ops (conv3d,
conv3d_transpose, dense, batchnorm, activations), the layer containers, Adam
and the clipping helpers.

GRADIENT TESTING:
Every op is checked against central differences in 64-bit on inputs no
larger than 4^3 with grad_check.
"""

import numpy as np
import pytest

from volsr.core import (
    Block,
    BatchNorm,
    Conv3D,
    Conv3DTranspose,
    Dense,
    Parameter,
    Tensor,
    activation,
    adam_step,
    backward,
    batchnorm,
    clip_grad_norm,
    clip_weights,
    concat,
    conv3d,
    conv3d_transpose,
    grad_check,
    mse,
    runtime,
)
from volsr.core.ops import BatchNormState, same_padding
from volsr.errors import ConfigError, ContractViolationError, NumericError, ShapeError

GRAD_TOL = 1e-4


# =============================================================================
# Tensor engine
# =============================================================================

class TestTensor:
    """Graph construction and the backward sweep."""

    def test_reused_node_accumulates(self, float64):
        """A node used twice receives the sum of both gradient paths."""
        x = Tensor(np.array([1.5, -2.0, 3.0]), requires_grad=True)
        y = (x * x + x).sum()
        backward(y)
        np.testing.assert_allclose(x.grad, 2 * x.data + 1)

    def test_backward_requires_scalar(self, float64):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ContractViolationError):
            backward(x * 2.0)

    def test_non_finite_result_raises(self, float64):
        x = Tensor(np.array([1000.0]))
        with np.errstate(over='ignore'):
            with pytest.raises(NumericError):
                x.exp()

    def test_zero_extent_rejected(self):
        with pytest.raises(ShapeError):
            Tensor(np.zeros((0, 3)))

    def test_concat_splits_gradient(self, float64):
        a = Tensor(np.ones((2, 3)), requires_grad=True)
        b = Tensor(np.ones((2, 1)), requires_grad=True)
        out = concat([a, b], axis=-1)
        assert out.shape == (2, 4)
        weights = np.arange(8.0).reshape(2, 4)
        backward((out * weights).sum())
        np.testing.assert_array_equal(a.grad, weights[:, :3])
        np.testing.assert_array_equal(b.grad, weights[:, 3:])

    def test_mean_and_reshape_gradients(self, float64):
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        backward(x.reshape(3, 2).mean())
        np.testing.assert_allclose(x.grad, np.full((2, 3), 1 / 6))

    def test_division_by_tensor_unsupported(self, float64):
        x = Tensor(np.ones(2))
        with pytest.raises(ContractViolationError):
            x / x

    def test_dtype_follows_runtime(self):
        with runtime.using(dtype='float32'):
            assert Tensor([1.0, 2.0]).dtype == np.float32
        with runtime.using(dtype='float64'):
            assert Tensor([1.0, 2.0]).dtype == np.float64


# =============================================================================
# Convolutions
# =============================================================================

class TestSamePadding:
    """TF-style "same" padding."""

    @pytest.mark.parametrize("size,kernel,stride,expected", [
        (16, 3, 1, (1, 1, 16)),
        (16, 3, 2, (0, 1, 8)),
        (5, 3, 2, (1, 1, 3)),
        (4, 1, 1, (0, 0, 4)),
        (2, 3, 2, (0, 1, 1)),
    ])
    def test_padding_values(self, size, kernel, stride, expected):
        assert same_padding(size, kernel, stride) == expected


class TestConv3D:
    """Forward shapes, adjointness and gradients of the convolutions."""

    def test_output_shapes(self, float64, rng):
        x = Tensor(rng.standard_normal((2, 8, 8, 8, 3)))
        k = Tensor(rng.standard_normal((3, 3, 3, 3, 5)))
        assert conv3d(x, k, stride=1).shape == (2, 8, 8, 8, 5)
        assert conv3d(x, k, stride=2).shape == (2, 4, 4, 4, 5)
        kt = Tensor(rng.standard_normal((3, 3, 3, 4, 3)))
        assert conv3d_transpose(x, kt, stride=2).shape == (2, 16, 16, 16, 4)

    def test_identity_kernel(self, float64, rng):
        """A centred delta kernel reproduces the input."""
        x = Tensor(rng.standard_normal((1, 4, 4, 4, 2)))
        k = np.zeros((3, 3, 3, 2, 2))
        k[1, 1, 1] = np.eye(2)
        np.testing.assert_allclose(conv3d(x, Tensor(k)).data, x.data)

    def test_matches_direct_sum(self, float64, rng):
        """One output voxel equals the explicit padded window sum."""
        x = rng.standard_normal((1, 5, 5, 5, 2))
        k = rng.standard_normal((3, 3, 3, 2, 3))
        out = conv3d(Tensor(x), Tensor(k)).data
        xp = np.pad(x, [(0, 0), (1, 1), (1, 1), (1, 1), (0, 0)])
        d, h, w = 2, 0, 4
        expected = np.einsum('ijlc,ijlco->o', xp[0, d:d + 3, h:h + 3, w:w + 3], k)
        np.testing.assert_allclose(out[0, d, h, w], expected, rtol=1e-12)

    @pytest.mark.parametrize("stride,extent", [(1, 4), (2, 4), (1, 3)])
    def test_transpose_is_adjoint(self, float64, rng, stride, extent):
        """<conv3d(x), y> == <x, conv3d_transpose(y)> with the same kernel."""
        x = rng.standard_normal((2, extent, extent, extent, 3))
        k = rng.standard_normal((3, 3, 3, 3, 4))
        y_shape = conv3d(Tensor(x), Tensor(k), stride=stride).shape
        y = rng.standard_normal(y_shape)
        lhs = np.sum(conv3d(Tensor(x), Tensor(k), stride=stride).data * y)
        rhs = np.sum(x * conv3d_transpose(Tensor(y), Tensor(k), stride=stride).data)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_channel_mismatch(self, float64, rng):
        x = Tensor(rng.standard_normal((1, 4, 4, 4, 2)))
        with pytest.raises(ShapeError):
            conv3d(x, Tensor(rng.standard_normal((3, 3, 3, 3, 1))))

    def test_even_kernel_rejected(self, float64, rng):
        x = Tensor(rng.standard_normal((1, 4, 4, 4, 1)))
        with pytest.raises(ContractViolationError):
            conv3d(x, Tensor(rng.standard_normal((2, 2, 2, 1, 1))))

    def test_non_finite_input(self, float64):
        data = np.zeros((1, 2, 2, 2, 1))
        data[0, 0, 0, 0, 0] = np.nan
        with pytest.raises(NumericError):
            conv3d(Tensor(data), Tensor(np.ones((1, 1, 1, 1, 1))))

    @pytest.mark.parametrize("stride", [1, 2])
    def test_conv3d_gradients(self, float64, rng, stride):
        layer = Conv3D('conv', 2, 3, 3, stride, rng=rng)
        x = rng.standard_normal((2, 4, 4, 4, 2))
        assert grad_check(layer, x, layer.parameters()) < GRAD_TOL

    @pytest.mark.parametrize("stride", [1, 2])
    def test_conv3d_transpose_gradients(self, float64, rng, stride):
        layer = Conv3DTranspose('deconv', 2, 3, 3, stride, rng=rng)
        x = rng.standard_normal((2, 2, 2, 2, 2))
        assert grad_check(layer, x, layer.parameters()) < GRAD_TOL


# =============================================================================
# Dense, batch normalization, activations
# =============================================================================

class TestDense:

    def test_affine(self, float64):
        layer = Dense('d', 2, 2)
        layer.weight.assign(np.array([[1.0, 2.0], [3.0, 4.0]]))
        layer.bias.assign(np.array([0.5, -0.5]))
        np.testing.assert_allclose(layer(Tensor(np.array([[1.0, 1.0]]))).data, [[4.5, 5.5]])

    def test_gradients(self, float64, rng):
        layer = Dense('dense', 6, 4, rng=rng)
        x = rng.standard_normal((3, 6))
        assert grad_check(layer, x, layer.parameters()) < GRAD_TOL


class TestBatchNorm:
    """Batch normalization in train and infer mode."""

    def test_train_normalizes(self, float64, rng):
        state = BatchNormState.create(3, dtype=np.float64)
        x = Tensor(rng.standard_normal((4, 2, 2, 2, 3)) * 5 + 2)
        out = batchnorm(x, state).data
        np.testing.assert_allclose(out.mean(axis=(0, 1, 2, 3)), 0.0, atol=1e-10)
        np.testing.assert_allclose(out.var(axis=(0, 1, 2, 3)), 1.0, rtol=1e-3)

    def test_running_statistics(self, float64, rng):
        state = BatchNormState.create(2, momentum=0.9, dtype=np.float64)
        data = rng.standard_normal((8, 2)) + np.array([3.0, -1.0])
        batchnorm(Tensor(data), state)
        np.testing.assert_allclose(state.running_mean, 0.1 * data.mean(axis=0))
        np.testing.assert_allclose(state.running_var, 0.9 + 0.1 * data.var(axis=0))

    def test_constant_channel_outputs_beta(self, float64):
        state = BatchNormState.create(2, dtype=np.float64)
        state.beta.assign(np.array([0.25, -0.75]))
        data = np.stack([np.full(6, 3.0), np.arange(6.0)], axis=-1)
        out = batchnorm(Tensor(data), state).data
        np.testing.assert_array_equal(out[:, 0], 0.25)
        assert np.all(np.isfinite(out))

    def test_infer_uses_running_statistics(self, float64):
        state = BatchNormState.create(1, dtype=np.float64)
        state.running_mean = np.array([2.0])
        state.running_var = np.array([4.0])
        state.mode = 'infer'
        out = batchnorm(Tensor(np.array([[4.0]])), state).data
        np.testing.assert_allclose(out, [[2.0 / np.sqrt(4.0 + 1e-5)]])

    def test_invalid_momentum(self):
        with pytest.raises(ContractViolationError):
            BatchNormState.create(2, momentum=1.0)

    @pytest.mark.parametrize("mode", ['train', 'infer'])
    def test_gradients(self, float64, rng, mode):
        layer = BatchNorm('bn', 2)
        layer.state.gamma.assign(rng.uniform(0.5, 1.5, 2))
        layer.state.beta.assign(rng.standard_normal(2))
        layer.state.running_var = np.array([0.7, 1.3])
        layer.set_mode(mode)
        x = rng.standard_normal((3, 2, 2, 2, 2))
        assert grad_check(layer, x, layer.parameters()) < GRAD_TOL


class TestActivations:

    def test_values(self, float64):
        x = Tensor(np.array([-2.0, 0.5]))
        np.testing.assert_allclose(activation(x, 'relu').data, [0.0, 0.5])
        np.testing.assert_allclose(activation(x, 'leaky_relu', 0.2).data, [-0.4, 0.5])
        np.testing.assert_allclose(activation(x, 'tanh').data, np.tanh([-2.0, 0.5]))
        np.testing.assert_allclose(activation(x, 'sigmoid').data, 1 / (1 + np.exp([2.0, -0.5])))
        assert activation(x, 'linear') is x

    def test_sigmoid_saturates_without_overflow(self, float64):
        out = activation(Tensor(np.array([-800.0, 800.0])), 'sigmoid').data
        np.testing.assert_allclose(out, [0.0, 1.0])

    def test_unknown(self, float64):
        with pytest.raises(ContractViolationError):
            activation(Tensor(np.ones(1)), 'softplus')

    @pytest.mark.parametrize("kind", ['relu', 'leaky_relu', 'tanh', 'sigmoid'])
    def test_gradients(self, float64, kind):
        x = np.random.default_rng(5).uniform(0.1, 2.0, (2, 3, 3)) * np.array([1, -1, 1])
        assert grad_check(lambda t: activation(t, kind), x) < GRAD_TOL

    def test_mse_gradient(self, float64, rng):
        target = Tensor(rng.standard_normal((2, 3)))
        assert grad_check(lambda t: mse(t, target), rng.standard_normal((2, 3))) < GRAD_TOL


# =============================================================================
# Layers
# =============================================================================

class TestLayers:
    """Hierarchical naming and mode switching."""

    def test_block_names(self, float64, rng):
        block = Block('enc1', Conv3D('conv', 1, 4, rng=rng), 4)
        names = [name for name, _ in block.named_parameters()]
        assert names == ['enc1.main.kernel', 'enc1.main.bias', 'enc1.bn.gamma', 'enc1.bn.beta']
        assert [name for name, _ in block.named_batchnorm()] == ['enc1.bn.state']

    def test_block_without_bn(self, float64, rng):
        block = Block('c1', Conv3D('conv', 1, 2, rng=rng), 2, use_bn=False, act='leaky_relu')
        assert len(block.parameters()) == 2

    def test_set_mode_propagates(self, float64, rng):
        block = Block('b', Dense('d', 3, 2, rng=rng), 2)
        block.set_mode('infer')
        assert block.bn.state.mode == 'infer'
        with pytest.raises(ContractViolationError):
            block.set_mode('eval')

    def test_block_gradients(self, float64, rng):
        block = Block('b', Conv3D('conv', 1, 2, 3, 2, rng=rng), 2, act='leaky_relu')
        x = rng.standard_normal((3, 4, 4, 4, 1))
        assert grad_check(block, x, block.parameters()) < GRAD_TOL

    def test_status(self, float64, rng):
        status = Dense('d', 3, 2, rng=rng).get_status()
        assert status == {'name': 'd', 'mode': 'train', 'parameters': 8}


# =============================================================================
# Optimizer and clipping
# =============================================================================

class TestOptim:

    def test_adam_first_step(self, float64):
        p = Parameter(np.array([1.0, -1.0]), name='p')
        p.grad = np.array([0.5, -2.0])
        adam_step([p], lr=0.1)
        np.testing.assert_allclose(p.data, [0.9, -0.9], atol=1e-6)
        assert p.step == 1
        np.testing.assert_array_equal(p.grad, 0.0)

    def test_adam_rejects_non_finite_gradient(self, float64):
        p = Parameter(np.zeros(2), name='p')
        p.grad = np.array([np.inf, 0.0])
        with pytest.raises(NumericError):
            adam_step([p], lr=0.1)

    def test_adam_rejects_bad_lr(self, float64):
        with pytest.raises(ContractViolationError):
            adam_step([Parameter(np.zeros(1))], lr=0.0)

    def test_clip_weights(self, float64, rng):
        params = [Parameter(rng.standard_normal((4, 4))), Parameter(rng.standard_normal(3))]
        clip_weights(params, 0.01)
        assert max(np.abs(p.data).max() for p in params) <= 0.01

    def test_clip_grad_norm(self, float64):
        p = Parameter(np.zeros(2))
        p.grad = np.array([3.0, 4.0])
        assert clip_grad_norm([p], 1.0) == pytest.approx(5.0)
        np.testing.assert_allclose(p.grad, [0.6, 0.8])


# =============================================================================
# Runtime switches
# =============================================================================

class TestRuntime:

    def test_using_restores(self):
        before = (runtime.default_dtype(), runtime.strict_deterministic(), runtime.num_threads())
        with runtime.using(dtype='float64', strict=True, threads=3):
            assert runtime.default_dtype() is np.float64
            assert runtime.strict_deterministic()
        assert (runtime.default_dtype(), runtime.strict_deterministic(), runtime.num_threads()) == before

    def test_ordered_map_keeps_order(self):
        with runtime.using(threads=4):
            assert runtime.ordered_map(lambda v: v * v, range(20)) == [v * v for v in range(20)]

    def test_bad_settings(self):
        with pytest.raises(ConfigError):
            runtime.set_num_threads(0)
        with pytest.raises(ConfigError):
            runtime.resolve_dtype('float16')
