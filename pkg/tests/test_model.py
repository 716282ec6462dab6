"""Model assembly tests: shape algebra, parameter accounting, initialization
statistics, batching behavior, and the full-stack gradient check."""

import numpy as np
import numpy.testing as npt
import pytest

from vibfault.errors import NonFiniteActivation, ShapeMismatch, ShapeUnderflow
from vibfault.model import ModelConfig, build_model, init_params

from gradcheck import assert_grad_close, finite_difference

TOY = ModelConfig(window_len=40, class_count=3, conv1_filters=4,
                  conv1_kernel=8, conv2_filters=3, conv2_kernel=5,
                  pool_size=2, pool_stride=2, dense_hidden=10)


def closed_form_param_count(cfg):
    """Independent parameter count from the layer dimensions."""
    conv1 = cfg.conv1_filters * (1 * cfg.conv1_kernel) + cfg.conv1_filters
    conv2 = cfg.conv2_filters * (cfg.conv1_filters * cfg.conv2_kernel) \
        + cfg.conv2_filters
    t2 = cfg.window_len - cfg.conv1_kernel - cfg.conv2_kernel + 2
    pooled = (t2 - cfg.pool_size) // cfg.pool_stride + 1
    flat = cfg.conv2_filters * pooled
    dense1 = cfg.dense_hidden * flat + cfg.dense_hidden
    dense2 = cfg.class_count * cfg.dense_hidden + cfg.class_count
    return conv1 + conv2 + dense1 + dense2


class TestShapes:
    @pytest.mark.parametrize("window,conv1,conv2,pooled", [
        (500, 401, 352, 88),
        (1200, 1101, 1052, 263),
        (2048, 1949, 1900, 475),
    ])
    def test_shape_algebra(self, window, conv1, conv2, pooled):
        cfg = ModelConfig(window_len=window, class_count=14)
        assert window - cfg.conv1_kernel + 1 == conv1
        assert cfg.conv2_out_len == conv2
        assert cfg.pool_out_len == pooled
        assert cfg.flatten_dim == 32 * pooled

    def test_flatten_dim_500(self):
        assert ModelConfig(window_len=500, class_count=14).flatten_dim == 2816

    def test_flatten_dim_1200(self):
        assert ModelConfig(window_len=1200, class_count=16).flatten_dim == 8416

    def test_underflow(self):
        with pytest.raises(ShapeUnderflow):
            build_model(ModelConfig(window_len=150, class_count=3))

    def test_smallest_valid_window(self):
        # conv2 output = W - 148; pooling needs 4 samples -> W >= 152
        build_model(ModelConfig(window_len=152, class_count=3))
        with pytest.raises(ShapeUnderflow):
            build_model(ModelConfig(window_len=151, class_count=3))


class TestParameterCount:
    def test_reference_configuration(self):
        model = build_model(ModelConfig(window_len=500, class_count=14))
        assert model.param_count == 392_010
        assert model.param_count < 500_000

    def test_layer_breakdown(self):
        model = build_model(ModelConfig(window_len=500, class_count=14))
        sizes = {
            "conv1": model.conv1.w.size + model.conv1.b.size,
            "conv2": model.conv2.w.size + model.conv2.b.size,
            "dense1": model.dense1.w.size + model.dense1.b.size,
            "dense2": model.dense2.w.size + model.dense2.b.size,
        }
        assert sizes == {"conv1": 6_464, "conv2": 102_432,
                         "dense1": 281_700, "dense2": 1_414}

    def test_pure_function_of_window_and_classes(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            window = int(rng.integers(160, 900))
            classes = int(rng.integers(2, 20))
            cfg = ModelConfig(window_len=window, class_count=classes)
            assert build_model(cfg).param_count == closed_form_param_count(cfg)


class TestInit:
    def test_seed_reproducibility(self):
        a = init_params(build_model(TOY), seed=3)
        b = init_params(build_model(TOY), seed=3)
        for pa, pb in zip(a.parameters(), b.parameters()):
            npt.assert_array_equal(pa, pb)
        c = init_params(build_model(TOY), seed=4)
        assert any(not np.array_equal(pa, pc)
                   for pa, pc in zip(a.parameters(), c.parameters()))

    def test_conv1_weight_std(self):
        model = init_params(
            build_model(ModelConfig(window_len=500, class_count=14)), seed=0)
        std = model.conv1.w.std()
        expected = np.sqrt(2.0 / 100.0)
        assert abs(std - expected) / expected < 0.10

    def test_biases_zero(self):
        model = init_params(build_model(TOY), seed=9)
        for layer in (model.conv1, model.conv2, model.dense1, model.dense2):
            assert not layer.b.any()


class TestForward:
    def test_zero_weights_uniform_loss(self):
        model = build_model(ModelConfig(window_len=500, class_count=14))
        x = np.random.default_rng(0).standard_normal((3, 500)).astype(np.float32)
        logits = model.forward(x)
        npt.assert_array_equal(logits, np.zeros((3, 14)))
        loss, _ = model.loss(logits, np.array([0, 5, 13]))
        npt.assert_allclose(loss, np.log(14.0), rtol=1e-6)

    def test_single_example_matches_batch(self):
        model = init_params(
            build_model(ModelConfig(window_len=500, class_count=6)), seed=1)
        x = np.random.default_rng(2).standard_normal((8, 500)).astype(np.float32)
        batch_logits = model.forward(x)
        for i in range(8):
            single = model.forward(x[i:i + 1])
            npt.assert_allclose(single[0], batch_logits[i], atol=1e-5)

    def test_batch_width_must_match(self):
        model = build_model(ModelConfig(window_len=500, class_count=4))
        with pytest.raises(ShapeMismatch):
            model.forward(np.zeros((2, 400), dtype=np.float32))

    def test_nonfinite_weights_detected(self):
        model = init_params(build_model(TOY), seed=0)
        model.dense2.w[0, 0] = np.nan
        with pytest.raises(NonFiniteActivation):
            model.forward(np.ones((1, 40), dtype=np.float32))

    def test_features_are_hidden_relu_output(self):
        model = init_params(build_model(TOY), seed=5)
        x = np.random.default_rng(3).standard_normal((4, 40)).astype(np.float32)
        feats = model.forward_features(x)
        assert feats.shape == (4, 10)
        assert (feats >= 0).all()
        # final dense on the features reproduces the logits
        logits = feats @ model.dense2.w.T + model.dense2.b
        npt.assert_allclose(logits, model.forward(x), atol=1e-5)


class TestFullStackGradients:
    @pytest.mark.parametrize("seed", range(5))
    def test_all_parameter_gradients(self, seed):
        rng = np.random.default_rng(seed)
        model = init_params(build_model(TOY, dtype=np.float64), seed=seed)
        x = rng.standard_normal((3, 40))
        labels = rng.integers(0, 3, size=3)

        def loss():
            return model.loss(model.forward(x), labels)[0]

        logits = model.forward(x, training=True)
        _, probs = model.loss(logits, labels)
        model.backward(model.loss_backward(probs, labels))
        for name, param, grad in zip(model.param_names(), model.parameters(),
                                     model.gradients()):
            numeric = finite_difference(loss, param)
            assert_grad_close(grad, numeric, f"seed {seed}: {name}")
