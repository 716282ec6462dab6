"""Backend kernel tests: hand-checked values, brute-force oracles, and
agreement between the compiled and NumPy implementations."""

import numpy as np
import numpy.testing as npt
import pytest

from vibfault.kernels import BACKEND, _numpy_core

try:
    from vibfault.kernels import _compiled
except ImportError:
    _compiled = None

BACKENDS = [("numpy", _numpy_core)]
if _compiled is not None:
    BACKENDS.append(("compiled", _compiled))


def brute_conv_forward(x, w, b):
    n_batch, in_ch, length = x.shape
    out_ch, _, k = w.shape
    t_len = length - k + 1
    y = np.zeros((n_batch, out_ch, t_len), dtype=x.dtype)
    for n in range(n_batch):
        for o in range(out_ch):
            for t in range(t_len):
                acc = b[o]
                for c in range(in_ch):
                    for j in range(k):
                        acc += x[n, c, t + j] * w[o, c, j]
                y[n, o, t] = acc
    return y


def brute_conv_backward(x, w, dy):
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    db = np.zeros(w.shape[0], dtype=x.dtype)
    n_batch, out_ch, t_len = dy.shape
    in_ch, k = w.shape[1], w.shape[2]
    for n in range(n_batch):
        for o in range(out_ch):
            for t in range(t_len):
                g = dy[n, o, t]
                db[o] += g
                for c in range(in_ch):
                    for j in range(k):
                        dx[n, c, t + j] += g * w[o, c, j]
                        dw[o, c, j] += g * x[n, c, t + j]
    return dx, dw, db


@pytest.mark.parametrize("name,impl", BACKENDS)
class TestConvKernels:
    def test_scaling_kernel(self, name, impl):
        x = np.array([[[1.0, 2.0, 3.0]]])
        w = np.array([[[2.0]]])
        y = impl.conv1d_forward(x, w, np.zeros(1))
        npt.assert_allclose(y, [[[2.0, 4.0, 6.0]]])

    def test_box_kernel(self, name, impl):
        x = np.array([[[1.0, 2.0, 3.0, 4.0]]])
        w = np.array([[[1.0, 1.0]]])
        y = impl.conv1d_forward(x, w, np.zeros(1))
        npt.assert_allclose(y, [[[3.0, 5.0, 7.0]]])

    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_forward_matches_brute_force(self, name, impl, dtype):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 2, 15)).astype(dtype)
        w = rng.standard_normal((4, 2, 5)).astype(dtype)
        b = rng.standard_normal(4).astype(dtype)
        tol = 1e-5 if dtype == np.float32 else 1e-12
        npt.assert_allclose(impl.conv1d_forward(x, w, b),
                            brute_conv_forward(x, w, b), rtol=tol, atol=tol)

    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_backward_matches_brute_force(self, name, impl, dtype):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((2, 3, 12)).astype(dtype)
        w = rng.standard_normal((4, 3, 5)).astype(dtype)
        dy = rng.standard_normal((2, 4, 8)).astype(dtype)
        tol = 1e-4 if dtype == np.float32 else 1e-12
        got = impl.conv1d_backward(x, w, dy)
        want = brute_conv_backward(x, w, dy)
        for g, e in zip(got, want):
            npt.assert_allclose(g, e, rtol=tol, atol=tol)


@pytest.mark.parametrize("name,impl", BACKENDS)
class TestPoolKernels:
    def test_known_windows(self, name, impl):
        x = np.array([[[1.0, 3.0, 2.0, 0.0, 5.0, 4.0, 4.0, 4.0]]])
        y, argmax = impl.maxpool1d_forward(x, 4, 4)
        npt.assert_allclose(y, [[[3.0, 5.0]]])
        npt.assert_array_equal(argmax, [[[1, 4]]])

    def test_length_51_drops_remainder(self, name, impl):
        x = np.arange(51.0)[None, None, :]
        y, _ = impl.maxpool1d_forward(x, 4, 4)
        assert y.shape == (1, 1, 12)

    def test_ties_take_lowest_index(self, name, impl):
        x = np.array([[[2.0, 2.0, 1.0, 1.0]]])
        _, argmax = impl.maxpool1d_forward(x, 4, 4)
        npt.assert_array_equal(argmax, [[[0]]])

    def test_backward_routes_to_argmax(self, name, impl):
        x = np.array([[[1.0, 3.0, 2.0, 0.0, 5.0, 4.0, 4.0, 4.0]]])
        _, argmax = impl.maxpool1d_forward(x, 4, 4)
        dy = np.array([[[1.0, 1.0]]])
        dx = impl.maxpool1d_backward(dy, argmax, 8)
        npt.assert_allclose(dx, [[[0, 1, 0, 0, 1, 0, 0, 0]]])


@pytest.mark.skipif(_compiled is None, reason="compiled backend unavailable")
class TestBackendAgreement:
    @pytest.mark.parametrize("dtype,tol", [(np.float32, 1e-4), (np.float64, 1e-10)])
    def test_conv_agreement(self, dtype, tol):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((4, 8, 64)).astype(dtype)
        w = rng.standard_normal((6, 8, 17)).astype(dtype)
        b = rng.standard_normal(6).astype(dtype)
        dy = rng.standard_normal((4, 6, 48)).astype(dtype)
        npt.assert_allclose(_compiled.conv1d_forward(x, w, b),
                            _numpy_core.conv1d_forward(x, w, b),
                            rtol=tol, atol=tol)
        for g_c, g_n in zip(_compiled.conv1d_backward(x, w, dy),
                            _numpy_core.conv1d_backward(x, w, dy)):
            npt.assert_allclose(g_c, g_n, rtol=tol, atol=tol)

    def test_pool_agreement(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((3, 5, 41)).astype(np.float32)
        y_c, a_c = _compiled.maxpool1d_forward(x, 4, 4)
        y_n, a_n = _numpy_core.maxpool1d_forward(x, 4, 4)
        npt.assert_array_equal(y_c, y_n)
        npt.assert_array_equal(a_c, a_n)
        dy = rng.standard_normal(y_c.shape).astype(np.float32)
        npt.assert_array_equal(_compiled.maxpool1d_backward(dy, a_c, 41),
                               _numpy_core.maxpool1d_backward(dy, a_n, 41))


def test_selected_backend_is_exported():
    assert BACKEND in ("numpy", "compiled")
