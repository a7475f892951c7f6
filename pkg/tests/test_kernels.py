"""Backend parity between the compiled kernels and the array fallback."""

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from cwrank import kernels
from cwrank.kernels import _pyref

try:
    from cwrank.kernels import _ckernels
except ImportError:  # pragma: no cover - build without the extension
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def random_case(rng, batch, length, dim, n_filters, width):
    emb = rng.normal(size=(batch, length, dim))
    filters = rng.normal(size=(n_filters, width, dim))
    bias = rng.normal(size=n_filters)
    return emb, filters, bias


def random_routes(rng, batch, length, width, n_filters, n_routes):
    b = rng.integers(0, batch, size=n_routes)
    p = rng.integers(0, length - width + 1, size=n_routes)
    f = rng.integers(0, n_filters, size=n_routes)
    g = rng.normal(size=n_routes)
    return b, p, f, g


class TestReferenceForward:
    def test_hand_oracle(self):
        # one channel, kernel [1, 1] over [1, 2, 3] -> [3, 5]
        emb = np.array([[[1.0], [2.0], [3.0]]])
        filters = np.array([[[1.0], [1.0]]])
        bias = np.zeros(1)
        out = _pyref.conv1d_forward(emb, filters, bias)
        assert out.shape == (1, 2, 1)
        assert out[0, :, 0].tolist() == [3.0, 5.0]

    def test_bias_added(self):
        emb = np.zeros((1, 3, 1))
        filters = np.zeros((2, 2, 1))
        bias = np.array([0.5, -1.0])
        out = _pyref.conv1d_forward(emb, filters, bias)
        assert out[0, 0].tolist() == [0.5, -1.0]

    def test_width_equals_length(self):
        rng = np.random.default_rng(0)
        emb, filters, bias = random_case(rng, 2, 4, 3, 2, 4)
        out = _pyref.conv1d_forward(emb, filters, bias)
        assert out.shape == (2, 1, 2)

    def test_backward_empty_routes(self):
        rng = np.random.default_rng(0)
        emb, filters, _ = random_case(rng, 2, 5, 3, 2, 2)
        empty = np.zeros(0, dtype=np.int64)
        dfilters, demb = _pyref.conv1d_backward(
            emb, filters, empty, empty, empty, np.zeros(0)
        )
        assert not dfilters.any()
        assert not demb.any()

    def test_backward_single_route_oracle(self):
        emb = np.arange(6.0).reshape(1, 3, 2)
        filters = np.array([[[10.0, 20.0], [30.0, 40.0]]])
        b = np.array([0], dtype=np.int64)
        p = np.array([1], dtype=np.int64)
        f = np.array([0], dtype=np.int64)
        g = np.array([2.0])
        dfilters, demb = _pyref.conv1d_backward(emb, filters, b, p, f, g)
        np.testing.assert_array_equal(dfilters[0], 2.0 * emb[0, 1:3, :])
        np.testing.assert_array_equal(demb[0, 1:3, :], 2.0 * filters[0])
        assert not demb[0, 0].any()


@needs_ext
class TestBackendParity:
    @pytest.mark.parametrize(
        "batch,length,dim,n_filters,width",
        [(1, 2, 1, 1, 2), (3, 9, 4, 5, 2), (10, 40, 16, 32, 7), (2, 5, 8, 3, 5)],
    )
    def test_forward_matches(self, batch, length, dim, n_filters, width):
        rng = np.random.default_rng(batch * 100 + width)
        emb, filters, bias = random_case(rng, batch, length, dim, n_filters, width)
        ref = _pyref.conv1d_forward(emb, filters, bias)
        ext = _ckernels.conv1d_forward(emb, filters, bias)
        np.testing.assert_allclose(ext, ref, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize(
        "batch,length,dim,n_filters,width,n_routes",
        [(3, 9, 4, 5, 2, 7), (10, 40, 16, 32, 7, 64), (2, 5, 8, 3, 5, 1)],
    )
    def test_backward_matches(self, batch, length, dim, n_filters, width, n_routes):
        rng = np.random.default_rng(batch * 100 + width)
        emb, filters, _ = random_case(rng, batch, length, dim, n_filters, width)
        b, p, f, g = random_routes(rng, batch, length, width, n_filters, n_routes)
        ref_df, ref_de = _pyref.conv1d_backward(emb, filters, b, p, f, g)
        ext_df, ext_de = _ckernels.conv1d_backward(emb, filters, b, p, f, g)
        np.testing.assert_allclose(ext_df, ref_df, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(ext_de, ref_de, rtol=1e-12, atol=1e-12)

    def test_non_contiguous_inputs_accepted(self):
        rng = np.random.default_rng(1)
        emb = rng.normal(size=(4, 6, 3))[::2]
        filters = rng.normal(size=(2, 2, 3))
        bias = np.zeros(2)
        ref = _pyref.conv1d_forward(np.ascontiguousarray(emb), filters, bias)
        ext = _ckernels.conv1d_forward(emb, filters, bias)
        np.testing.assert_allclose(ext, ref, rtol=1e-12, atol=1e-12)


class TestBackendSelection:
    def test_backend_reported(self):
        assert kernels.BACKEND in ("cython", "numpy")

    def test_active_backend_is_extension_when_built(self):
        if _ckernels is not None and os.environ.get("CWRANK_FORCE_NUMPY") != "1":
            assert kernels.BACKEND == "cython"
            # only the backward is rebound; the forward stays on the
            # BLAS-backed path, which benchmarks faster at every shape
            assert kernels.conv1d_backward is _ckernels.conv1d_backward
            assert kernels.conv1d_forward is _pyref.conv1d_forward

    def test_force_numpy_env(self):
        code = (
            "import os; os.environ['CWRANK_FORCE_NUMPY'] = '1'; "
            "from cwrank import kernels; print(kernels.BACKEND)"
        )
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, check=True
        )
        assert out.stdout.strip() == "numpy"
