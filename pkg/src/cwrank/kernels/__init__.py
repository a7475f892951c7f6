"""Hot numeric kernels with a compiled core and a NumPy fallback.

Both backends implement the same two functions:

conv1d_forward(emb, filters, bias)
    emb (B, L, D) float64, filters (F, W, D), bias (F) ->
    activations (B, L-W+1, F): valid convolution, stride 1, plus bias.

conv1d_backward(emb, filters, b_idx, p_idx, f_idx, gvals)
    Pooled-route gradients: route r says filter f_idx[r] pooled its max
    from window position p_idx[r] of batch row b_idx[r] and receives
    upstream gradient gvals[r]. Returns (dfilters, demb).

The compiled extension is bound only where it measures faster
(benchmarks/bench_kernels.py): the backward's data-dependent scatter,
12-30x over the NumPy loop. The forward is a dense contraction that the
BLAS-backed einsum wins at every tested shape, so it stays on the NumPy
path even when the extension is present. Set CWRANK_FORCE_NUMPY=1 to
force the fallback for everything (cross-backend tests do).
"""

from __future__ import annotations

import os

from . import _pyref

BACKEND = "numpy"
conv1d_forward = _pyref.conv1d_forward
conv1d_backward = _pyref.conv1d_backward

if os.environ.get("CWRANK_FORCE_NUMPY") != "1":
    try:
        from . import _ckernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        conv1d_backward = _ckernels.conv1d_backward

__all__ = ["BACKEND", "conv1d_forward", "conv1d_backward"]
