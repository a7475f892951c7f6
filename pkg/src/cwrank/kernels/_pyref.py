"""NumPy reference implementation of the convolution kernels.

Always available; also the ground truth the compiled backend is tested
against.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_forward(emb: np.ndarray, filters: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid 1-D convolution over the length axis.

    emb (B, L, D), filters (F, W, D), bias (F) -> (B, L-W+1, F).
    """
    B, L, D = emb.shape
    F, W, Df = filters.shape
    if Df != D:
        raise ValueError(f"embedding dim {D} != filter dim {Df}")
    if L < W:
        raise ValueError(f"sequence length {L} shorter than filter width {W}")
    # windows: (B, P, D, W) with P = L-W+1; window p covers positions p..p+W-1
    windows = sliding_window_view(emb, W, axis=1)
    return np.einsum("bpdw,fwd->bpf", windows, filters, optimize=True) + bias


def conv1d_backward(
    emb: np.ndarray,
    filters: np.ndarray,
    b_idx: np.ndarray,
    p_idx: np.ndarray,
    f_idx: np.ndarray,
    gvals: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients through the pooled convolution routes.

    Each route r contributes gvals[r] * window(b_idx[r], p_idx[r]) to
    dfilters[f_idx[r]] and gvals[r] * filters[f_idx[r]] to the embedding
    slice it covered. Route lists may be empty (all-gated batch).
    """
    F, W, D = filters.shape
    dfilters = np.zeros_like(filters)
    demb = np.zeros_like(emb)
    for b, p, f, g in zip(b_idx, p_idx, f_idx, gvals):
        window = emb[b, p : p + W, :]
        dfilters[f] += g * window
        demb[b, p : p + W, :] += g * filters[f]
    return dfilters, demb
