# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels. Same contracts as _pyref."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv1d_forward(object emb_in, object filters_in, object bias_in):
    cdef double[:, :, ::1] emb = np.ascontiguousarray(emb_in, dtype=np.float64)
    cdef double[:, :, ::1] filters = np.ascontiguousarray(filters_in, dtype=np.float64)
    cdef double[::1] bias = np.ascontiguousarray(bias_in, dtype=np.float64)

    cdef Py_ssize_t B = emb.shape[0]
    cdef Py_ssize_t L = emb.shape[1]
    cdef Py_ssize_t D = emb.shape[2]
    cdef Py_ssize_t F = filters.shape[0]
    cdef Py_ssize_t W = filters.shape[1]
    if filters.shape[2] != D:
        raise ValueError(f"embedding dim {D} != filter dim {filters.shape[2]}")
    if L < W:
        raise ValueError(f"sequence length {L} shorter than filter width {W}")
    cdef Py_ssize_t P = L - W + 1

    out_arr = np.empty((B, P, F), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, p, f, w, d
    cdef double acc
    for b in range(B):
        for p in range(P):
            for f in range(F):
                acc = bias[f]
                for w in range(W):
                    for d in range(D):
                        acc += emb[b, p + w, d] * filters[f, w, d]
                out[b, p, f] = acc
    return out_arr


def conv1d_backward(object emb_in, object filters_in,
                    object b_in, object p_in, object f_in, object g_in):
    cdef double[:, :, ::1] emb = np.ascontiguousarray(emb_in, dtype=np.float64)
    cdef double[:, :, ::1] filters = np.ascontiguousarray(filters_in, dtype=np.float64)
    cdef long long[::1] b_idx = np.ascontiguousarray(b_in, dtype=np.int64)
    cdef long long[::1] p_idx = np.ascontiguousarray(p_in, dtype=np.int64)
    cdef long long[::1] f_idx = np.ascontiguousarray(f_in, dtype=np.int64)
    cdef double[::1] gvals = np.ascontiguousarray(g_in, dtype=np.float64)

    cdef Py_ssize_t D = emb.shape[2]
    cdef Py_ssize_t W = filters.shape[1]
    cdef Py_ssize_t R = b_idx.shape[0]
    if p_idx.shape[0] != R or f_idx.shape[0] != R or gvals.shape[0] != R:
        raise ValueError("route arrays must have equal length")

    dfilters_arr = np.zeros((filters.shape[0], W, D), dtype=np.float64)
    demb_arr = np.zeros((emb.shape[0], emb.shape[1], D), dtype=np.float64)
    cdef double[:, :, ::1] dfilters = dfilters_arr
    cdef double[:, :, ::1] demb = demb_arr
    cdef Py_ssize_t r, w, d, b, p, f
    cdef double g
    for r in range(R):
        b = b_idx[r]
        p = p_idx[r]
        f = f_idx[r]
        g = gvals[r]
        for w in range(W):
            for d in range(D):
                dfilters[f, w, d] += g * emb[b, p + w, d]
                demb[b, p + w, d] += g * filters[f, w, d]
    return dfilters_arr, demb_arr
