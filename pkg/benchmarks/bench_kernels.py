"""Compare the compiled convolution kernels against the array fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

Shapes mirror a real training step: batch 10, padded length 40, embedding
dim 64, 32 filters per width, widths 2/4/7, one pooled route per
(row, filter) in the backward pass.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cwrank import kernels
from cwrank.kernels import _pyref

try:
    from cwrank.kernels import _ckernels
except ImportError:
    _ckernels = None

B, L, D, F = 10, 40, 64, 32
WIDTHS = (2, 4, 7)


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled extension not built; run pip install -e . first")
        return

    rng = np.random.default_rng(0)
    print(f"shapes: B={B} L={L} D={D} F={F}, best of {args.repeats} runs")
    print(f"{'kernel':<22}{'numpy':>12}{'cython':>12}{'speedup':>10}")
    for w in WIDTHS:
        emb = rng.normal(size=(B, L, D))
        filters = rng.normal(size=(F, w, D))
        bias = rng.normal(size=F)
        ref = best_of(lambda: _pyref.conv1d_forward(emb, filters, bias), args.repeats)
        ext = best_of(lambda: _ckernels.conv1d_forward(emb, filters, bias), args.repeats)
        np.testing.assert_allclose(
            _ckernels.conv1d_forward(emb, filters, bias),
            _pyref.conv1d_forward(emb, filters, bias),
            rtol=1e-12, atol=1e-12,
        )
        print(f"{'forward w=' + str(w):<22}{ref * 1e6:>10.0f}us{ext * 1e6:>10.0f}us{ref / ext:>9.1f}x")

        n_routes = B * F
        b_idx = rng.integers(0, B, size=n_routes)
        p_idx = rng.integers(0, L - w + 1, size=n_routes)
        f_idx = rng.integers(0, F, size=n_routes)
        gvals = rng.normal(size=n_routes)
        ref = best_of(
            lambda: _pyref.conv1d_backward(emb, filters, b_idx, p_idx, f_idx, gvals),
            args.repeats,
        )
        ext = best_of(
            lambda: _ckernels.conv1d_backward(emb, filters, b_idx, p_idx, f_idx, gvals),
            args.repeats,
        )
        print(f"{'backward w=' + str(w):<22}{ref * 1e6:>10.0f}us{ext * 1e6:>10.0f}us{ref / ext:>9.1f}x")

    print(
        f"\nactive backend: {kernels.BACKEND} "
        "(package default binds the compiled backward and the NumPy forward)"
    )


if __name__ == "__main__":
    main()
