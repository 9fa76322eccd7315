"""NumPy implementations of the hot kernels.

These are the fallback twins of the compiled extension. The arithmetic is
deliberately order-pinned (per pair: numeric columns left to right, then
categorical columns, one running sum, final division by the column count)
so that the compiled and interpreted paths produce bit-identical floats;
neighbor selection then breaks distance ties by lower row index in both.
"""

from __future__ import annotations

import numpy as np

_BLOCK_CELLS = 4_000_000  # ~32 MB of float64 per distance block


def gower_block(num: np.ndarray, cat: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Distances of rows [start, stop) against all rows.

    num: (n, Fn) float64, already min-max scaled per column (constant
    columns all-zero so they contribute nothing but still count in the
    divisor). cat: (n, Fc) integer codes. Per-column numeric contributions
    clamp at 1.0 to keep scaling round-off from leaking past the bound.
    """
    n = num.shape[0] if num.size else cat.shape[0]
    total_cols = num.shape[1] + cat.shape[1]
    acc = np.zeros((stop - start, n), dtype=np.float64)
    for c in range(num.shape[1]):
        col = num[:, c]
        acc += np.minimum(np.abs(col[start:stop, None] - col[None, :]), 1.0)
    for c in range(cat.shape[1]):
        col = cat[:, c]
        acc += (col[start:stop, None] != col[None, :]).astype(np.float64)
    return acc / total_cols


def gower_knn(
    num: np.ndarray, cat: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """k nearest neighbors per row under the order-pinned Gower distance.

    Self-matches are excluded; ties in distance resolve to the lower row
    index. Returns (neighbors (n, k) int64 sorted by (distance, index),
    distances (n, k) float64).
    """
    n = num.shape[0] if num.size else cat.shape[0]
    if not 0 < k < n:
        raise ValueError(f"k must satisfy 0 < k < n_rows, got k={k}, n={n}")
    neighbors = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k), dtype=np.float64)
    block = max(1, _BLOCK_CELLS // max(n, 1))
    for start in range(0, n, block):
        stop = min(start + block, n)
        d = gower_block(num, cat, start, stop)
        for local, i in enumerate(range(start, stop)):
            d[local, i] = np.inf
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        neighbors[start:stop] = order
        dists[start:stop] = np.take_along_axis(d, order, axis=1)
    return neighbors, dists


def confusion_sweep(
    scores: np.ndarray, labels: np.ndarray, thresholds: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(tp, fp) counts at each threshold under the score >= threshold rule."""
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order].astype(np.int64)
    prefix_pos = np.concatenate(([0], np.cumsum(sorted_labels)))
    total_pos = int(prefix_pos[-1])
    n = scores.shape[0]
    idx = np.searchsorted(sorted_scores, thresholds, side="left")
    tp = total_pos - prefix_pos[idx]
    predicted = n - idx
    fp = predicted - tp
    return tp.astype(np.int64), fp.astype(np.int64)
