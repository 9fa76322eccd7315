# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the reference kernels.

Bit-identical to fairpath.kernels.reference by construction: the per-pair
accumulation order (numeric columns left to right, then categorical, one
running sum, one final division) and the (distance, index) tie-break are
the same, and no fast-math reassociation is allowed at build time.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def gower_knn(double[:, ::1] num, long long[:, ::1] cat, int k):
    """k nearest neighbors per row under the order-pinned Gower distance."""
    cdef Py_ssize_t n = num.shape[0]
    if n == 0:
        n = cat.shape[0]
    if not 0 < k < n:
        raise ValueError(f"k must satisfy 0 < k < n_rows, got k={k}, n={n}")
    cdef Py_ssize_t fn = num.shape[1]
    cdef Py_ssize_t fc = cat.shape[1]
    cdef double total = <double>(fn + fc)

    neighbors = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k), dtype=np.float64)
    cdef long long[:, ::1] nb = neighbors
    cdef double[:, ::1] nd = dists
    cdef Py_ssize_t i, j, c, filled, pos, q
    cdef double acc, part, d

    for i in range(n):
        filled = 0
        for j in range(n):
            if j == i:
                continue
            acc = 0.0
            for c in range(fn):
                part = num[i, c] - num[j, c]
                if part < 0.0:
                    part = -part
                if part > 1.0:
                    part = 1.0
                acc = acc + part
            for c in range(fc):
                if cat[i, c] != cat[j, c]:
                    acc = acc + 1.0
            d = acc / total

            if filled == k:
                if d > nd[i, k - 1] or (d == nd[i, k - 1] and j > nb[i, k - 1]):
                    continue
                pos = k - 1
            else:
                pos = filled
            while pos > 0 and (
                d < nd[i, pos - 1] or (d == nd[i, pos - 1] and j < nb[i, pos - 1])
            ):
                pos = pos - 1
            q = filled if filled < k else k - 1
            while q > pos:
                nd[i, q] = nd[i, q - 1]
                nb[i, q] = nb[i, q - 1]
                q = q - 1
            nd[i, pos] = d
            nb[i, pos] = j
            if filled < k:
                filled = filled + 1
    return neighbors, dists


def confusion_sweep(scores, labels, thresholds):
    """(tp, fp) counts at each threshold under the score >= threshold rule."""
    scores_arr = np.ascontiguousarray(scores, dtype=np.float64)
    thresholds_arr = np.ascontiguousarray(thresholds, dtype=np.float64)
    order = np.argsort(scores_arr, kind="stable")
    sorted_scores_arr = np.ascontiguousarray(scores_arr[order])
    sorted_labels = np.ascontiguousarray(
        np.asarray(labels, dtype=np.int64)[order]
    )
    prefix = np.concatenate(([0], np.cumsum(sorted_labels))).astype(np.int64)

    cdef double[::1] s = sorted_scores_arr
    cdef long long[::1] pre = prefix
    cdef double[::1] ts = thresholds_arr
    cdef Py_ssize_t n = s.shape[0]
    cdef long long total_pos = pre[n]
    cdef Py_ssize_t m = ts.shape[0]

    tp = np.empty(m, dtype=np.int64)
    fp = np.empty(m, dtype=np.int64)
    cdef long long[::1] tp_v = tp
    cdef long long[::1] fp_v = fp
    cdef Py_ssize_t idx, lo, hi, mid, t

    for t in range(m):
        lo = 0
        hi = n
        while lo < hi:  # leftmost index with s[idx] >= threshold
            mid = (lo + hi) // 2
            if s[mid] < ts[t]:
                lo = mid + 1
            else:
                hi = mid
        idx = lo
        tp_v[t] = total_pos - pre[idx]
        fp_v[t] = (n - idx) - tp_v[t]
    return tp, fp
