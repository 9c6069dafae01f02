"""Rank-correlation and regression fit metrics.

kendall_tau is the tie-corrected tau-b, computed in O(n log n) with
merge-sort inversion counting. r_squared and mean_abs_error are the
usual regression diagnostics.
"""

from __future__ import annotations

import math

import numpy as np


class DegenerateInputError(ValueError):
    """Input on which the metric is undefined (too short, all tied, constant)."""


def _validate_pair(xs, ys, min_len: int):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or ys.ndim != 1 or xs.shape != ys.shape:
        raise ValueError("inputs must be 1-d vectors of equal length")
    if xs.size < min_len:
        raise DegenerateInputError(f"need at least {min_len} observations")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("inputs must be finite")
    return xs, ys


def _merge_count(values: np.ndarray) -> int:
    """Count pairs (i < j) with values[i] > values[j] by merge sort."""
    n = values.size
    if n < 2:
        return 0
    buf = values.copy()
    tmp = np.empty_like(buf)
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n - width, 2 * width):
            mid = lo + width
            hi = min(mid + width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if buf[i] <= buf[j]:
                    tmp[k] = buf[i]
                    i += 1
                else:
                    # buf[i:mid] are all greater than buf[j]
                    swaps += mid - i
                    tmp[k] = buf[j]
                    j += 1
                k += 1
            tmp[k:hi] = buf[i:mid] if i < mid else buf[j:hi]
            buf[lo:hi] = tmp[lo:hi]
        width *= 2
    return swaps


def _tie_term(values: np.ndarray) -> int:
    _, counts = np.unique(values, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def kendall_tau(xs, ys) -> float:
    """Kendall tau-b of two paired vectors.

    Sorts by (x, y), counts discordant pairs as y-inversions, and applies
    the tie correction (C - D) / sqrt((C+D+Tx) * (C+D+Ty)).
    """
    xs, ys = _validate_pair(xs, ys, min_len=2)
    n = xs.size

    order = np.lexsort((ys, xs))
    x_sorted = xs[order]
    y_sorted = ys[order]

    total = n * (n - 1) // 2
    tie_x = _tie_term(x_sorted)
    tie_y = _tie_term(y_sorted)
    if tie_x == total or tie_y == total:
        raise DegenerateInputError("degenerate input: one axis is entirely tied")

    # Pairs tied in both axes: group by (x, y).
    pair_keys = np.stack([x_sorted, y_sorted], axis=1)
    _, counts = np.unique(pair_keys, axis=0, return_counts=True)
    tie_xy = int(np.sum(counts * (counts - 1) // 2))

    discordant = _merge_count(y_sorted)
    con_minus_dis = total - tie_x - tie_y + tie_xy - 2 * discordant
    return con_minus_dis / math.sqrt((total - tie_x) * (total - tie_y))


def r_squared(truth, pred) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot."""
    truth, pred = _validate_pair(truth, pred, min_len=2)
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateInputError("truth vector is constant")
    ss_res = float(np.sum((truth - pred) ** 2))
    return 1.0 - ss_res / ss_tot


def mean_abs_error(truth, pred) -> float:
    truth, pred = _validate_pair(truth, pred, min_len=1)
    return float(np.mean(np.abs(truth - pred)))
