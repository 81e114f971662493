"""Pure numpy split search; import-time fallback for the compiled kernel.

Both implementations must pick identical splits bit-for-bit: totals come
from the final element of a sequential cumulative sum over each feature's
sorted order, candidate thresholds are midpoints between consecutive
distinct values scanned in ascending order, and a candidate replaces the
incumbent only on strictly greater gain (so the lowest feature index, then
the lowest threshold, wins ties). Gains must exceed 0 to count.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def find_best_split(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    reg_lambda: float,
    gamma: float,
    min_child_hessian: float,
) -> tuple[int, float, float]:
    """Best (feature, threshold, gain) for one node; feature == -1 when no split."""
    n, n_features = X.shape
    best_feat = -1
    best_thr = 0.0
    best_gain = 0.0
    if n < 2:
        return best_feat, best_thr, best_gain
    for j in range(n_features):
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        if xs[0] == xs[-1]:
            continue
        cg = np.cumsum(g[order])
        ch = np.cumsum(h[order])
        g_total = cg[-1]
        h_total = ch[-1]
        parent = g_total * g_total / (h_total + reg_lambda)
        valid = xs[:-1] < xs[1:]
        gl = cg[:-1][valid]
        hl = ch[:-1][valid]
        gr = g_total - gl
        hr = h_total - hl
        gains = 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent) - gamma
        feasible = (hl >= min_child_hessian) & (hr >= min_child_hessian)
        if not feasible.any():
            continue
        gains = np.where(feasible, gains, -np.inf)
        i = int(np.argmax(gains))  # first max: lowest threshold among ties
        if gains[i] > best_gain:
            left_vals = xs[:-1][valid]
            right_vals = xs[1:][valid]
            best_feat = j
            best_thr = (left_vals[i] + right_vals[i]) / 2.0
            best_gain = float(gains[i])
    return best_feat, float(best_thr), float(best_gain)
