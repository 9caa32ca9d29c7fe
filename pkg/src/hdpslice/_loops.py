"""Loop implementations of the two hot kernels, written to compile under
numba's nopython mode.  `accel` jit-wraps these; the vectorized numpy
equivalents live in `_vectorized`."""

import numpy as np


def last_admissible(weights, thresholds):
    # max 1-based t with thresholds[i] <= weights[t-1]; 0 when none
    m = weights.shape[0]
    n = thresholds.shape[0]
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        u = thresholds[i]
        for t in range(m - 1, -1, -1):
            if u <= weights[t]:
                out[i] = t + 1
                break
    return out


def categorical_rows(logw, lengths, uniforms):
    # one truncated categorical draw per row, in log space with
    # max-subtraction; returns 1-based indices, -1 for a dead row
    n, m = logw.shape
    out = np.empty(n, dtype=np.int64)
    cum = np.empty(m, dtype=np.float64)
    for i in range(n):
        size = lengths[i]
        top = -np.inf
        for t in range(size):
            if logw[i, t] > top:
                top = logw[i, t]
        if top == -np.inf:
            out[i] = -1
            continue
        acc = 0.0
        for t in range(size):
            acc += np.exp(logw[i, t] - top)
            cum[t] = acc
        target = uniforms[i] * acc
        pick = size - 1
        for t in range(size):
            if cum[t] >= target:
                pick = t
                break
        out[i] = pick + 1
    return out
