"""Pure-numpy fallbacks for the hot kernels (see `accel`)."""

import numpy as np


def last_admissible(weights, thresholds):
    m = weights.shape[0]
    mask = weights[None, :] >= thresholds[:, None]
    hit = mask.any(axis=1)
    # argmax on the reversed rows finds the last admissible index
    out = m - np.argmax(mask[:, ::-1], axis=1)
    return np.where(hit, out, 0).astype(np.int64)


def categorical_rows(logw, lengths, uniforms):
    n, m = logw.shape
    live = np.arange(m)[None, :] < lengths[:, None]
    w = np.where(live, logw, -np.inf)
    top = w.max(axis=1)
    dead = ~np.isfinite(top)
    e = np.exp(w - np.where(dead, 0.0, top)[:, None])
    e[~live] = 0.0
    cum = np.cumsum(e, axis=1)
    total = cum[:, -1]
    target = uniforms * total
    out = (np.argmax(cum >= target[:, None], axis=1) + 1).astype(np.int64)
    out[dead | (total == 0.0)] = -1
    return out
