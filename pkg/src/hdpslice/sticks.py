"""Stick-breaking transforms and the conjugate conditional stick update.

A stick vector holds raw break fractions x in (0,1).  The derived weights
are w[1] = x[1], w[j] = x[j] * prod_{l<j} (1 - x[l]); the tail products
are p[j] = prod_{l<=j} (1 - x[l]).  For every j the partial sum identity

    w[1] + ... + w[j] + p[j] = 1

holds, and p is strictly decreasing while w need not be monotone.  The
tail product upper-bounds every later weight, which is what the sampler's
truncation guards rely on.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvariantError

# Break fractions are clamped into [EPS, 1-EPS] after sampling: Beta draws
# can round to floating-point 0 or 1, which would degenerate the weights.
EPS = 1e-12

# Weights and tails are floored here so that ratios u/w stay finite even
# for absurdly deep sticks; the distortion is far below test tolerances.
_FLOOR = 1e-300


def clamp_fraction(x):
    """Clamp a fraction (or array of fractions) into the open unit interval."""
    return np.clip(x, EPS, 1.0 - EPS)


def stick_weights(raw):
    """Map raw break fractions to probability weights.

    Parameters
    ----------
    raw : array_like of float
        Break fractions, each strictly inside (0, 1).

    Returns
    -------
    ndarray, same length as `raw`.
    """
    raw = _checked(raw)
    lead = np.concatenate(([1.0], np.cumprod(1.0 - raw)[:-1]))
    return np.maximum(raw * lead, _FLOOR)


def tail_products(raw):
    """Remaining stick mass after each break; strictly decreasing."""
    raw = _checked(raw)
    return np.maximum(np.cumprod(1.0 - raw), _FLOOR)


def _checked(raw):
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1:
        raise DomainError("stick fractions must form a 1-d sequence")
    if raw.size and not ((raw > 0.0).all() and (raw < 1.0).all()):
        raise DomainError("stick fractions must lie strictly inside (0, 1)")
    return raw


class StickVector:
    """Raw break fractions with derived weights and tail products.

    Attributes
    ----------
    raw : ndarray
        Break fractions in (0, 1); length equals the current cap.
    weights : ndarray
        Derived probability weights.
    tail : ndarray
        Derived tail products; ``tail[-1]`` is the mass beyond the cap.
    """

    __slots__ = ("raw", "weights", "tail")

    def __init__(self, raw):
        self.raw = _checked(raw).copy()
        lead = np.concatenate(([1.0], np.cumprod(1.0 - self.raw)[:-1]))
        self.weights = np.maximum(self.raw * lead, _FLOOR)
        self.tail = np.maximum(np.cumprod(1.0 - self.raw), _FLOOR)

    def __len__(self):
        return self.raw.size

    def extended(self, extra_raw):
        """New StickVector with `extra_raw` fractions appended."""
        return StickVector(np.concatenate([self.raw, np.asarray(extra_raw, float)]))


@dataclass
class OccupancyCounts:
    """Per-index label counts: ``at[j]`` customers at index j+1 (1-based),
    ``above[j]`` customers strictly above it."""

    at: np.ndarray
    above: np.ndarray


def occupancy(labels, cap):
    """Count labels at and above each index 1..cap.

    `labels` are 1-based integers; a label exceeding `cap` means the caps
    no longer dominate the state and is an internal error, not bad input.
    """
    labels = np.asarray(labels, dtype=np.int64)
    cap = int(cap)
    if cap < 1:
        raise DomainError("cap must be a positive integer")
    if labels.size:
        if labels.min() < 1:
            raise DomainError("labels must be positive integers")
        if labels.max() > cap:
            raise InvariantError(
                f"label {labels.max()} exceeds cap {cap}; caps must dominate labels")
    at = np.bincount(labels, minlength=cap + 1)[1:cap + 1]
    above = labels.size - np.cumsum(at)
    return OccupancyCounts(at=at, above=above)


def stick_posterior_params(counts, concentration):
    """Beta(a, b) parameter vectors of the conditional stick update.

    With a Beta(1, c) stick prior, break fraction j conditioned on labels
    is Beta(n_at[j] + 1, n_above[j] + c).
    """
    if concentration <= 0:
        raise DomainError("concentration must be positive")
    return counts.at + 1.0, counts.above + float(concentration)


def conditional_stick_draw(counts, index, concentration, rng):
    """Draw break fraction `index` (1-based) from its conditional.

    One draw from Beta(n_at + 1, n_above + concentration), clamped away
    from {0, 1}.  Deterministic given the state of `rng`.
    """
    a, b = stick_posterior_params(counts, concentration)
    i = int(index) - 1
    if not (0 <= i < counts.at.size):
        raise DomainError(f"stick index {index} outside 1..{counts.at.size}")
    return float(clamp_fraction(rng.beta(a[i], b[i])))


def draw_stick_vector(counts, concentration, rng):
    """Draw every break fraction of a stick vector from its conditional."""
    a, b = stick_posterior_params(counts, concentration)
    return StickVector(clamp_fraction(rng.beta(a, b)))


def draw_prior_sticks(concentration, size, rng):
    """Break fractions from the Beta(1, concentration) prior."""
    if concentration <= 0:
        raise DomainError("concentration must be positive")
    return clamp_fraction(rng.beta(1.0, float(concentration), size=size))
