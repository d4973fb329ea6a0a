"""Small numerical helpers shared across modules."""

from __future__ import annotations

import numpy as np

__all__ = ["fwhm", "half_max_crossings"]


def half_max_crossings(x, y):
    """Outermost abscissae where y crosses half its maximum (linear interpolation)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    half = 0.5 * y.max()
    above = np.nonzero(y >= half)[0]
    if above.size == 0 or y.max() <= 0:
        raise ValueError("profile has no positive maximum")
    i0, i1 = above[0], above[-1]
    if i0 == 0 or i1 == len(y) - 1:
        raise ValueError("profile does not fall below half maximum inside the axis")
    left = x[i0 - 1] + (half - y[i0 - 1]) * (x[i0] - x[i0 - 1]) / (y[i0] - y[i0 - 1])
    right = x[i1] + (half - y[i1]) * (x[i1 + 1] - x[i1]) / (y[i1 + 1] - y[i1])
    return left, right


def fwhm(x, y):
    """Full width at half maximum of a sampled single-peaked profile."""
    left, right = half_max_crossings(x, y)
    return abs(right - left)
