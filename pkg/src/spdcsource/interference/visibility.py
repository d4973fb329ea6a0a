"""Visibility estimators with Poisson uncertainties."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = ["Visibility", "visibility", "fit_sinusoid", "SinusoidFit"]


class Visibility(NamedTuple):
    V: float
    sigma_V: float


def visibility(curve_or_extremes, kind: str = "polarization") -> Visibility:
    """Fringe visibility from a (C_max, C_min) pair or a sampled curve.

    ``kind='polarization'`` uses (Cmax - Cmin)/(Cmax + Cmin); ``kind='hom'``
    uses (Cmax - Cmin)/Cmax. Counts are taken as Poisson for sigma_V.
    """
    data = np.asarray(curve_or_extremes, dtype=float)
    if data.size == 2 and data.ndim == 1:
        cmax, cmin = float(data[0]), float(data[1])
    else:
        cmax, cmin = float(data.max()), float(data.min())
    if cmax <= 0:
        raise ValueError("visibility needs a positive maximum count")
    if cmin < 0 or cmin > cmax:
        raise ValueError("expected C_max >= C_min >= 0")
    if kind == "polarization":
        total = cmax + cmin
        V = (cmax - cmin) / total
        sigma = math.sqrt(4 * cmax * cmin / total**3)
    elif kind == "hom":
        V = (cmax - cmin) / cmax
        sigma = math.sqrt(cmin**2 / cmax**3 + cmin / cmax**2)
    else:
        raise ValueError(f"unknown visibility kind {kind!r}")
    return Visibility(V, sigma)


class SinusoidFit(NamedTuple):
    offset: float
    amplitude: float
    phase: float
    residual: float

    @property
    def visibility(self):
        return self.amplitude / self.offset


def fit_sinusoid(angles, counts) -> SinusoidFit:
    """Least-squares a + b cos 2t + c sin 2t.

    ``residual`` is the rms misfit relative to the fitted amplitude.
    """
    t = np.asarray(angles, dtype=float)
    y = np.asarray(counts, dtype=float)
    A = np.column_stack([np.ones_like(t), np.cos(2 * t), np.sin(2 * t)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    a, b, c = coef
    amp = math.hypot(b, c)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return SinusoidFit(float(a), amp, math.atan2(c, b) / 2, rms / amp if amp > 0 else np.inf)
