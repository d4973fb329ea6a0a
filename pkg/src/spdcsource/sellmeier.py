"""
Refractive-index data for the two nonlinear crystals used by the source.

KTP (flux grown, x-cut propagation):
    y axis: K. Koenig and F. Wong, Appl. Phys. Lett. 84, 1644 (2004)
    z axis: K. Fradkin et al., Appl. Phys. Lett. 74, 914 (1999)
    thermo-optic correction for both axes: S. Emanueli and A. Arie,
    Appl. Opt. 42, 6661 (2003), referenced to 25 C.

5% MgO:LiNbO3, extraordinary and ordinary axes:
    O. Gayer et al., Appl. Phys. B 91, 343 (2008), temperature-dependent fit.

All functions take the vacuum wavelength in metres and the temperature in
kelvin and return the (dimensionless) phase index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["MATERIALS", "SellmeierFit", "refractive_index", "group_index"]


def _emanueli(lam_um, temperature, a, b):
    dt = temperature - 298.15
    n1 = sum(ai / lam_um**i for i, ai in enumerate(a)) * 1e-6
    n2 = sum(bi / lam_um**i for i, bi in enumerate(b)) * 1e-8
    return n1 * dt + n2 * dt**2


def _ktp_y(lam_um, temperature):
    n = np.sqrt(2.09930 + 0.922683 / (1 - 0.0467695 / lam_um**2) - 0.0138408 * lam_um**2)
    return n + _emanueli(lam_um, temperature,
                         (6.2897, 6.3061, -6.0629, 2.6486),
                         (-0.14445, 2.2244, -3.5770, 1.3470))


def _ktp_z(lam_um, temperature):
    l2 = lam_um**2
    n = np.sqrt(2.12725 + 1.18431 / (1 - 5.14852e-2 / l2)
                + 0.6603 / (1 - 100.00507 / l2) - 9.68956e-3 * l2)
    return n + _emanueli(lam_um, temperature,
                         (9.9587, 9.9228, -8.9603, 4.1010),
                         (-1.1882, 10.459, -9.8136, 3.1481))


def _gayer(coeffs):
    a1, a2, a3, a4, a5, a6, b1, b2, b3, b4 = coeffs

    def index(lam_um, temperature):
        t = temperature - 273.15
        f = (t - 24.5) * (t + 570.82)
        l2 = lam_um**2
        n2 = (a1 + b1 * f + (a2 + b2 * f) / (l2 - (a3 + b3 * f) ** 2)
              + (a4 + b4 * f) / (l2 - a5**2) - a6 * l2)
        return np.sqrt(n2)

    return index


_ln_e = _gayer((5.756, 0.0983, 0.2020, 189.32, 12.52, 1.32e-2,
                2.860e-6, 4.700e-8, 6.113e-8, 1.516e-4))
_ln_o = _gayer((5.653, 0.1185, 0.2091, 89.61, 10.85, 1.97e-2,
                7.941e-7, 3.134e-8, -4.641e-9, -2.188e-6))


@dataclass(frozen=True)
class SellmeierFit:
    """One published dispersion fit with its wavelength validity range (metres)."""

    function: Callable
    lam_min: float
    lam_max: float
    reference: str


MATERIALS = {
    "KTP": {
        "y": SellmeierFit(_ktp_y, 0.40e-6, 1.70e-6, "Koenig & Wong 2004 + Emanueli 2003"),
        "z": SellmeierFit(_ktp_z, 0.40e-6, 3.50e-6, "Fradkin 1999 + Emanueli 2003"),
    },
    "LN_MgO": {
        "e": SellmeierFit(_ln_e, 0.50e-6, 4.00e-6, "Gayer 2008 (extraordinary)"),
        "o": SellmeierFit(_ln_o, 0.50e-6, 4.00e-6, "Gayer 2008 (ordinary)"),
    },
}


def _fit(material, axis) -> SellmeierFit:
    try:
        return MATERIALS[material][axis]
    except KeyError:
        raise ValueError(f"no dispersion data for material={material!r}, axis={axis!r}; "
                         f"known: { {m: sorted(a) for m, a in MATERIALS.items()} }") from None


def refractive_index(material: str, axis: str, wavelength, temperature: float):
    """Phase index n(wavelength, temperature).

    Raises ValueError if any wavelength lies outside the validity range of the
    fit; the message quotes the range.
    """
    fit = _fit(material, axis)
    lam = np.asarray(wavelength, dtype=float)
    if np.any(lam < fit.lam_min) or np.any(lam > fit.lam_max):
        raise ValueError(
            f"{material} {axis}-axis index valid for {fit.lam_min * 1e9:.0f}-"
            f"{fit.lam_max * 1e9:.0f} nm, got {lam.min() * 1e9:.1f}-{lam.max() * 1e9:.1f} nm")
    n = fit.function(lam * 1e6, float(temperature))
    return float(n) if np.ndim(n) == 0 else n


def group_index(material: str, axis: str, wavelength, temperature: float, step: float = 1e-10):
    """n_g = n - lambda dn/dlambda by central difference."""
    lam = np.asarray(wavelength, dtype=float)
    n = refractive_index(material, axis, lam, temperature)
    dn = (refractive_index(material, axis, lam + step, temperature)
          - refractive_index(material, axis, lam - step, temperature)) / (2 * step)
    return n - lam * dn
