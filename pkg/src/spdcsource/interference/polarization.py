"""
Polarization-entangled pair model and analyzer scans.

State: sqrt((1+e)/2)|HV> + exp(i phi) sqrt((1-e)/2)|VH>, mixed with a
fraction p of white noise. Each analyzer is a half-wave plate followed by a
fixed polarizer; analyzer angle 0 transmits V, 90 deg transmits H and
+/-45 deg transmit D/A. A retardance error delta makes the plate pi + delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .visibility import fit_sinusoid

__all__ = [
    "PolarizationModel",
    "BasisAngles",
    "BASIS_ANGLES",
    "analyzer_state",
    "coincidence_curve",
    "coincidence_rate",
    "basis_visibilities",
    "calibrate_bases",
    "naive_bases",
    "basis_bias",
    "fit_mixed_fraction",
    "fit_dephasing",
]

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)
BASIS_ANGLES = {"H": math.pi / 2, "V": 0.0, "D": math.pi / 4, "A": -math.pi / 4}


@dataclass(frozen=True)
class PolarizationModel:
    phi: float = 0.0
    amplitude_imbalance: float = 0.0
    mixed_fraction: float = 0.0
    # fractional loss of HV/VH coherence (phase noise)
    dephasing: float = 0.0
    # retardance error of (fixed, scanned) analyzer plates; a float applies to both
    waveplate_error: object = 0.0

    def __post_init__(self):
        if not 0.0 <= self.mixed_fraction <= 1.0:
            raise ValueError("mixed_fraction must lie in [0, 1]")
        if not -1.0 <= self.amplitude_imbalance <= 1.0:
            raise ValueError("amplitude_imbalance must lie in [-1, 1]")
        if not 0.0 <= self.dephasing <= 1.0:
            raise ValueError("dephasing must lie in [0, 1]")

    def replace(self, **changes) -> "PolarizationModel":
        return replace(self, **changes)

    @property
    def plate_errors(self):
        err = self.waveplate_error
        return (float(err), float(err)) if np.isscalar(err) else tuple(float(e) for e in err)

    def density_matrix(self) -> np.ndarray:
        e = self.amplitude_imbalance
        psi = (math.sqrt((1 + e) / 2) * np.kron(H, V)
               + np.exp(1j * self.phi) * math.sqrt((1 - e) / 2) * np.kron(V, H))
        rho = np.outer(psi, psi.conj())
        rho[1, 2] *= 1 - self.dephasing
        rho[2, 1] *= 1 - self.dephasing
        p = self.mixed_fraction
        return (1 - p) * rho + p * np.eye(4) / 4


def _half_wave_plate(angle, retardance):
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    return R @ np.diag([1.0, np.exp(1j * retardance)]) @ R.T


def analyzer_state(theta: float, plate_error: float = 0.0) -> np.ndarray:
    """Polarization state transmitted by the analyzer at setting ``theta``."""
    J = _half_wave_plate(-theta / 2, math.pi + plate_error)
    return J.conj().T @ V


def _projector(theta, plate_error):
    e = analyzer_state(theta, plate_error)
    return np.outer(e, e.conj())


def coincidence_rate(model: PolarizationModel, theta_fixed: float, theta_scan: float) -> float:
    err_a, err_b = model.plate_errors
    op = np.kron(_projector(theta_fixed, err_a), _projector(theta_scan, err_b))
    return float(np.real(np.trace(model.density_matrix() @ op)))


def coincidence_curve(model: PolarizationModel, fixed_basis: str, scan_angles) -> np.ndarray:
    """Coincidence probability versus scanned-analyzer angle with the other analyzer fixed."""
    if fixed_basis not in BASIS_ANGLES:
        raise ValueError(f"fixed basis must be one of {sorted(BASIS_ANGLES)}")
    theta_f = BASIS_ANGLES[fixed_basis]
    return np.array([coincidence_rate(model, theta_f, t) for t in np.atleast_1d(scan_angles)])


def basis_visibilities(model: PolarizationModel, n_angles: int = 72) -> dict:
    """Sinusoid-fit visibility of the scan for each fixed basis."""
    angles = np.linspace(-math.pi / 2, math.pi / 2, n_angles, endpoint=False)
    return {b: fit_sinusoid(angles, coincidence_curve(model, b, angles)).visibility for b in "HVDA"}


class BasisAngles(NamedTuple):
    H: float
    V: float
    D: float
    A: float


def _wrap(theta):
    # analyzer settings are defined modulo pi; report them in (-pi/2, pi/2]
    return math.pi / 2 - (math.pi / 2 - theta) % math.pi


def calibrate_bases(curve_source: Callable[[float, str], float], xtol: float = math.radians(0.005),
                    max_residual: float = 0.05) -> BasisAngles:
    """Find analyzer settings from rates alone.

    ``curve_source(theta, other)`` returns the coincidence rate with this
    analyzer at ``theta`` and the other one at its 'H' or 'V' setting. H is
    the coincidence minimum against the other's H, V the maximum; D and A
    are where the rates against the other's H and V settings are equal.
    """
    grid = np.linspace(-math.pi / 2, math.pi / 2, 72, endpoint=False)
    scan = np.array([curve_source(t, "H") for t in grid])
    fit = fit_sinusoid(grid, scan)
    if fit.residual > max_residual:
        raise ValueError(f"analyzer response is not sinusoidal (rms residual {fit.residual:.1%})")
    t_max = fit.phase
    t_min = fit.phase + math.pi / 2
    window = math.radians(20)

    def refine(center, sign):
        res = minimize_scalar(lambda t: sign * curve_source(t, "H"), bounds=(center - window, center + window),
                              method="bounded", options={"xatol": xtol})
        return float(res.x)

    ang_v = refine(t_max, -1.0)
    ang_h = refine(t_min, +1.0)

    def balance(t):
        return curve_source(t, "H") - curve_source(t, "V")

    def root(center):
        return brentq(balance, center - math.radians(30), center + math.radians(30), xtol=xtol / 10)

    ang_d = root(ang_v + math.pi / 4)
    ang_a = root(ang_v - math.pi / 4)
    return BasisAngles(*(_wrap(a) for a in (ang_h, ang_v, ang_d, ang_a)))


def basis_bias(theta: float, plate_error: float = 0.0) -> float:
    """|<e|H>|^2 - |<e|V>|^2 for the analyzer state; zero for a setting unbiased between H and V."""
    e = analyzer_state(theta, plate_error)
    return float(abs(e[0]) ** 2 - abs(e[1]) ** 2)


def naive_bases(angles: BasisAngles) -> BasisAngles:
    """D and A placed 45 degrees from the calibrated V setting."""
    return angles._replace(D=_wrap(angles.V + math.pi / 4), A=_wrap(angles.V - math.pi / 4))


def fit_mixed_fraction(target_visibility: float, basis: str = "D",
                       model: PolarizationModel = PolarizationModel()) -> float:
    """White-noise fraction giving ``target_visibility`` in ``basis``."""
    def mismatch(p):
        return basis_visibilities(model.replace(mixed_fraction=p))[basis] - target_visibility

    return brentq(mismatch, 0.0, 1.0 - 1e-9, xtol=1e-12)



def fit_dephasing(target_visibility: float, basis: str = "D",
                  model: PolarizationModel = PolarizationModel()) -> float:
    """HV/VH coherence loss giving ``target_visibility`` in a superposition
    basis; H/V visibilities are unaffected by it."""
    def mismatch(d):
        return basis_visibilities(model.replace(dephasing=d))[basis] - target_visibility

    return brentq(mismatch, 0.0, 1.0, xtol=1e-12)
