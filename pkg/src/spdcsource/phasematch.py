"""
Quasi-phase-matching for periodically poled crystals.

The phase-matching function is the normalised Fourier transform of the
effective nonlinearity profile g(z),

    Phi(dk) = (1/L) * integral_{-L/2}^{L/2} g(z) exp(i dk z) dz,

with the origin at the crystal centre so that a symmetric profile gives a
real Phi. Moving the origin to the input face multiplies Phi by
exp(i dk L/2); |Phi| is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .sellmeier import refractive_index

__all__ = [
    "GaussianApodization",
    "CrystalSpec",
    "NonlinearityProfile",
    "ppktp_crystal",
    "ppln_shg_crystal",
    "delta_k",
    "nonlinearity_profile",
    "pmf",
    "sinc_pmf",
    "PmfTable",
    "degeneracy_solve",
]

FOUR_LN2 = 4 * np.log(2)


@dataclass(frozen=True)
class GaussianApodization:
    """Gaussian poling duty-cycle apodization.

    ``convention='nonlinearity'`` applies the FWHM to g(z) itself;
    ``convention='duty_cycle'`` applies it to the duty cycle D(z), with
    g = sin(pi D).
    """

    fwhm: float
    convention: str = "nonlinearity"

    def __post_init__(self):
        if self.convention not in ("nonlinearity", "duty_cycle"):
            raise ValueError(f"unknown apodization convention {self.convention!r}")


@dataclass(frozen=True)
class CrystalSpec:
    material: str
    length: float
    poling_period: float
    temperature: float
    apodization: Optional[GaussianApodization] = None
    # polarization axis for (pump, signal, idler)
    axes: tuple = ("y", "y", "z")
    # +1 subtracts 2 pi / period from the mismatch, -1 adds it; None picks the
    # sign that compensates the unpoled mismatch
    qpm_order: Optional[int] = None

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("crystal length must be positive")
        if not self.poling_period > 0:
            raise ValueError("poling period must be positive")
        if self.apodization is not None and not 0 < self.apodization.fwhm <= 2 * self.length:
            raise ValueError("apodization FWHM must lie in (0, 2*length]")
        if len(self.axes) != 3:
            raise ValueError("axes must name the pump, signal and idler polarizations")

    def replace(self, **changes) -> "CrystalSpec":
        return replace(self, **changes)


def ppktp_crystal(length=27.5e-3, poling_period=46.5e-6, temperature=298.15,
                  apodization_fwhm: Optional[float] = 14.6e-3,
                  convention="nonlinearity") -> CrystalSpec:
    """Type-II (y, y, z) apodized ppKTP with the design dimensions as defaults."""
    apod = None if apodization_fwhm is None else GaussianApodization(apodization_fwhm, convention)
    return CrystalSpec("KTP", length, poling_period, temperature, apod, ("y", "y", "z"))


def ppln_shg_crystal(length=3e-3, poling_period=19.2e-6, temperature=343.15) -> CrystalSpec:
    """Type-0 (e, e, e) MgO:ppLN for 1550 nm -> 775 nm SHG."""
    return CrystalSpec("LN_MgO", length, poling_period, temperature, None, ("e", "e", "e"))


def _unpoled_mismatch(crystal, lam_p, lam_s, lam_i):
    ax_p, ax_s, ax_i = crystal.axes
    t = crystal.temperature
    n_p = refractive_index(crystal.material, ax_p, lam_p, t)
    n_s = refractive_index(crystal.material, ax_s, lam_s, t)
    n_i = refractive_index(crystal.material, ax_i, lam_i, t)
    return 2 * np.pi * (n_p / lam_p - n_s / lam_s - n_i / lam_i)


def delta_k(crystal: CrystalSpec, signal_wavelength, idler_wavelength):
    """Wavevector mismatch k_p - k_s - k_i -/+ 2 pi / period in 1/m.

    The pump wavelength follows from energy conservation,
    1/lambda_p = 1/lambda_s + 1/lambda_i.
    """
    lam_s = np.asarray(signal_wavelength, dtype=float)
    lam_i = np.asarray(idler_wavelength, dtype=float)
    lam_p = 1.0 / (1.0 / lam_s + 1.0 / lam_i)
    dk0 = _unpoled_mismatch(crystal, lam_p, lam_s, lam_i)
    order = crystal.qpm_order
    if order is None:
        order = 1 if np.mean(dk0) >= 0 else -1
    if np.isinf(crystal.poling_period):
        return dk0
    return dk0 - order * 2 * np.pi / crystal.poling_period


@dataclass(frozen=True)
class NonlinearityProfile:
    z: np.ndarray
    g: np.ndarray
    duty_cycle: np.ndarray = field(repr=False)

    @property
    def length(self):
        return float(self.z[-1] - self.z[0])

    def energy(self):
        """Integral of g^2 over the crystal (Simpson)."""
        return float(_simpson_weights(len(self.z), self.z[1] - self.z[0]) @ self.g**2)


def _simpson_weights(n, h):
    if n % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number of samples")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _profile_values(crystal, z):
    """g(z) and duty cycle D(z) for positions measured from the input face."""
    L = crystal.length
    apod = crystal.apodization
    if apod is None:
        g = np.ones_like(z)
        return g, np.full_like(z, 0.5)
    gauss = np.exp(-FOUR_LN2 * (z - L / 2) ** 2 / apod.fwhm**2)
    if apod.convention == "nonlinearity":
        g = gauss
        duty = np.arcsin(np.clip(g, 0.0, 1.0)) / np.pi
    else:
        duty = 0.5 * gauss
        g = np.sin(np.pi * duty)
    return g, duty


def nonlinearity_profile(crystal: CrystalSpec, n_samples: int = 1025) -> NonlinearityProfile:
    """Peak-normalised effective nonlinearity g(z) on z in [0, L].

    Without apodization g is identically one. For the Gaussian duty-cycle
    design the duty cycle D(z) satisfies g = sin(pi D) and D(L/2) = 0.5.
    """
    if n_samples % 2 == 0:
        n_samples += 1
    z = np.linspace(0.0, crystal.length, n_samples)
    g, duty = _profile_values(crystal, z)
    return NonlinearityProfile(z, g, duty)


def _quadrature(crystal, dk_max):
    L = crystal.length
    # Simpson error ~ (h dk)^4 / 180; 0.02 keeps it below 1e-9 of the peak
    h = L / 512
    if dk_max > 0:
        h = min(h, 0.02 / dk_max, np.pi / (4 * dk_max))
    n = int(np.ceil(L / h))
    n += n % 2
    z = np.linspace(0.0, L, n + 1)
    g, _ = _profile_values(crystal, z)
    w = _simpson_weights(n + 1, z[1] - z[0]) * g / L
    return z - L / 2, w


def pmf(crystal: CrystalSpec, dk, chunk: int = 2048):
    """Phase-matching function Phi(dk) by composite Simpson quadrature.

    Phi(0) equals the mean of g; a rectangular profile reproduces sinc(dk L/2).
    """
    dk = np.asarray(dk, dtype=float)
    if not np.all(np.isfinite(dk)):
        raise ValueError("wavevector mismatch contains non-finite values")
    flat = dk.ravel()
    zc, w = _quadrature(crystal, float(np.max(np.abs(flat))) if flat.size else 0.0)
    out = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, chunk):
        block = flat[start:start + chunk]
        out[start:start + chunk] = np.exp(1j * np.outer(block, zc)) @ w
    return out.reshape(dk.shape) if dk.ndim else complex(out[0])


def sinc_pmf(dk, length):
    """Closed form for the unapodized crystal, centred origin."""
    x = np.asarray(dk, dtype=float) * length / 2
    return np.sinc(x / np.pi)


class PmfTable:
    """Cubic-spline interpolant of Phi on a dense uniform dk table.

    Phi is band-limited (support of g is the crystal length), so sampling at
    pi / (64 L) keeps the spline error below ~1e-8 of the peak value.
    """

    def __init__(self, crystal: CrystalSpec, dk_min: float, dk_max: float, oversample: int = 64):
        L = crystal.length
        step = np.pi / (oversample * L)
        pad = 8 * step
        lo, hi = dk_min - pad, dk_max + pad
        n = max(int(np.ceil((hi - lo) / step)) + 1, 16)
        self.dk = np.linspace(lo, hi, n)
        values = pmf(crystal, self.dk)
        self._re = CubicSpline(self.dk, values.real)
        self._im = CubicSpline(self.dk, values.imag)

    def __call__(self, dk):
        dk = np.asarray(dk, dtype=float)
        if dk.size and (dk.min() < self.dk[0] or dk.max() > self.dk[-1]):
            raise ValueError("dk outside the tabulated range")
        return self._re(dk) + 1j * self._im(dk)


def degeneracy_solve(crystal: CrystalSpec, pump_wavelength: float,
                     free_parameter: str = "temperature", bracket=None, tol: float = 0.1) -> float:
    """Temperature (K) or poling period (m) giving dk = 0 at lambda_s = lambda_i = 2 lambda_p.

    Temperature is found by Brent's method inside ``bracket`` (default
    250-450 K); the period follows in closed form from the unpoled mismatch.
    """
    lam = 2.0 * pump_wavelength
    if free_parameter == "poling_period":
        dk0 = float(_unpoled_mismatch(crystal, pump_wavelength, lam, lam))
        return 2 * np.pi / abs(dk0)
    if free_parameter != "temperature":
        raise ValueError(f"free_parameter must be 'temperature' or 'poling_period', got {free_parameter!r}")

    lo, hi = bracket if bracket is not None else (250.0, 450.0)

    def mismatch(t):
        return float(delta_k(crystal.replace(temperature=t), lam, lam))

    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise ValueError(
            f"no degeneracy root for period {crystal.poling_period * 1e6:.3f} um in "
            f"[{lo:.1f}, {hi:.1f}] K: dk = {f_lo:.1f} and {f_hi:.1f} 1/m at the ends")
    root = brentq(mismatch, lo, hi, xtol=1e-10, rtol=1e-14, maxiter=200)
    if abs(mismatch(root)) > tol:
        raise ValueError(f"degeneracy solve did not converge: |dk| = {abs(mismatch(root)):.3g} 1/m")
    return root
