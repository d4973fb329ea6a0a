"""
Classical pulse optics for the pump chain: seed envelopes, bandwidth and
duration conversions, grating dispersion, slit filtering and second-harmonic
conversion to the down-conversion pump.

Spectral amplitudes live on a uniform optical-frequency grid and are
L2-normalised so that sum(|a|^2) * dnu = 1. Spectral phase follows
phi(omega) = gdd/2 (omega - omega0)^2 + tod/6 (omega - omega0)^3.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.constants import c
from scipy.optimize import brentq

from .phasematch import CrystalSpec, PmfTable, delta_k, sinc_pmf
from .utils import fwhm

log = logging.getLogger(__name__)

__all__ = [
    "FrequencyGrid",
    "PulseEnvelope",
    "DispersionSpec",
    "TimeBandwidth",
    "TBP_LIMIT",
    "AUTOCORRELATION_FACTOR",
    "make_envelope",
    "bandwidth_convert",
    "time_bandwidth",
    "temporal_intensity",
    "autocorrelation_fwhm",
    "residual_gdd",
    "broadened_duration",
    "grating_stretcher_gdd",
    "slit_filter",
    "solve_slit_width",
    "shg_convert",
]

TBP_LIMIT = {"gaussian": 2 * np.log(2) / np.pi, "sech2": (2 * np.arccosh(np.sqrt(2)) / np.pi) ** 2}
# intensity autocorrelation FWHM / pulse FWHM
AUTOCORRELATION_FACTOR = {"gaussian": np.sqrt(2), "sech2": 1.543}


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform optical-frequency axis. Index n_points // 2 sits on the centre."""

    center_frequency: float
    span: float
    n_points: int = 1024

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError("a frequency grid needs at least 16 points")
        if not self.span > 0:
            raise ValueError("grid span must be positive")
        if self.span / 2 >= self.center_frequency:
            raise ValueError("grid extends to non-positive frequencies")

    @classmethod
    def around(cls, center_wavelength, fwhm_wavelength, n_points=1024, factor=8.0):
        """Grid centred on a wavelength spanning ``factor`` times the FWHM."""
        return cls(c / center_wavelength, factor * bandwidth_convert(center_wavelength, fwhm_wavelength),
                   n_points)

    @property
    def spacing(self):
        return self.span / self.n_points

    @property
    def frequencies(self):
        return self.center_frequency + (np.arange(self.n_points) - self.n_points // 2) * self.spacing

    @property
    def wavelengths(self):
        return c / self.frequencies

    @property
    def wavelength_step(self):
        """Grid step expressed in wavelength at the centre."""
        return c * self.spacing / self.center_frequency**2


@dataclass(frozen=True)
class PulseEnvelope:
    grid: FrequencyGrid
    amplitude: np.ndarray
    center_wavelength: float
    shape_tag: str = "custom"

    def __post_init__(self):
        a = np.array(self.amplitude, dtype=complex)
        if a.shape != (self.grid.n_points,):
            raise ValueError("amplitude length does not match the grid")
        if not np.all(np.isfinite(a)):
            raise ValueError("envelope amplitude must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "amplitude", a)

    @classmethod
    def normalized(cls, grid, amplitude, center_wavelength, shape_tag="custom"):
        a = np.asarray(amplitude, dtype=complex)
        norm = np.sqrt(np.sum(np.abs(a) ** 2) * grid.spacing)
        if norm == 0:
            raise ValueError("cannot normalise an all-zero envelope")
        return cls(grid, a / norm, center_wavelength, shape_tag)

    @property
    def frequencies(self):
        return self.grid.frequencies

    @property
    def intensity(self):
        return np.abs(self.amplitude) ** 2

    @property
    def center_frequency(self):
        return c / self.center_wavelength

    def norm(self):
        return float(np.sum(self.intensity) * self.grid.spacing)

    def fwhm_frequency(self):
        return fwhm(self.frequencies, self.intensity)

    def fwhm_wavelength(self):
        lo, hi = _crossings(self.frequencies, self.intensity)
        return c / lo - c / hi

    def spectral_phase(self):
        return np.unwrap(np.angle(self.amplitude))

    def at(self, frequency):
        """Complex amplitude at arbitrary frequencies (zero outside the grid).

        Magnitude and unwrapped phase are interpolated separately, which keeps
        strongly chirped spectra accurate.
        """
        from scipy.interpolate import CubicSpline

        nu = self.frequencies
        mag = CubicSpline(nu, np.abs(self.amplitude))
        phase = CubicSpline(nu, self.spectral_phase())
        f = np.asarray(frequency, dtype=float)
        out = mag(f) * np.exp(1j * phase(f))
        out[(f < nu[0]) | (f > nu[-1])] = 0.0
        return out


def _crossings(x, y):
    from .utils import half_max_crossings

    return half_max_crossings(x, y)


@dataclass(frozen=True)
class DispersionSpec:
    gdd: float
    tod: float = 0.0

    def phase(self, omega_offset):
        return 0.5 * self.gdd * omega_offset**2 + self.tod / 6.0 * omega_offset**3

    def apply(self, envelope: PulseEnvelope) -> PulseEnvelope:
        """Pure spectral-phase operation about the envelope's centre frequency."""
        w = 2 * np.pi * (envelope.frequencies - envelope.center_frequency)
        return PulseEnvelope(envelope.grid, envelope.amplitude * np.exp(1j * self.phase(w)),
                             envelope.center_wavelength, envelope.shape_tag)

    def __add__(self, other: "DispersionSpec") -> "DispersionSpec":
        return DispersionSpec(self.gdd + other.gdd, self.tod + other.tod)

    def __neg__(self):
        return DispersionSpec(-self.gdd, -self.tod)


def bandwidth_convert(center_wavelength: float, fwhm_wavelength: float) -> float:
    """Narrow-band conversion dnu = c dlambda / lambda0^2 (Hz)."""
    if not center_wavelength > 0:
        raise ValueError("centre wavelength must be positive")
    if fwhm_wavelength < 0:
        raise ValueError("bandwidth must be non-negative")
    if fwhm_wavelength >= center_wavelength / 2:
        raise ValueError("narrow-band approximation invalid for dlambda >= lambda0/2")
    return c * fwhm_wavelength / center_wavelength**2


def _exact_frequency_fwhm(center_wavelength, fwhm_wavelength):
    # frequency FWHM whose half-maximum points sit exactly fwhm_wavelength apart
    r = fwhm_wavelength / center_wavelength
    return 2 * c * (np.sqrt(1 + r**2) - 1) / fwhm_wavelength


def make_envelope(shape: str, center_wavelength: float, fwhm_wavelength: float,
                  gdd: float = 0.0, grid: Optional[FrequencyGrid] = None, tod: float = 0.0) -> PulseEnvelope:
    """Gaussian or sech^2 spectrum with the requested intensity FWHM in wavelength.

    The default grid has 1024 points over eight FWHM.
    """
    if shape not in ("gaussian", "sech2"):
        raise ValueError(f"unknown envelope shape {shape!r}")
    if not fwhm_wavelength > 0:
        raise ValueError("FWHM must be positive")
    if grid is None:
        grid = FrequencyGrid.around(center_wavelength, fwhm_wavelength)
    dnu = _exact_frequency_fwhm(center_wavelength, fwhm_wavelength)
    if grid.span < 2 * dnu:
        raise ValueError(f"grid span {grid.span:.4g} Hz is narrower than twice the FWHM ({2 * dnu:.4g} Hz)")
    if grid.span < 4 * dnu:
        warnings.warn("grid span below four FWHM; spectral wings are truncated", stacklevel=2)
    x = grid.frequencies - c / center_wavelength
    if shape == "gaussian":
        amp = np.exp(-2 * np.log(2) * x**2 / dnu**2)
    else:
        amp = 1.0 / np.cosh(2 * np.arccosh(np.sqrt(2)) * x / dnu)
    env = PulseEnvelope.normalized(grid, amp, center_wavelength, shape)
    if gdd or tod:
        env = DispersionSpec(gdd, tod).apply(env)
    return env


class TimeBandwidth(NamedTuple):
    duration_fwhm: float
    bandwidth_fwhm: float
    tbp: float


def temporal_intensity(envelope: PulseEnvelope, pad: int = 32):
    """(t, |E(t)|^2) from the zero-padded inverse Fourier transform of the amplitude."""
    n = envelope.grid.n_points
    big = n * pad
    field = np.zeros(big, dtype=complex)
    start = big // 2 - n // 2
    field[start:start + n] = envelope.amplitude
    e_t = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(field)))
    t = (np.arange(big) - big // 2) / (big * envelope.grid.spacing)
    intensity = np.abs(e_t) ** 2
    return t, intensity / intensity.max()


def time_bandwidth(envelope: PulseEnvelope, pad: int = 32) -> TimeBandwidth:
    t, intensity = temporal_intensity(envelope, pad)
    duration = fwhm(t, intensity)
    bandwidth = envelope.fwhm_frequency()
    return TimeBandwidth(duration, bandwidth, duration * bandwidth)


def autocorrelation_fwhm(envelope: PulseEnvelope, pad: int = 32) -> float:
    """FWHM of the intensity autocorrelation, as an autocorrelator would report."""
    t, intensity = temporal_intensity(envelope, pad)
    spec = np.fft.fft(intensity)
    ac = np.fft.fftshift(np.fft.ifft(np.abs(spec) ** 2).real)
    return fwhm(t, ac)


def broadened_duration(transform_limited_duration: float, gdd: float) -> float:
    """Gaussian pulse FWHM after quadratic spectral phase."""
    t0 = transform_limited_duration
    return t0 * np.sqrt(1 + (4 * np.log(2) * gdd / t0**2) ** 2)


def residual_gdd(duration_fwhm: float, bandwidth_fwhm: float, shape: str = "gaussian") -> float:
    """|GDD| implied by a measured duration exceeding the transform limit (Gaussian law)."""
    t0 = TBP_LIMIT[shape] / bandwidth_fwhm
    ratio = duration_fwhm / t0
    if ratio < 1:
        raise ValueError(f"duration {duration_fwhm:.4g} s is below the transform limit {t0:.4g} s")
    return t0**2 / (4 * np.log(2)) * np.sqrt(ratio**2 - 1)


def grating_stretcher_gdd(groove_density: float, incidence_angle: float, defocus: float,
                          n_passes: int, wavelength: float, order: int = 1) -> float:
    """GDD (s^2) of a defocused Martinez telescope.

    The telescope is treated as a grating pair of perpendicular separation
    2 * defocus; each pair of grating passes contributes the single-pass
    grating-pair GDD -m^2 lambda^3 L / (2 pi c^2 d^2 cos^3 theta_d).
    """
    sin_d = order * wavelength * groove_density - np.sin(incidence_angle)
    if abs(sin_d) >= 1:
        raise ValueError(f"diffraction order {order} is evanescent (sin theta_d = {sin_d:.3f})")
    cos_d = np.sqrt(1 - sin_d**2)
    separation = 2.0 * defocus
    per_pair = -(order**2 * wavelength**3 * groove_density**2 * separation) / (2 * np.pi * c**2 * cos_d**3)
    return n_passes / 2 * per_pair


def slit_filter(envelope: PulseEnvelope, center_wavelength: float, passband_fwhm: float,
                edge: str = "gaussian"):
    """Spectral slit in the dispersed plane.

    Returns (filtered envelope, transmitted power fraction). ``edge='hard'``
    is a top-hat of full width ``passband_fwhm``; ``'gaussian'`` has that
    intensity FWHM.
    """
    if passband_fwhm <= 2 * envelope.grid.wavelength_step:
        raise ValueError("passband must exceed two grid steps")
    lam = envelope.grid.wavelengths
    if edge == "hard":
        transmission = (np.abs(lam - center_wavelength) <= passband_fwhm / 2).astype(float)
    elif edge == "gaussian":
        transmission = np.exp(-4 * np.log(2) * (lam - center_wavelength) ** 2 / passband_fwhm**2)
    else:
        raise ValueError(f"unknown slit edge {edge!r}")
    filtered = envelope.amplitude * np.sqrt(transmission)
    fraction = float(np.sum(np.abs(filtered) ** 2) * envelope.grid.spacing)
    if fraction <= 0 or not np.any(transmission > 0):
        raise ValueError("slit passband transmits nothing")
    out = PulseEnvelope.normalized(envelope.grid, filtered, envelope.center_wavelength, "custom")
    return out, fraction


def solve_slit_width(envelope: PulseEnvelope, target_fwhm: float, center_wavelength: Optional[float] = None,
                     edge: str = "gaussian") -> float:
    """Slit width producing a filtered spectrum with the target wavelength FWHM."""
    lam0 = envelope.center_wavelength if center_wavelength is None else center_wavelength
    current = envelope.fwhm_wavelength()
    if target_fwhm >= current:
        raise ValueError("target bandwidth must be narrower than the input")

    def mismatch(width):
        return slit_filter(envelope, lam0, width, edge)[0].fwhm_wavelength() - target_fwhm

    lo = 2.5 * envelope.grid.wavelength_step
    hi = 50 * current
    return brentq(mismatch, lo, hi, xtol=1e-16)


def shg_convert(envelope: PulseEnvelope, crystal: CrystalSpec, ideal_phase_matching: bool = False,
                acceptance_floor: float = 1e-3) -> PulseEnvelope:
    """Second-harmonic spectrum in the undepleted-pump limit.

    A_out(Omega) ~ sum_nu A(nu) A(Omega - nu) Phi(dk(nu, Omega - nu)), with the
    full two-frequency mismatch of the poled crystal. The output grid shares
    the input spacing and is centred on twice the input centre frequency.
    """
    grid = envelope.grid
    n = grid.n_points
    nu = grid.frequencies
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    m = k - j + n // 2
    valid = (m >= 0) & (m < n)
    mc = np.clip(m, 0, n - 1)
    a = envelope.amplitude
    pair = np.where(valid, a[None, :] * a[mc], 0.0)

    if ideal_phase_matching:
        phi = np.ones_like(pair)
    else:
        weight = np.abs(pair)
        live = weight > 1e-12 * weight.max()
        lam1 = c / np.broadcast_to(nu[None, :], pair.shape)[live]
        lam2 = c / nu[mc][live]
        dk = delta_k(crystal, lam1, lam2)
        if crystal.apodization is None:
            values = sinc_pmf(dk, crystal.length)
        else:
            values = PmfTable(crystal, dk.min(), dk.max())(dk)
        phi = np.zeros_like(pair)
        phi[live] = values
        accepted = np.sum(weight * np.abs(phi)) / np.sum(weight)
        if accepted < acceptance_floor:
            raise ValueError(
                f"phase-matching acceptance misses the input band (weighted |Phi| = {accepted:.2e}); "
                f"check the crystal temperature/period against {envelope.center_wavelength * 1e9:.2f} nm")

    out = np.sum(pair * phi, axis=1) * grid.spacing
    out_grid = FrequencyGrid(2 * grid.center_frequency, grid.span, n)
    result = PulseEnvelope.normalized(out_grid, out, envelope.center_wavelength / 2, "custom")
    log.debug("SHG output FWHM %.4f nm", result.fwhm_wavelength() * 1e9)
    return result
