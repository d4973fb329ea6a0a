"""
Joint spectral amplitude of the down-converted pair, its Schmidt
decomposition and the heralded-photon two-photon interference overlap.

Matrices are indexed [signal, idler] on wavelength axes in metres. The
normalisation is sum(|f|^2) * dls * dli = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy.constants import c
from scipy.optimize import brentq

from .phasematch import CrystalSpec, PmfTable, degeneracy_solve, delta_k, ppktp_crystal, sinc_pmf
from .spectra import FrequencyGrid, PulseEnvelope, make_envelope
from .utils import fwhm

__all__ = [
    "JointGrid",
    "JointAmplitude",
    "SchmidtDecomposition",
    "Marginals",
    "SourceDesign",
    "SweepTable",
    "build_jsa",
    "marginals",
    "schmidt",
    "reduced_density",
    "heralded_hom_overlap",
    "hom_dip",
    "purity_sweep",
    "solve_design_parameter",
    "design_crystal",
]


@dataclass(frozen=True)
class JointGrid:
    signal: np.ndarray
    idler: np.ndarray

    def __post_init__(self):
        for name in ("signal", "idler"):
            axis = np.array(getattr(self, name), dtype=float)
            if axis.ndim != 1 or axis.size < 2:
                raise ValueError(f"{name} axis must be a 1-D array with at least two points")
            step = np.diff(axis)
            if np.any(step <= 0):
                raise ValueError(f"{name} axis must be strictly increasing")
            if not np.allclose(step, step[0], rtol=1e-6, atol=0):
                raise ValueError(f"{name} axis must be uniformly spaced")
            axis.setflags(write=False)
            object.__setattr__(self, name, axis)

    @classmethod
    def around(cls, center_signal, center_idler, half_width, n_points=256):
        return cls(np.linspace(center_signal - half_width, center_signal + half_width, n_points),
                   np.linspace(center_idler - half_width, center_idler + half_width, n_points))

    @property
    def shape(self):
        return self.signal.size, self.idler.size

    @property
    def ds(self):
        return float(self.signal[1] - self.signal[0])

    @property
    def di(self):
        return float(self.idler[1] - self.idler[0])

    def same_as(self, other: "JointGrid") -> bool:
        return (self.shape == other.shape and np.allclose(self.signal, other.signal, rtol=1e-12)
                and np.allclose(self.idler, other.idler, rtol=1e-12))


@dataclass(frozen=True)
class JointAmplitude:
    grid: JointGrid
    f: np.ndarray

    def __post_init__(self):
        f = np.array(self.f, dtype=complex)
        if f.shape != self.grid.shape:
            raise ValueError(f"matrix shape {f.shape} does not match grid {self.grid.shape}")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @classmethod
    def normalized(cls, grid: JointGrid, f) -> "JointAmplitude":
        f = np.asarray(f, dtype=complex)
        norm = np.sqrt(np.sum(np.abs(f) ** 2) * grid.ds * grid.di)
        if norm == 0 or not np.isfinite(norm):
            raise ValueError("joint amplitude is zero or non-finite")
        return cls(grid, f / norm)

    @property
    def jsi(self):
        return np.abs(self.f) ** 2

    def weights(self):
        """Matrix with unit Frobenius norm: the discrete two-photon state."""
        return self.f * np.sqrt(self.grid.ds * self.grid.di)


class Marginals(NamedTuple):
    signal: np.ndarray
    idler: np.ndarray
    fwhm_signal: float
    fwhm_idler: float


@dataclass(frozen=True)
class SchmidtDecomposition:
    singular_values: np.ndarray
    K: float
    purity: float
    signal_modes: Optional[np.ndarray] = field(default=None, repr=False)
    idler_modes: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def probabilities(self):
        return self.singular_values**2


def design_crystal(temperature=298.15, pump_wavelength=775e-9, apodization_fwhm: Optional[float] = 14.6e-3,
                   convention="nonlinearity", length=27.5e-3) -> CrystalSpec:
    """Apodized ppKTP with the poling period solved for degenerate emission."""
    crystal = ppktp_crystal(length=length, temperature=temperature, apodization_fwhm=apodization_fwhm,
                            convention=convention)
    period = degeneracy_solve(crystal, pump_wavelength, "poling_period")
    return crystal.replace(poling_period=period)


def _pmf_evaluator(crystal, dk_min, dk_max):
    if crystal.apodization is None:
        return lambda dk: sinc_pmf(dk, crystal.length)
    return PmfTable(crystal, dk_min, dk_max)


def _raw_jsa(pump, crystal, signal, idler, evaluate=None):
    ls, li = np.meshgrid(signal, idler, indexing="ij")
    nu_sum = c / ls + c / li
    dk = delta_k(crystal, ls, li)
    if evaluate is None:
        evaluate = _pmf_evaluator(crystal, dk.min(), dk.max())
    return pump.at(nu_sum) * evaluate(dk)


def build_jsa(pump: PulseEnvelope, crystal: CrystalSpec, grid: JointGrid,
              coverage: float = 0.99, phase_matching: bool = True) -> JointAmplitude:
    """f(ls, li) = alpha(nu_s + nu_i) * Phi(dk(ls, li)), L2-normalised.

    The grid must capture at least ``coverage`` of the total two-photon weight,
    judged on a coarse grid three times wider. ``phase_matching=False``
    replaces Phi by one (pump-only JSA).
    """
    if phase_matching:
        # one table serves the grid and the wider coverage probe
        half_s = 1.5 * (grid.signal[-1] - grid.signal[0])
        half_i = 1.5 * (grid.idler[-1] - grid.idler[0])
        cs, ci = grid.signal.mean(), grid.idler.mean()
        wide_s = np.linspace(cs - half_s, cs + half_s, 193)
        wide_i = np.linspace(ci - half_i, ci + half_i, 193)
        corners = delta_k(crystal, np.array([wide_s[0], wide_s[0], wide_s[-1], wide_s[-1]]),
                          np.array([wide_i[0], wide_i[-1], wide_i[0], wide_i[-1]]))
        evaluate = _pmf_evaluator(crystal, corners.min(), corners.max())
    else:
        evaluate = np.ones_like
        wide_s = wide_i = None

    f = _raw_jsa(pump, crystal, grid.signal, grid.idler, evaluate)
    if coverage and wide_s is not None:
        wide = np.abs(_raw_jsa(pump, crystal, wide_s, wide_i, evaluate)) ** 2
        inside = np.outer((wide_s >= grid.signal[0]) & (wide_s <= grid.signal[-1]),
                          (wide_i >= grid.idler[0]) & (wide_i <= grid.idler[-1]))
        total = wide.sum()
        captured = wide[inside].sum() / total if total > 0 else 0.0
        if captured < coverage:
            raise ValueError(f"joint grid captures only {captured:.4f} of the two-photon weight "
                             f"(need {coverage}); widen or recentre the grid")
    return JointAmplitude.normalized(grid, f)


def marginals(jsa: JointAmplitude) -> Marginals:
    jsi = jsa.jsi
    ms = jsi.sum(axis=1) * jsa.grid.di
    mi = jsi.sum(axis=0) * jsa.grid.ds
    return Marginals(ms, mi, fwhm(jsa.grid.signal, ms), fwhm(jsa.grid.idler, mi))


def schmidt(source: Union[JointAmplitude, np.ndarray], source_kind: str = "amplitude",
            modes: bool = False) -> SchmidtDecomposition:
    """Schmidt decomposition by SVD, K = 1 / sum(lambda_i^4).

    ``source_kind='intensity'`` takes a JSI (or the JSI of a JointAmplitude)
    and decomposes its elementwise square root; without phase information
    this gives an upper bound on the purity.
    """
    if isinstance(source, JointAmplitude):
        matrix = source.f if source_kind == "amplitude" else source.jsi
    else:
        matrix = np.asarray(source)
    if source_kind == "intensity":
        matrix = np.asarray(matrix)
        if np.iscomplexobj(matrix) or np.any(matrix < 0):
            raise ValueError("a joint spectral intensity must be real and non-negative")
        matrix = np.sqrt(matrix)
    elif source_kind != "amplitude":
        raise ValueError(f"source_kind must be 'amplitude' or 'intensity', got {source_kind!r}")
    if not np.any(matrix):
        raise ValueError("cannot decompose an all-zero matrix")

    if modes:
        u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    else:
        s = np.linalg.svd(matrix, compute_uv=False)
        u = vh = None
    s = s / np.sqrt(np.sum(s**2))
    K = 1.0 / np.sum(s**4)
    return SchmidtDecomposition(s, float(K), float(1.0 / K), u, None if vh is None else vh.T)


def reduced_density(jsa: JointAmplitude) -> np.ndarray:
    """Heralded signal density matrix, idler traced out (unit trace)."""
    w = jsa.weights()
    return w @ w.conj().T


def _delay_phases(grid, delay):
    omega = 2 * np.pi * c / grid.signal
    return np.exp(1j * omega * delay)


def heralded_hom_overlap(jsa_a: JointAmplitude, jsa_b: JointAmplitude, delay: float = 0.0) -> float:
    """Re Tr[rho_A U rho_B U^dagger] for heralded signal photons from two sources.

    This is the dip visibility (C_max - C_min)/C_max of the balanced-splitter
    coincidence probability P = (1 - overlap) / 2 when the dip is at ``delay``.
    """
    if not jsa_a.grid.same_as(jsa_b.grid):
        raise ValueError("both joint amplitudes must share the same grid")
    rho_a = reduced_density(jsa_a)
    rho_b = reduced_density(jsa_b)
    phase = _delay_phases(jsa_a.grid, delay)
    # Tr[A U B U+] = sum_jk A_jk u_k B_kj conj(u_j)
    return float(np.real(np.sum(rho_a * (phase[None, :] * rho_b.T * phase.conj()[:, None]))))


def hom_dip(jsa_a: JointAmplitude, jsa_b: JointAmplitude, delays) -> np.ndarray:
    """Balanced-splitter coincidence probability versus relative delay."""
    if not jsa_a.grid.same_as(jsa_b.grid):
        raise ValueError("both joint amplitudes must share the same grid")
    rho_a = reduced_density(jsa_a)
    rho_b_t = reduced_density(jsa_b).T
    out = []
    for tau in np.atleast_1d(delays):
        phase = _delay_phases(jsa_a.grid, tau)
        out.append(0.5 * (1 - np.real(np.sum(rho_a * (phase[None, :] * rho_b_t * phase.conj()[:, None])))))
    return np.array(out)


@dataclass(frozen=True)
class SourceDesign:
    """Everything needed to build the design JSA."""

    crystal: CrystalSpec = field(default_factory=design_crystal)
    pump_wavelength: float = 775e-9
    pump_fwhm: float = 0.6e-9
    pump_gdd: float = 0.0
    pump_shape: str = "gaussian"
    half_width: float = 7e-9
    n_points: int = 256

    def replace(self, **changes) -> "SourceDesign":
        return replace(self, **changes)

    def pump(self) -> PulseEnvelope:
        # wide enough for every sum frequency on the joint grid
        nu_p = c / self.pump_wavelength
        span = max(8 * c * self.pump_fwhm / self.pump_wavelength**2,
                   4 * c * self.half_width / (2 * self.pump_wavelength) ** 2)
        grid = FrequencyGrid(nu_p, span, 4096)
        return make_envelope(self.pump_shape, self.pump_wavelength, self.pump_fwhm, self.pump_gdd, grid)

    def grid(self) -> JointGrid:
        lam = 2 * self.pump_wavelength
        return JointGrid.around(lam, lam, self.half_width, self.n_points)

    def jsa(self, **kwargs) -> JointAmplitude:
        return build_jsa(self.pump(), self.crystal, self.grid(), **kwargs)


class SweepTable(NamedTuple):
    parameter: str
    values: np.ndarray
    K: np.ndarray
    fwhm_signal: np.ndarray
    fwhm_idler: np.ndarray
    best_value: float
    best_K: float


def _apply(design: SourceDesign, parameter: str, value: float) -> SourceDesign:
    if parameter == "pump_fwhm":
        return design.replace(pump_fwhm=value)
    if parameter == "pump_gdd":
        return design.replace(pump_gdd=value)
    if parameter == "apodization_fwhm":
        apod = design.crystal.apodization
        if apod is None:
            raise ValueError("design crystal has no apodization to sweep")
        return design.replace(crystal=design.crystal.replace(apodization=replace(apod, fwhm=value)))
    raise ValueError(f"cannot sweep {parameter!r}; choose pump_fwhm, pump_gdd or apodization_fwhm")


def purity_sweep(parameter: str, values, design: Optional[SourceDesign] = None) -> SweepTable:
    """K and marginal widths across a scan of one design parameter."""
    design = design or SourceDesign()
    values = np.asarray(values, dtype=float)
    K, ws, wi = [], [], []
    for v in values:
        jsa = _apply(design, parameter, v).jsa()
        K.append(schmidt(jsa).K)
        m = marginals(jsa)
        ws.append(m.fwhm_signal)
        wi.append(m.fwhm_idler)
    K = np.array(K)
    best = int(np.argmin(K))
    return SweepTable(parameter, values, K, np.array(ws), np.array(wi), float(values[best]), float(K[best]))


def solve_design_parameter(parameter: str, target_K: float, bracket, design: Optional[SourceDesign] = None,
                           xtol: Optional[float] = None) -> float:
    """Value of one design parameter giving Schmidt number ``target_K`` (Brent's method)."""
    design = design or SourceDesign()

    def mismatch(v):
        return schmidt(_apply(design, parameter, v).jsa()).K - target_K

    lo, hi = bracket
    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise ValueError(f"K - target does not change sign on [{lo:.4g}, {hi:.4g}] "
                         f"({f_lo:+.3g}, {f_hi:+.3g})")
    return brentq(mismatch, lo, hi, xtol=xtol or 1e-6 * abs(hi - lo))
