"""
Time-of-flight spectrometer: dispersive fibre maps wavelength to arrival
time, detectors add Gaussian jitter, and a 2-D arrival-time histogram is
inverted back to a joint spectral intensity.

Arrival times are measured from a jitter-free start (the pump photodiode)
and fall in one pulse frame; the reference wavelength lands mid-frame.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.constants import c
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize_scalar

from .counting import DetectorModel, block_rng
from .jsa import JointAmplitude, JointGrid

__all__ = [
    "TofSpec", "TofHistogram", "ReconstructedJsi", "SwapCalibration",
    "simulate_tof", "reconstruct_jsi", "swap_calibrate", "matched_grid", "total_variation",
]

PS_PER_NM = 1e-12 / 1e-9

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class TofSpec:
    """Dispersive channel. ``dispersion`` in s per metre of wavelength
    (1360 ps/nm is 1.36e-9 * 1e9 = 1.36 s/m); ``insertion_loss`` is the
    fraction of photons lost."""

    dispersion: float
    reference_wavelength: float
    insertion_loss: float = 0.0
    frame: float = 10e-9

    def __post_init__(self):
        if self.dispersion == 0:
            raise ValueError("dispersion must be non-zero")
        if not 0 <= self.insertion_loss < 1:
            raise ValueError("insertion_loss must be in [0, 1)")
        if self.frame <= 0:
            raise ValueError("frame must be positive")

    @classmethod
    def from_ps_per_nm(cls, ps_per_nm, reference_wavelength, insertion_loss=0.0, frame=10e-9):
        return cls(ps_per_nm * PS_PER_NM, reference_wavelength, insertion_loss, frame)

    @property
    def ps_per_nm(self):
        return self.dispersion / PS_PER_NM

    def replace(self, **changes) -> "TofSpec":
        return replace(self, **changes)

    def arrival(self, wavelength):
        return self.dispersion * (np.asarray(wavelength) - self.reference_wavelength) + 0.5 * self.frame

    def wavelength(self, time):
        return self.reference_wavelength + (np.asarray(time) - 0.5 * self.frame) / self.dispersion


class TofHistogram(NamedTuple):
    counts: np.ndarray  # [signal time bin, idler time bin]
    edges_s: np.ndarray
    edges_i: np.ndarray
    n_generated: int

    @property
    def centers_s(self):
        return 0.5 * (self.edges_s[1:] + self.edges_s[:-1])

    @property
    def centers_i(self):
        return 0.5 * (self.edges_i[1:] + self.edges_i[:-1])


class ReconstructedJsi(NamedTuple):
    grid: JointGrid
    jsi: np.ndarray  # sums to 1
    sigma: np.ndarray
    total_counts: int


def _frame_edges(spec: TofSpec, bins: int):
    return np.linspace(0.0, spec.frame, bins + 1)


def matched_grid(spec_s: TofSpec, spec_i: TofSpec, bins: int = 128) -> JointGrid:
    """Wavelength grid whose cells map one-to-one onto the time bins."""
    axes = []
    for spec in (spec_s, spec_i):
        edges = _frame_edges(spec, bins)
        axes.append(np.sort(spec.wavelength(0.5 * (edges[1:] + edges[:-1]))))
    return JointGrid(*axes)


def _as_jsi(true_jsi):
    if isinstance(true_jsi, JointAmplitude):
        return true_jsi.grid, true_jsi.jsi
    grid, jsi = true_jsi
    jsi = np.asarray(jsi, dtype=float)
    if jsi.shape != grid.shape or np.any(jsi < 0) or not jsi.any():
        raise ValueError("JSI must be non-negative, non-zero and match its grid")
    return grid, jsi


def _check_wraparound(grid: JointGrid, spec_s: TofSpec, spec_i: TofSpec):
    for axis, step, spec, name in ((grid.signal, grid.ds, spec_s, "signal"), (grid.idler, grid.di, spec_i, "idler")):
        ends = spec.arrival(np.array([axis[0] - step / 2, axis[-1] + step / 2]))
        if ends.min() < -1e-12 * spec.frame or ends.max() > spec.frame * (1 + 1e-12):
            raise ValueError(f"{name} band maps to {ends.min()*1e12:.0f}..{ends.max()*1e12:.0f} ps, "
                             f"outside the {spec.frame*1e12:.0f} ps frame (wraparound)")


def _tof_block(grid, cdf, spec_s, spec_i, det_s, det_i, n, seed, block, edges_s, edges_i):
    rng = block_rng(seed, block)
    cell = np.searchsorted(cdf, rng.random(n), side="right")
    cell = np.minimum(cell, cdf.size - 1)
    i_s, i_i = np.divmod(cell, grid.shape[1])
    lam_s = grid.signal[i_s] + (rng.random(n) - 0.5) * grid.ds
    lam_i = grid.idler[i_i] + (rng.random(n) - 0.5) * grid.di
    # standard normals are always drawn so jitter scans share random numbers
    z_s, z_i = rng.standard_normal(n), rng.standard_normal(n)
    t_s = spec_s.arrival(lam_s) + det_s.jitter_fwhm * FWHM_TO_SIGMA * z_s
    t_i = spec_i.arrival(lam_i) + det_i.jitter_fwhm * FWHM_TO_SIGMA * z_i
    keep_s = rng.random(n) < (1 - spec_s.insertion_loss) * det_s.efficiency
    keep_i = rng.random(n) < (1 - spec_i.insertion_loss) * det_i.efficiency
    keep = keep_s & keep_i
    counts, _, _ = np.histogram2d(t_s[keep], t_i[keep], bins=(edges_s, edges_i))
    return counts.astype(np.int64)


def simulate_tof(true_jsi, spec_s: TofSpec, spec_i: TofSpec, detectors=(DetectorModel(1.0), DetectorModel(1.0)),
                 n_events: int = 10**6, seed: int = 0, bins: int = 128, threads: int = 1,
                 block_events: int = 1 << 20) -> TofHistogram:
    """Arrival-time histogram of ``n_events`` generated pairs.

    ``true_jsi`` is a JointAmplitude or a (JointGrid, jsi matrix) pair.
    Wavelengths are drawn uniformly within each grid cell. Only pairs with
    both photons surviving loss and detection are histogrammed.
    """
    grid, jsi = _as_jsi(true_jsi)
    _check_wraparound(grid, spec_s, spec_i)
    det_s, det_i = detectors
    cdf = np.cumsum(jsi.ravel())
    cdf /= cdf[-1]
    edges_s, edges_i = _frame_edges(spec_s, bins), _frame_edges(spec_i, bins)
    starts = list(range(0, int(n_events), block_events))

    def job(b):
        n = min(block_events, int(n_events) - starts[b])
        return _tof_block(grid, cdf, spec_s, spec_i, det_s, det_i, n, seed, b, edges_s, edges_i)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(job, range(len(starts))))
    else:
        parts = [job(b) for b in range(len(starts))]
    counts = np.sum(parts, axis=0) if parts else np.zeros((bins, bins), dtype=np.int64)
    return TofHistogram(counts, edges_s, edges_i, int(n_events))


def reconstruct_jsi(hist: TofHistogram, spec_s: TofSpec, spec_i: TofSpec) -> ReconstructedJsi:
    """Invert the time-to-wavelength map; returns a unit-sum JSI with Poisson sigmas."""
    total = int(hist.counts.sum())
    if total == 0:
        raise ValueError("empty histogram")
    lam_s = spec_s.wavelength(hist.centers_s)
    lam_i = spec_i.wavelength(hist.centers_i)
    order_s, order_i = np.argsort(lam_s), np.argsort(lam_i)
    counts = hist.counts[np.ix_(order_s, order_i)].astype(float)
    grid = JointGrid(lam_s[order_s], lam_i[order_i])
    return ReconstructedJsi(grid, counts / total, np.sqrt(counts) / total, total)


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


class SwapCalibration(NamedTuple):
    reference_s: float  # corrected reference wavelengths
    reference_i: float
    offset_s: float  # frequency correction added to each arm's nominal axis, Hz
    offset_i: float
    reflection_axis: float  # nu_pump / 2 in the corrected frame, Hz
    residual: float  # L1 mismatch as a fraction of histogram mass
    reduced_chi2: float  # mismatch against Poisson counting noise, ~1 for a true mirror image


def _freq_axes(hist, spec_s, spec_i):
    nu_s = c / spec_s.wavelength(hist.centers_s)
    nu_i = c / spec_i.wavelength(hist.centers_i)
    return nu_s, nu_i


def _sorted_interp(nu_a, nu_b, values):
    oa, ob = np.argsort(nu_a), np.argsort(nu_b)
    return RegularGridInterpolator((nu_a[oa], nu_b[ob]), values[np.ix_(oa, ob)], bounds_error=False, fill_value=0.0)


def swap_calibrate(hist_ab: TofHistogram, hist_swapped: TofHistogram, spec_a: TofSpec, spec_b: TofSpec,
                   pump_wavelength: float, max_chi2: float = 3.0) -> SwapCalibration:
    """Absolute wavelength calibration of both arms from a swapped-arm pair.

    With nominal axes off by unknown frequency offsets e_a and e_b, the
    swapped histogram equals the transposed direct one shifted by
    e_a - e_b. The shift is found by minimising the L1 mismatch; energy
    conservation (mean nu_a + nu_b = nu_pump) then fixes e_a + e_b.
    A pair whose best match still exceeds ``max_chi2`` (reduced chi-square
    against counting noise) is rejected.
    """
    h1 = hist_ab.counts.astype(float)
    h2 = hist_swapped.counts.astype(float)
    if h1.sum() == 0 or h2.sum() == 0:
        raise ValueError("empty histogram")
    if h1.shape[0] != h1.shape[1] or h1.shape != h2.shape:
        raise ValueError("swap calibration needs square histograms of equal shape")
    n1, n2 = h1.sum(), h2.sum()
    h1 /= n1
    h2 /= n2
    nu_a, nu_b = _freq_axes(hist_ab, spec_a, spec_b)
    # transposed direct histogram: first axis is arm b's axis evaluated on arm a's bins
    transposed = _sorted_interp(nu_b, nu_a, h1.T)
    A, B = np.meshgrid(nu_a, nu_b, indexing="ij")

    def mismatch(delta):
        model = transposed(np.stack([A + delta, B - delta], axis=-1))
        return np.abs(model - h2).sum()

    step = float(np.median(np.abs(np.diff(nu_a))))
    span = float(np.ptp(nu_a))
    trial = np.arange(-0.5 * span, 0.5 * span + step, step)
    values = [mismatch(d) for d in trial]
    best = trial[int(np.argmin(values))]
    res = minimize_scalar(mismatch, bounds=(best - step, best + step), method="bounded",
                          options={"xatol": 1e-4 * step})
    delta = float(res.x)
    residual = float(res.fun)
    model = transposed(np.stack([A + delta, B - delta], axis=-1))
    var = model / n1 + h2 / n2
    used = var > 0
    chi2 = float(np.sum((model - h2)[used] ** 2 / var[used]) / max(int(used.sum()) - 1, 1))
    if chi2 > max_chi2:
        raise ValueError(f"swapped histogram is not a mirror image (reduced chi2 {chi2:.3g}, "
                         f"L1 residual {residual:.1%} of mass)")

    nu_p = c / pump_wavelength
    mean_sum = float(np.sum(h1 * (A + B)))
    total = nu_p - mean_sum  # e_a + e_b
    e_a, e_b = 0.5 * (total + delta), 0.5 * (total - delta)

    def corrected_reference(spec, e):
        return c / (c / spec.reference_wavelength + e)

    return SwapCalibration(corrected_reference(spec_a, e_a), corrected_reference(spec_b, e_b),
                           e_a, e_b, 0.5 * nu_p, residual, chi2)
