"""
Three-fold interference between a heralded photon and a weak coherent local
oscillator (LO).

The heralded photon comes from two Schmidt modes u1, u2 with weights w and
1 - w, chosen so that w^2 + (1-w)^2 equals the requested purity. The LO
occupies v = o u1 + sqrt(1 - |o|^2) u3, with o the amplitude overlap. Both
paths below describe the same physics:

* ``analytic``: Gaussian-state threshold formula with LO displacement.
* ``fock``: heralded photon-number mixture and truncated-Fock beam splitter,
  one spectral mode at a time.

The zero-pump-power visibility always comes from the single-pair Fock
computation, which is exact in that limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.constants import c
from scipy.optimize import brentq
from scipy.stats import binom, poisson

from ..counting import DetectorModel
from ..jsa import JointAmplitude, marginals
from .fock import coherent_dm, fock_dm, fock_oracle
from .gaussian import GaussianState, click_probability, two_mode_squeezed

__all__ = ["LoConfig", "LoResult", "lo_hom", "marginal_autocorrelation", "mixture_weight", "fit_mode_overlap"]

IDEAL = DetectorModel(1.0)


@dataclass(frozen=True)
class LoConfig:
    mu_lo: float
    mode_overlap: complex = 1.0
    mu_pump: float = 0.0
    fock_cutoff: int = 6
    purity: float = 1.0
    splitter_ratio: float = 0.5
    eta_signal: float = 1.0
    eta_herald: float = 1.0
    # interferometer outputs D1, D2 and the herald
    detectors: tuple = (IDEAL, IDEAL, IDEAL)
    gate: float = 1e-9
    delays: Optional[np.ndarray] = None
    jsa: Optional[JointAmplitude] = None

    def __post_init__(self):
        if self.mu_lo < 0:
            raise ValueError("mu_lo must be non-negative")
        if abs(self.mode_overlap) > 1 + 1e-12:
            raise ValueError("|mode_overlap| must not exceed 1")
        if not 0.5 <= self.purity <= 1:
            raise ValueError("a two-mode mixture needs purity in [0.5, 1]")
        if self.fock_cutoff < 4:
            raise ValueError("fock_cutoff must be at least 4")

    def replace(self, **changes) -> "LoConfig":
        return replace(self, **changes)


def mixture_weight(purity: float) -> float:
    """Dominant-mode weight w with w^2 + (1-w)^2 = purity."""
    return 0.5 * (1 + math.sqrt(2 * purity - 1))


def marginal_autocorrelation(jsa: JointAmplitude, delays) -> np.ndarray:
    """Normalised first-order autocorrelation of the signal marginal spectrum."""
    spectrum = marginals(jsa).signal
    omega = 2 * np.pi * c / jsa.grid.signal
    omega = omega - omega.mean()
    weights = spectrum / spectrum.sum()
    return np.array([np.sum(weights * np.exp(1j * omega * tau)) for tau in np.atleast_1d(delays)])


class LoResult(NamedTuple):
    delays: np.ndarray
    threefold: np.ndarray  # per pulse
    threefold_distinguishable: float
    threefold_dip: float
    V: float
    V_zero_power: float
    lo_reduction: float


def _check_cutoff(cfg):
    tail = poisson.sf(cfg.fock_cutoff, cfg.mu_lo)
    if tail > 1e-8:
        raise ValueError(f"LO photon-number tail beyond cutoff {cfg.fock_cutoff} is {tail:.1e}; raise fock_cutoff")


def _analytic_threefold(cfg: LoConfig, overlap: complex) -> float:
    w = mixture_weight(cfg.purity)
    state = two_mode_squeezed([cfg.mu_pump * w, cfg.mu_pump * (1 - w)])
    # append the two LO modes (along u1 and along u3)
    N = np.zeros((6, 6), dtype=complex)
    M = np.zeros((6, 6), dtype=complex)
    N[:4, :4] = state.N
    M[:4, :4] = state.M
    beta = math.sqrt(cfg.mu_lo)
    mean = np.array([0, 0, 0, 0, overlap * beta, math.sqrt(max(1 - abs(overlap) ** 2, 0.0)) * beta])
    full = GaussianState(N, M, mean)
    d1, d2, dh = cfg.detectors
    R = cfg.splitter_ratio
    t, r = math.sqrt(R), math.sqrt(1 - R)
    s1, i1, s2, i2, l1, l3 = range(6)
    T = np.zeros((8, 6), dtype=complex)
    es, eh = math.sqrt(cfg.eta_signal), math.sqrt(cfg.eta_herald * dh.efficiency)
    a1, a2 = math.sqrt(d1.efficiency), math.sqrt(d2.efficiency)
    # D1 in modes u1, u2, u3
    T[0, s1], T[0, l1] = a1 * t * es, a1 * r
    T[1, s2] = a1 * t * es
    T[2, l3] = a1 * r
    # D2 in modes u1, u2, u3
    T[3, s1], T[3, l1] = a2 * r * es, -a2 * t
    T[4, s2] = a2 * r * es
    T[5, l3] = -a2 * t
    # herald
    T[6, i1] = eh
    T[7, i2] = eh
    out = full.transform(T)
    dark = {("c", 0): d1.dark_probability(cfg.gate), ("c", 1): d2.dark_probability(cfg.gate),
            ("c", 2): dh.dark_probability(cfg.gate)}
    return click_probability(out, [[0, 1, 2], [3, 4, 5], [6, 7]], dark=dark)


def _mode_outcomes(rho_a, rho_b, cfg):
    d1, d2, _ = cfg.detectors
    return fock_oracle(rho_a, rho_b, cfg.splitter_ratio, (d1.replace(dark_rate=0), d2.replace(dark_rate=0)))


def _heralded_numbers(cfg: LoConfig):
    """Weights of (k1, k2) photons reaching the splitter in modes u1, u2, joint with a herald click."""
    n_cut = cfg.fock_cutoff
    w = mixture_weight(cfg.purity)
    _, _, dh = cfg.detectors
    eta_h = cfg.eta_herald * dh.efficiency
    pd_h = dh.dark_probability(cfg.gate)
    n = np.arange(n_cut + 1)
    if cfg.mu_pump == 0:
        raise ValueError("use the zero-power branch for mu_pump = 0")

    def thermal(m):
        return m**n / (1 + m) ** (n + 1)

    p1, p2 = thermal(cfg.mu_pump * w), thermal(cfg.mu_pump * (1 - w))
    joint = np.outer(p1, p2)
    total = n[:, None] + n[None, :]
    joint = joint * (1 - (1 - pd_h) * (1 - eta_h) ** total)
    # photon loss on the way to the splitter
    thin = binom.pmf(n[None, :], n[:, None], cfg.eta_signal)  # thin[n, k]
    return thin.T @ joint @ thin


def _fock_coincidence(cfg: LoConfig, overlap: complex, k_weights) -> float:
    cut = cfg.fock_cutoff
    beta = math.sqrt(cfg.mu_lo)
    lo_u1 = coherent_dm(overlap * beta, cut)
    lo_u3 = coherent_dm(math.sqrt(max(1 - abs(overlap) ** 2, 0.0)) * beta, cut)
    vac = fock_dm(0, cut)
    d1, d2, _ = cfg.detectors
    q1 = 1 - d1.dark_probability(cfg.gate)
    q2 = 1 - d2.dark_probability(cfg.gate)
    o3 = _mode_outcomes(vac, lo_u3, cfg)
    cache = {}

    def outcome(k, lo):
        key = (k, id(lo))
        if key not in cache:
            cache[key] = _mode_outcomes(fock_dm(k, cut), lo, cfg)
        return cache[key]

    total = 0.0
    for k1 in range(cut + 1):
        for k2 in range(cut + 1):
            weight = k_weights[k1, k2]
            if weight < 1e-300:
                continue
            modes = (outcome(k1, lo_u1), outcome(k2, vac), o3)
            none = np.prod([m.p00 for m in modes]) * q1 * q2
            no1 = np.prod([m.p00 + m.p01 for m in modes]) * q1
            no2 = np.prod([m.p00 + m.p10 for m in modes]) * q2
            total += weight * (1 - no1 - no2 + none)
    return total


def _fock_threefold(cfg: LoConfig, overlap: complex) -> float:
    _check_cutoff(cfg)
    return _fock_coincidence(cfg, overlap, _heralded_numbers(cfg))


def _fock_zero_power(cfg: LoConfig, overlap: complex) -> float:
    """Coincidence probability given a herald, in the single-pair limit."""
    _check_cutoff(cfg)
    w = mixture_weight(cfg.purity)
    k = np.zeros((cfg.fock_cutoff + 1, cfg.fock_cutoff + 1))
    es = cfg.eta_signal
    k[1, 0], k[0, 1], k[0, 0] = w * es, (1 - w) * es, 1 - es
    return _fock_coincidence(cfg, overlap, k)


def _zero_power_visibility(cfg: LoConfig) -> float:
    # the single-pair limit is taken exactly; differencing the Gaussian path at tiny pump
    # power loses about 1e-8 to round-off at mu_lo ~ 0.02 and far more as mu_lo -> 0
    far = _fock_zero_power(cfg, 0.0)
    dip = _fock_zero_power(cfg, cfg.mode_overlap)
    return 1 - dip / far


def lo_hom(config: LoConfig, method: str = "analytic") -> LoResult:
    """Three-fold (herald, D1, D2) probability versus delay and the dip visibility."""
    if method not in ("analytic", "fock"):
        raise ValueError("method must be 'analytic' or 'fock'")
    _check_cutoff(config)
    threefold = _analytic_threefold if method == "analytic" else _fock_threefold
    if config.delays is not None and config.jsa is not None:
        delays = np.asarray(config.delays, dtype=float)
        overlaps = config.mode_overlap * marginal_autocorrelation(config.jsa, delays)
    elif config.delays is not None:
        raise ValueError("a delay scan needs the JSA to define the overlap versus delay")
    else:
        delays = np.array([0.0])
        overlaps = np.array([config.mode_overlap])

    if config.mu_pump > 0:
        curve = np.array([threefold(config, o) for o in overlaps])
        far = threefold(config, 0.0)
        dip = threefold(config, config.mode_overlap)
        V = 1 - dip / far
    else:
        curve = np.full(delays.size, np.nan)
        far = dip = 0.0
        V = np.nan
    v0 = _zero_power_visibility(config)
    # the LO-free reference, again by Richardson extrapolation (mu_lo -> 0)
    ref = [_zero_power_visibility(config.replace(mu_lo=m)) for m in (1e-3, 2e-3)]
    v0_no_lo = 2 * ref[0] - ref[1]
    return LoResult(delays, curve, far, dip, V, v0, v0_no_lo - v0)


def fit_mode_overlap(config: LoConfig, target_visibility: float) -> float:
    """Real LO mode overlap giving ``target_visibility`` at zero pump power, LO included."""
    _check_cutoff(config)

    def mismatch(o):
        return _zero_power_visibility(config.replace(mode_overlap=o)) - target_visibility

    hi = mismatch(1.0)
    if hi < 0:
        raise ValueError(f"target {target_visibility:.4g} exceeds the visibility reachable at full overlap "
                         f"({hi + target_visibility:.4g})")
    return brentq(mismatch, 0.0, 1.0, xtol=1e-12)
