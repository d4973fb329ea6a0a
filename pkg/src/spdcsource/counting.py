"""
Pair-number statistics, threshold detectors, rate prediction and Monte Carlo
time tags for a pulsed pair source.

Detectors are non-paralyzable with Gaussian timing jitter. The source emits
at most one pulse every 1/rep_rate; dead time is resolved on that pulse
lattice, which is exact as long as jitter is small compared with the gap
between the dead time and the next pulse.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf, gammaln

__all__ = [
    "DetectorModel",
    "SourceStats",
    "TimeTagStream",
    "RatePrediction",
    "Coincidences",
    "HeraldedEfficiency",
    "REFERENCE_DETECTORS",
    "pair_dist",
    "click_prob",
    "joint_click_probs",
    "heralded_efficiency",
    "predict_rates",
    "calibrate_brightness",
    "calibrate_operating_point",
    "g2_unheralded",
    "simulate_timetags",
    "coincidences",
    "apply_dead_time",
    "block_rng",
]

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float
    dark_rate: float = 0.0
    jitter_fwhm: float = 0.0
    dead_time: float = 0.0
    number_resolving: bool = False

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("detector efficiency must lie in [0, 1]")
        if self.dead_time < 0 or self.dark_rate < 0 or self.jitter_fwhm < 0:
            raise ValueError("dead time, dark rate and jitter must be non-negative")

    def dark_probability(self, gate: float) -> float:
        return -math.expm1(-self.dark_rate * gate)

    def replace(self, **changes) -> "DetectorModel":
        return replace(self, **changes)


# system detection efficiencies of the four SNSPD channels; dark rate assumed
REFERENCE_DETECTORS = tuple(
    DetectorModel(eff, dark_rate=100.0, jitter_fwhm=223e-12, dead_time=309e-9)
    for eff in (0.934, 0.963, 0.928, 0.934)
)


@dataclass(frozen=True)
class SourceStats:
    mu: float
    modes_K: float = 1.0
    eta_signal: float = 1.0
    eta_idler: float = 1.0
    rep_rate: float = 100e6
    # mean pairs per pulse per mW of pump
    power_calibration: Optional[float] = None

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if self.modes_K < 1:
            raise ValueError("modes_K must be at least 1")
        if not (0 <= self.eta_signal <= 1 and 0 <= self.eta_idler <= 1):
            raise ValueError("arm transmissions must lie in [0, 1]")
        if not self.rep_rate > 0:
            raise ValueError("repetition rate must be positive")

    def replace(self, **changes) -> "SourceStats":
        return replace(self, **changes)

    def at_power(self, power_mw: float) -> "SourceStats":
        if self.power_calibration is None:
            raise ValueError("source has no power calibration")
        return self.replace(mu=self.power_calibration * power_mw)


@dataclass(frozen=True)
class TimeTagStream:
    channel: int
    times: np.ndarray
    duration: float
    seed: Optional[int] = None

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        if t.size and np.any(np.diff(t) < 0):
            raise ValueError("time tags must be non-decreasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    def __len__(self):
        return self.times.size


def pair_dist(mu: float, modes_K: float = 1.0, n_max: int = 30) -> np.ndarray:
    """P(n) for the multimode thermal law with K modes (Poisson as K -> inf)."""
    if mu < 0:
        raise ValueError("mu must be non-negative")
    n = np.arange(n_max + 1)
    if mu == 0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return p
    if not np.isfinite(modes_K) or modes_K > 1e12:
        logp = n * math.log(mu) - mu - gammaln(n + 1)
    else:
        K = float(modes_K)
        x = mu / K
        logp = (gammaln(n + K) - gammaln(n + 1) - gammaln(K)
                + n * (math.log(mu) - math.log(K)) - (n + K) * math.log1p(x))
    p = np.exp(logp)
    tail = 1.0 - p.sum()
    if tail > 1e-9:
        raise ValueError(f"n_max={n_max} leaves tail mass {tail:.2e}; increase n_max")
    return p


def click_prob(dist, transmission: float, detector: DetectorModel, gate: float = 0.0) -> float:
    """Threshold-detector click probability 1 - (1 - p_dark) sum P(n) (1 - eta T)^n."""
    dist = np.asarray(dist, dtype=float)
    eta = transmission * detector.efficiency
    no_click = np.sum(dist * (1.0 - eta) ** np.arange(dist.size))
    return float(1.0 - (1.0 - detector.dark_probability(gate)) * no_click)


def joint_click_probs(dist, eta_s: float, eta_i: float, pd_s: float = 0.0, pd_i: float = 0.0):
    """(p11, p10, p01, p00) for one pulse; each pair photon is detected independently."""
    dist = np.asarray(dist, dtype=float)
    n = np.arange(dist.size)
    q_s = (1 - pd_s) * np.sum(dist * (1 - eta_s) ** n)
    q_i = (1 - pd_i) * np.sum(dist * (1 - eta_i) ** n)
    q_both = (1 - pd_s) * (1 - pd_i) * np.sum(dist * ((1 - eta_s) * (1 - eta_i)) ** n)
    p00 = q_both
    p10 = q_i - q_both
    p01 = q_s - q_both
    p11 = 1 - q_s - q_i + q_both
    return p11, p10, p01, p00


class HeraldedEfficiency(NamedTuple):
    H: float
    sigma_H: float


def heralded_efficiency(C, S_s, S_i) -> HeraldedEfficiency:
    """Symmetric heralding efficiency C / sqrt(S_s S_i).

    The uncertainty treats C, S_s - C and S_i - C as independent Poisson
    counts, which keeps the correlation between coincidences and singles.
    """
    if S_s <= 0 or S_i <= 0:
        raise ValueError("singles counts must be positive")
    if C < 0 or C > min(S_s, S_i):
        raise ValueError("coincidences must lie between 0 and the smaller singles count")
    H = C / math.sqrt(S_s * S_i)
    if C == 0:
        return HeraldedEfficiency(0.0, 1.0 / math.sqrt(S_s * S_i))
    d_c = H * (1.0 / C - 0.5 / S_s - 0.5 / S_i)
    d_a = -0.5 * H / S_s
    d_b = -0.5 * H / S_i
    var = C * d_c**2 + (S_s - C) * d_a**2 + (S_i - C) * d_b**2
    return HeraldedEfficiency(H, math.sqrt(var))


class RatePrediction(NamedTuple):
    singles_s: float
    singles_i: float
    coincidences: float
    H_predicted: float
    pairs_per_s_per_mW: Optional[float]
    warnings: tuple


def _dead_slots(detector, rep_rate):
    # pulses k+1 .. k+D fall inside the dead time after a click at pulse k
    return int(math.ceil(detector.dead_time * rep_rate - 1e-9)) - 1 if detector.dead_time > 0 else 0


def _dead_time_chain(p11, p10, p01, d_s, d_i):
    """Stationary fractions of pulses with both / only-s / only-i detectors live.

    States are (remaining dead pulses on s, on i); a click sets the counter
    to its dead length and counters decrease by one per pulse.
    """
    ns, ni = d_s + 1, d_i + 1
    n = ns * ni
    T = np.zeros((n, n))
    p_s = p11 + p10
    p_i = p11 + p01

    def idx(a, b):
        return a * ni + b

    for a in range(ns):
        for b in range(ni):
            src = idx(a, b)
            if a == 0 and b == 0:
                outcomes = ((d_s, d_i, p11), (d_s, 0, p10), (0, d_i, p01), (0, 0, 1 - p11 - p10 - p01))
            elif a == 0:
                outcomes = ((d_s, b - 1, p_s), (0, b - 1, 1 - p_s))
            elif b == 0:
                outcomes = ((a - 1, d_i, p_i), (a - 1, 0, 1 - p_i))
            else:
                outcomes = ((a - 1, b - 1, 1.0),)
            for a2, b2, p in outcomes:
                T[idx(a2, b2), src] += p
    # stationary vector: (T - I) pi = 0 with sum(pi) = 1
    A = T - np.eye(n)
    A[0, :] = 1.0
    rhs = np.zeros(n)
    rhs[0] = 1.0
    pi = np.linalg.solve(A, rhs).reshape(ns, ni)
    both = pi[0, 0]
    s_live = pi[0, :].sum()
    i_live = pi[:, 0].sum()
    return both, s_live, i_live


def predict_rates(source: SourceStats, det_s: DetectorModel, det_i: DetectorModel,
                  integration: float = 1.0, window: float = 1e-9, power_mw: Optional[float] = None,
                  n_max: int = 40) -> RatePrediction:
    """Expected singles and coincidence counts over ``integration`` seconds.

    Without dead time the singles follow R = rep_rate * p_click. Dead time is
    applied as R_obs = R / (1 + R tau) with tau rounded to whole pulse
    periods, which is exact for a pulsed source; coincidences need both
    detectors live and come from the exact dead-time Markov chain.
    """
    dist = pair_dist(source.mu, source.modes_K, n_max)
    gate = 1.0 / source.rep_rate
    eta_s = source.eta_signal * det_s.efficiency
    eta_i = source.eta_idler * det_i.efficiency
    p11, p10, p01, p00 = joint_click_probs(dist, eta_s, eta_i, det_s.dark_probability(gate),
                                           det_i.dark_probability(gate))
    d_s = _dead_slots(det_s, source.rep_rate)
    d_i = _dead_slots(det_i, source.rep_rate)
    both, s_live, i_live = _dead_time_chain(p11, p10, p01, d_s, d_i)

    # pair coincidences fall in the window with the Gaussian jitter overlap
    sigma = math.hypot(det_s.jitter_fwhm, det_i.jitter_fwhm) * FWHM_TO_SIGMA
    in_window = erf(window / 2 / (sigma * math.sqrt(2))) if sigma > 0 else 1.0

    r = source.rep_rate * integration
    singles_s = r * s_live * (p11 + p10)
    singles_i = r * i_live * (p11 + p01)
    coinc = r * both * p11 * in_window
    notes = []
    for name, p, det in (("signal", p11 + p10, det_s), ("idler", p11 + p01, det_i)):
        if p * source.rep_rate * det.dead_time > 0.5:
            notes.append(f"{name} detector saturated: R*tau = {p * source.rep_rate * det.dead_time:.2f}")
            warnings.warn(notes[-1], stacklevel=2)
    H = coinc / math.sqrt(singles_s * singles_i) if singles_s > 0 and singles_i > 0 else 0.0
    brightness = None
    if power_mw is not None and power_mw > 0:
        brightness = coinc / integration / power_mw
    return RatePrediction(singles_s, singles_i, coinc, H, brightness, tuple(notes))


def calibrate_brightness(coincidences_per_s_per_mw: float, power_mw: float, source: SourceStats,
                         det_s: DetectorModel, det_i: DetectorModel, window: float = 1e-9) -> SourceStats:
    """Fix mean pairs per pulse per mW so the predicted coincidence rate matches."""
    target = coincidences_per_s_per_mw * power_mw

    def mismatch(mu):
        return predict_rates(source.replace(mu=mu), det_s, det_i, 1.0, window).coincidences - target

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mu = brentq(mismatch, 1e-12, 0.5, xtol=1e-15, rtol=1e-13)
    return source.replace(mu=mu, power_calibration=mu / power_mw)


def calibrate_operating_point(heralded_target: float, coincidences_per_s_per_mw: float, power_mw: float,
                              source: SourceStats, det_s: DetectorModel, det_i: DetectorModel,
                              window: float = 1e-9) -> SourceStats:
    """Symmetric arm transmission and mu reproducing a measured heralding
    efficiency and coincidence brightness at one pump power.

    eta_signal * SDE_s = eta_idler * SDE_i is enforced; multi-pair emission
    and dead time make the predicted H slightly smaller than that product,
    so it is solved for rather than set.
    """
    top = min(det_s.efficiency, det_i.efficiency)
    if not 0 < heralded_target < top:
        raise ValueError(f"heralding target must lie in (0, {top:.3f}) for these detectors")

    def calibrated(x):
        trial = source.replace(eta_signal=x / det_s.efficiency, eta_idler=x / det_i.efficiency)
        return calibrate_brightness(coincidences_per_s_per_mw, power_mw, trial, det_s, det_i, window)

    def mismatch(x):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return predict_rates(calibrated(x), det_s, det_i, 1.0, window).H_predicted - heralded_target

    x = brentq(mismatch, 0.5 * heralded_target, top, xtol=1e-12)
    return calibrated(x)


def g2_unheralded(modes_K: float) -> float:
    """Unheralded second-order correlation of one arm, 1 + 1/K."""
    if modes_K < 1:
        raise ValueError("K must be at least 1")
    return 1.0 + 1.0 / modes_K


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent generator for one pulse block, fixed by (seed, block)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(block)]))


def apply_dead_time(times: np.ndarray, dead_time: float) -> np.ndarray:
    """Non-paralyzable dead time on a sorted array of event times."""
    if dead_time <= 0 or times.size < 2:
        return times
    keep = np.zeros(times.size, dtype=bool)
    last = -np.inf
    # loop only over events that could be blocked: gaps shorter than the dead time
    gaps = np.diff(times)
    if np.all(gaps >= dead_time):
        return times
    for k, t in enumerate(times.tolist()):
        if t - last >= dead_time:
            keep[k] = True
            last = t
    return times[keep]


def _simulate_block(source, det_s, det_i, cdf, start, n_pulses, seed, block):
    rng = block_rng(seed, block)
    period = 1.0 / source.rep_rate
    n = np.searchsorted(cdf, rng.random(n_pulses), side="right")
    emitting = np.nonzero(n)[0]
    pairs = n[emitting]
    out = []
    for eta, det in ((source.eta_signal * det_s.efficiency, det_s), (source.eta_idler * det_i.efficiency, det_i)):
        detected = rng.binomial(pairs, eta)
        pulses = emitting[detected > 0]
        t = (start + pulses) * period
        if det.jitter_fwhm > 0:
            t = t + rng.normal(0.0, det.jitter_fwhm * FWHM_TO_SIGMA, t.size)
        out.append(t)
    # dark counts: homogeneous over this block's time span
    t0, t1 = start * period, (start + n_pulses) * period
    for k, det in enumerate((det_s, det_i)):
        n_dark = rng.poisson(det.dark_rate * (t1 - t0))
        if n_dark:
            out[k] = np.concatenate([out[k], rng.uniform(t0, t1, n_dark)])
    return out


def simulate_timetags(source: SourceStats, det_s: DetectorModel, det_i: DetectorModel,
                      duration: float, seed: int, threads: int = 1, block_pulses: int = 1 << 20,
                      channels=(1, 2)):
    """Monte Carlo time tags (seconds) for the signal and idler detectors.

    Pulses are split into fixed blocks, each with its own generator derived
    from (seed, block index), so the output does not depend on ``threads``.
    """
    n_total = int(round(duration * source.rep_rate))
    if n_total < 1:
        raise ValueError("duration must cover at least one pulse")
    dist = pair_dist(source.mu, source.modes_K, 40)
    cdf = np.cumsum(dist)
    cdf[-1] = 1.0
    starts = list(range(0, n_total, block_pulses))

    def job(b):
        start = starts[b]
        return _simulate_block(source, det_s, det_i, cdf, start, min(block_pulses, n_total - start), seed, b)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            blocks = list(pool.map(job, range(len(starts))))
    else:
        blocks = [job(b) for b in range(len(starts))]

    streams = []
    for k, det in enumerate((det_s, det_i)):
        t = np.sort(np.concatenate([blk[k] for blk in blocks]), kind="stable")
        streams.append(TimeTagStream(channels[k], apply_dead_time(t, det.dead_time), duration, seed))
    return tuple(streams)


class Coincidences(NamedTuple):
    C: int
    sigma: float


def coincidences(stream_a, stream_b, window: float = 1e-9, offset: float = 0.0) -> Coincidences:
    """Greedy two-pointer matching with |t_a - t_b - offset| <= window / 2, each tag used once."""
    if window <= 0:
        raise ValueError("coincidence window must be positive")
    a = getattr(stream_a, "times", stream_a)
    b = np.asarray(getattr(stream_b, "times", stream_b)) + offset
    a = np.asarray(a).tolist()
    b = b.tolist()
    half = window / 2
    i = j = count = 0
    while i < len(a) and j < len(b):
        d = a[i] - b[j]
        if d > half:
            j += 1
        elif d < -half:
            i += 1
        else:
            count += 1
            i += 1
            j += 1
    return Coincidences(count, math.sqrt(count))
