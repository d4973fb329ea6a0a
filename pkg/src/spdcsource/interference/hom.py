"""
Successive-photon Hong-Ou-Mandel interference in an unbalanced
Mach-Zehnder whose long arm delays by one pulse period.

Photons from pulse k that take the long arm meet photons from pulse k+1 on
the short arm; a four-fold event needs both heralds and both interferometer
outputs to fire in slot k+1. The early/late path choice contributes the
factor 1/4 automatically through the splitter amplitudes.

Quasi-number-resolving heralding splits the idler over detectors A and B.
Pulse k is heralded by one of them and pulse k+1 by the other; the first
must not have fired on both, which the detector dead time enforces.

Analytic rates use the exact multimode Gaussian threshold-detector
formula over the Schmidt modes of pulses k-1, k and k+1, weighted by the
chance that each detector is live. Liveness combines exact single-detector
and pairwise dead-time distributions; correlations among three or more
detectors are dropped, which is accurate while per-pulse click chances stay
small. The Monte Carlo path samples photon numbers per Schmidt mode, routes
them through the interferometer (Fock statistics at zero delay, independent
routing when fully distinguishable) and applies per-pulse-slot dead time.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.constants import c
from scipy.special import gammaln

from ..counting import REFERENCE_DETECTORS, DetectorModel, _dead_slots, apply_dead_time, block_rng
from ..jsa import JointAmplitude, schmidt
from ..utils import fwhm
from .gaussian import click_probability, two_mode_squeezed
from .visibility import visibility

__all__ = [
    "HomConfig",
    "HomResult",
    "Extrapolation",
    "SchmidtModes",
    "schmidt_modes",
    "dip_fwhm",
    "hom_experiment",
    "power_extrapolation",
    "synthetic_power_series",
    "beam_splitter_fock_table",
]

HERALDS = ("single_click", "dual_click_quasi_pnr")


@dataclass(frozen=True)
class HomConfig:
    jsa: JointAmplitude
    mu: float
    delay_grid: Optional[np.ndarray] = None
    herald: str = "dual_click_quasi_pnr"
    splitter_ratio: float = 0.5
    pulse_spacing: float = 10e-9
    eta_signal: float = 1.0
    eta_idler: float = 1.0
    herald_splitter: float = 0.5
    # herald A, herald B, interferometer outputs D3 and D4
    detectors: tuple = REFERENCE_DETECTORS
    coincidence_window: float = 1e-9
    max_modes: int = 8

    def __post_init__(self):
        if not 0 <= self.mu < 0.2:
            raise ValueError("hom_experiment is limited to mu < 0.2")
        if self.herald not in HERALDS:
            raise ValueError(f"herald must be one of {HERALDS}")
        if not 0 < self.splitter_ratio < 1 or not 0 < self.herald_splitter < 1:
            raise ValueError("splitter ratios must lie strictly between 0 and 1")
        if len(self.detectors) != 4:
            raise ValueError("need four detectors: herald A, herald B, D3, D4")

    def replace(self, **changes) -> "HomConfig":
        return replace(self, **changes)

    @property
    def rep_rate(self):
        return 1.0 / self.pulse_spacing


class SchmidtModes(NamedTuple):
    weights: np.ndarray  # p_j, summing to one
    signal: np.ndarray  # orthonormal columns on the signal grid
    omega: np.ndarray  # angular frequency of each signal grid point


def schmidt_modes(jsa: JointAmplitude, max_modes: int = 8, tail: float = 1e-10) -> SchmidtModes:
    dec = schmidt(jsa, modes=True)
    p = dec.probabilities
    r = int(np.searchsorted(np.cumsum(p), 1 - tail) + 1)
    r = max(1, min(r, max_modes, p.size))
    w = p[:r] / p[:r].sum()
    return SchmidtModes(w, dec.signal_modes[:, :r], 2 * np.pi * c / jsa.grid.signal)


def _overlap_curve(modes: SchmidtModes, delays):
    # sum_ab p_a p_b |<u_a| U(tau) u_b>|^2
    out = []
    for tau in np.atleast_1d(delays):
        g = modes.signal.conj().T @ (np.exp(1j * modes.omega * tau)[:, None] * modes.signal)
        out.append(float(modes.weights @ (np.abs(g) ** 2) @ modes.weights))
    return np.array(out)


def dip_fwhm(jsa: JointAmplitude, max_modes: int = 8) -> float:
    """Full width of the two-photon overlap versus delay."""
    modes = schmidt_modes(jsa, max_modes)
    n = jsa.grid.signal.size
    step = c * (jsa.grid.signal[-1] - jsa.grid.signal[0]) / jsa.grid.signal.mean() ** 2 / (n - 1)
    # a sampled spectrum repeats in delay every 1/step; stay inside half of that
    half = 0.5 / step
    taus = np.linspace(-half, half, 4001)
    return fwhm(taus, _overlap_curve(modes, taus))


def _default_delays(jsa, max_modes):
    w = dip_fwhm(jsa, max_modes)
    return np.linspace(-2.5 * w, 2.5 * w, 41)


def _check_delays(delays, width):
    delays = np.asarray(delays, dtype=float)
    inside = np.count_nonzero(np.abs(delays) <= width / 2)
    if inside <= 3:
        raise ValueError(f"delay grid puts only {inside} points inside the {width * 1e12:.2f} ps dip")
    if delays.max() - delays.min() < 3 * width:
        raise ValueError("delay grid must span at least three dip widths")


class HomResult(NamedTuple):
    delays: np.ndarray
    fourfold_rate: np.ndarray  # per second
    rate_distinguishable: float
    rate_dip: float
    V: float
    sigma_V: float
    counts_max: float
    counts_min: float


def _slot_overlaps(modes, tau):
    """Orthonormal detector-mode basis for one time slot and the input overlaps."""
    r = modes.weights.size
    if np.isinf(tau):
        eye = np.eye(r)
        zero = np.zeros((r, r))
        return np.vstack([eye, zero]), np.vstack([zero, eye])
    shifted = np.exp(1j * modes.omega * tau)[:, None] * modes.signal
    stack = np.hstack([modes.signal, shifted])
    q, s, _ = np.linalg.svd(stack, full_matrices=False)
    basis = q[:, s > 1e-10 * s[0]]
    return basis.conj().T @ modes.signal, basis.conj().T @ shifted


class _Layout:
    """Output-mode bookkeeping for the analytic four-fold calculation."""

    def __init__(self, cfg: HomConfig, modes: SchmidtModes, tau: float):
        r = modes.weights.size
        ov_short, ov_long = _slot_overlaps(modes, tau)
        d = ov_short.shape[0]
        det_a, det_b, det_3, det_4 = cfg.detectors
        R = cfg.splitter_ratio
        t, rr = math.sqrt(R), math.sqrt(1 - R)
        rows = []
        self.groups = {}

        def add(name, block):
            start = sum(len(x) for x in rows)
            rows.append(block)
            self.groups[name] = list(range(start, start + block.shape[0]))

        n_in = 6 * r  # three pulses, (signal, idler) per Schmidt mode

        def sig(p, j):
            return 2 * (p * r + j)

        def idl(p, j):
            return 2 * (p * r + j) + 1

        for slot, (p_short, p_long) in (("early", (1, 0)), ("late", (2, 1))):
            for name, det, a_s, a_l in (("D3", det_3, t * t, rr * rr), ("D4", det_4, t * rr, -rr * t)):
                block = np.zeros((d, n_in), dtype=complex)
                amp = math.sqrt(cfg.eta_signal * det.efficiency)
                for j in range(r):
                    block[:, sig(p_short, j)] = amp * a_s * ov_short[:, j]
                    block[:, sig(p_long, j)] = amp * a_l * ov_long[:, j]
                add(f"{name}_{slot}", block)

        h = cfg.herald_splitter
        for p, label in ((1, "k"), (2, "k1")):
            if cfg.herald == "dual_click_quasi_pnr":
                herald_amps = (("A", det_a, h), ("B", det_b, 1 - h))
            else:
                herald_amps = (("H", det_a, 1.0),)
            for name, det, split in herald_amps:
                block = np.zeros((r, n_in), dtype=complex)
                for j in range(r):
                    block[j, idl(p, j)] = math.sqrt(cfg.eta_idler * det.efficiency * split)
                add(f"{name}_{label}", block)
        self.T = np.vstack(rows)


def _dark(cfg):
    gate = cfg.coincidence_window
    return {name: det.dark_probability(gate) for name, det in zip("AB34", cfg.detectors)}


def _pattern_probability(state, layout, cfg, clicks, silent):
    dark = _dark(cfg)
    key = {"A": "A", "B": "B", "H": "A", "D3": "3", "D4": "4"}
    to_modes = [layout.groups[g] for g in clicks]
    to_silent = [layout.groups[g] for g in silent]
    darks = {("c", k): dark[key[g.split("_")[0]]] for k, g in enumerate(clicks)}
    darks.update({("s", k): dark[key[g.split("_")[0]]] for k, g in enumerate(silent)})
    return click_probability(state, to_modes, to_silent, darks)


def _patterns(herald):
    signal_click = ["D3_late", "D4_late"]
    signal_silent = ["D3_early", "D4_early"]
    if herald == "single_click":
        return [(["H_k", "H_k1"] + signal_click, signal_silent, {"D3": 1, "D4": 1})]
    return [
        (["A_k", "B_k1"] + signal_click, ["B_k"] + signal_silent, {"A": 0, "B": 1, "D3": 1, "D4": 1}),
        (["B_k", "A_k1"] + signal_click, ["A_k"] + signal_silent, {"A": 1, "B": 0, "D3": 1, "D4": 1}),
    ]


def _single_pulse_outputs(cfg, modes):
    """Output modes of one pulse: herald detectors plus D3/D4 for each arm."""
    r = modes.weights.size
    state = two_mode_squeezed(cfg.mu * modes.weights)
    det_a, det_b, det_3, det_4 = cfg.detectors
    R = cfg.splitter_ratio
    t, rr = math.sqrt(R), math.sqrt(1 - R)
    h = cfg.herald_splitter if cfg.herald == "dual_click_quasi_pnr" else 1.0
    amps = {
        "A": (1, math.sqrt(cfg.eta_idler * det_a.efficiency * h)),
        "B": (1, math.sqrt(cfg.eta_idler * det_b.efficiency * (1 - h))),
        "D3s": (0, math.sqrt(cfg.eta_signal * det_3.efficiency) * t * t),
        "D4s": (0, math.sqrt(cfg.eta_signal * det_4.efficiency) * t * rr),
        "D3l": (0, math.sqrt(cfg.eta_signal * det_3.efficiency) * rr * rr),
        "D4l": (0, math.sqrt(cfg.eta_signal * det_4.efficiency) * rr * t),
    }
    T = np.zeros((len(amps) * r, 2 * r), dtype=complex)
    groups = {}
    for g, (name, (offset, a)) in enumerate(amps.items()):
        for j in range(r):
            T[g * r + j, 2 * j + offset] = a
        groups[name] = list(range(g * r, (g + 1) * r))
    return state.transform(T), groups


def _pulse_click_table(state, groups, outputs):
    """Joint click probabilities of ``outputs`` for one pulse, indexed by bits."""
    n = len(outputs)
    table = np.zeros((2,) * n)
    for bits in itertools.product((0, 1), repeat=n):
        on = [o for o, b in zip(outputs, bits) if b]
        off = [o for o, b in zip(outputs, bits) if not b]
        total = 0.0
        for k in range(len(on) + 1):
            for sub in itertools.combinations(on, k):
                modes = [m for o in off + list(sub) for m in groups[o]]
                total += (-1) ** k * (state.vacuum_probability(modes) if modes else 1.0)
        table[bits] = max(total, 0.0)
    return table / table.sum()


def _pair_dead_counters(cfg, state, groups, pair, tol=1e-13, max_slots=20000):
    """Stationary joint distribution of the remaining dead slots of two detectors.

    Index [dX, dY] at the start of a slot. A detector clicks in a slot from
    its own pulse (herald, short arm) or from the previous pulse's long arm,
    which the chain carries as a pending bit. Clicks on both detectors can
    come from one pulse, so the counters are correlated.
    """
    index = {"A": 0, "B": 1, "D3": 2, "D4": 3}
    dets = [cfg.detectors[index[name]] for name in pair]
    D = [_dead_slots(d, cfg.rep_rate) for d in dets]
    gate = 1.0 / cfg.rep_rate
    dark = [d.dark_probability(gate) for d in dets]
    short = [name if name in ("A", "B") else name + "s" for name in pair]
    long = [None if name in ("A", "B") else name + "l" for name in pair]
    outputs = short + [o for o in long if o is not None]
    table = _pulse_click_table(state, groups, outputs)
    # expand to [sX, sY, lX, lY]
    full = np.zeros((2, 2, 2, 2))
    for bits in itertools.product((0, 1), repeat=len(outputs)):
        sx, sy = bits[0], bits[1]
        rest = list(bits[2:])
        lx = rest.pop(0) if long[0] is not None else 0
        ly = rest.pop(0) if long[1] is not None else 0
        full[sx, sy, lx, ly] += table[bits]
    # dark counts add independent clicks
    for axis, pd in ((0, dark[0]), (1, dark[1])):
        if pd > 0:
            moved = np.take(full, 0, axis=axis) * pd
            idx0 = [slice(None)] * 4
            idx1 = [slice(None)] * 4
            idx0[axis], idx1[axis] = 0, 1
            full[tuple(idx0)] -= moved
            full[tuple(idx1)] += moved

    dist = np.zeros((D[0] + 1, D[1] + 1, 2, 2))
    dist[0, 0, 0, 0] = 1.0

    for _ in range(max_slots):
        new = np.zeros_like(dist)
        for px, py in itertools.product((0, 1), repeat=2):
            block = dist[:, :, px, py]
            if not block.any():
                continue
            for sx, sy, lx, ly in itertools.product((0, 1), repeat=4):
                w = full[sx, sy, lx, ly]
                if w == 0:
                    continue
                b = block * w
                cx, cy = sx | px, sy | py
                # advance X
                bx = np.zeros_like(b)
                bx[:-1] += b[1:]
                if cx:
                    bx[D[0]] += b[0]
                else:
                    bx[0] += b[0]
                out = np.zeros_like(bx)
                out[:, :-1] += bx[:, 1:]
                if cy:
                    out[:, D[1]] += bx[:, 0]
                else:
                    out[:, 0] += bx[:, 0]
                new[:, :, lx, ly] += out
        change = np.abs(new - dist).sum()
        dist = new
        if change < tol:
            break
    return dist.sum(axis=(2, 3))


class _Liveness:
    """Joint chance that detectors are live at the explicit slots.

    Uses exact single-detector and pairwise stationary dead-time
    distributions and combines pairs multiplicatively. The explicit block
    starts at slot k; a detector with ``extra`` constrained slots must have
    at most ``extra`` dead slots left at the start of slot k.
    """

    def __init__(self, cfg, modes, names):
        state, groups = _single_pulse_outputs(cfg, modes)
        self.pairs = {}
        for x, y in itertools.combinations(names, 2):
            self.pairs[(x, y)] = _pair_dead_counters(cfg, state, groups, (x, y))

    def factor(self, windows):
        names = list(windows)
        single = {}
        for (x, y), dist in self.pairs.items():
            single.setdefault(x, dist.sum(axis=1))
            single.setdefault(y, dist.sum(axis=0))
        total = 1.0
        live = {n: single[n][: windows[n] + 1].sum() for n in names}
        for n in names:
            total *= live[n]
        for x, y in itertools.combinations(names, 2):
            dist = self.pairs[(x, y)] if (x, y) in self.pairs else self.pairs[(y, x)].T
            joint = dist[: windows[x] + 1, : windows[y] + 1].sum()
            total *= joint / (live[x] * live[y])
        return total


def _liveness(cfg, modes):
    names = ["H", "D3", "D4"] if cfg.herald == "single_click" else ["A", "B", "D3", "D4"]
    # the single herald is treated as free of dead time
    return _Liveness(cfg, modes, [n for n in names if n != "H"])


def _fourfold_probability(cfg, modes, tau, liveness=None):
    layout = _Layout(cfg, modes, tau)
    pairs = np.tile(cfg.mu * modes.weights, 3)
    state = two_mode_squeezed(pairs).transform(layout.T)
    if liveness is None:
        liveness = _liveness(cfg, modes)
    total = 0.0
    for clicks, silent, windows in _patterns(cfg.herald):
        prob = _pattern_probability(state, layout, cfg, clicks, silent)
        total += prob * liveness.factor(windows)
    return total


def _analytic(cfg: HomConfig, pulses: int):
    modes = schmidt_modes(cfg.jsa, cfg.max_modes)
    delays = cfg.delay_grid
    if delays is None:
        delays = _default_delays(cfg.jsa, cfg.max_modes)
    else:
        _check_delays(delays, dip_fwhm(cfg.jsa, cfg.max_modes))
    delays = np.asarray(delays, dtype=float)
    live = _liveness(cfg, modes)
    # inclusion-exclusion leaves round-off of order 1e-16 x p_inf; tiny negatives are clipped
    curve = np.array([max(_fourfold_probability(cfg, modes, tau, live), 0.0) for tau in delays])
    p_inf = _fourfold_probability(cfg, modes, np.inf, live)
    if p_inf < 1e-11:
        raise ValueError(f"four-fold probability {p_inf:.1e} per pulse is at the round-off floor; raise mu")
    p_0 = max(_fourfold_probability(cfg, modes, 0.0, live), 0.0)
    cmax, cmin = p_inf * pulses, p_0 * pulses
    V, sigma = visibility((cmax, cmin), "hom") if cmax > 0 else (0.0, np.inf)
    return HomResult(delays, curve * cfg.rep_rate, p_inf * cfg.rep_rate, p_0 * cfg.rep_rate,
                     V, sigma, cmax, cmin)


def beam_splitter_fock_table(splitter_ratio: float, n_max: int) -> np.ndarray:
    """table[n_long, n_short, m] = probability of m photons at D3.

    D3 = sqrt(R) short + sqrt(1-R) long, D4 = sqrt(1-R) short - sqrt(R) long.
    """
    R = splitter_ratio
    table = np.zeros((n_max + 1, n_max + 1, 2 * n_max + 1))
    # coefficient arrays in powers of the D3 creation operator (D4 set to one)
    short = np.array([math.sqrt(1 - R), math.sqrt(R)])
    long = np.array([-math.sqrt(R), math.sqrt(1 - R)])
    for n1 in range(n_max + 1):
        for n2 in range(n_max + 1):
            coef = P.polymul(P.polypow(long, n1), P.polypow(short, n2))
            N = n1 + n2
            m = np.arange(N + 1)
            logw = gammaln(m + 1) + gammaln(N - m + 1) - gammaln(n1 + 1) - gammaln(n2 + 1)
            table[n1, n2, :N + 1] = coef[:N + 1] ** 2 * np.exp(logw)
    return table


def _mc_block(cfg, weights, start, n, seed, block):
    rng = block_rng(seed, block)
    mean = cfg.mu * weights
    counts = np.stack([rng.geometric(1.0 / (1.0 + m), n) - 1 for m in mean], axis=1)
    emitting = np.nonzero(counts.any(axis=1))[0]
    counts = counts[emitting]
    det_a, det_b = cfg.detectors[:2]
    idler = rng.binomial(counts.sum(axis=1), cfg.eta_idler)
    to_a = rng.binomial(idler, cfg.herald_splitter)
    click_a = rng.binomial(to_a, det_a.efficiency) > 0
    click_b = rng.binomial(idler - to_a, det_b.efficiency) > 0
    click_h = rng.binomial(idler, det_a.efficiency) > 0
    signal = rng.binomial(counts, cfg.eta_signal)
    short = rng.binomial(signal, cfg.splitter_ratio)
    long = signal - short
    return start + emitting, click_a, click_b, click_h, short, long


def _registered(raw_slots, det, cfg, rng, n_total, apply_dead=True):
    pd = det.dark_probability(1.0 / cfg.rep_rate)
    n_dark = rng.binomial(n_total, pd) if pd > 0 else 0
    slots = np.union1d(raw_slots, rng.integers(0, n_total, n_dark))
    if not apply_dead:
        return slots
    D = _dead_slots(det, cfg.rep_rate)
    return apply_dead_time(slots.astype(float), D + 1).astype(np.int64)


def _mc(cfg: HomConfig, pulses: int, seed: int, threads: int, block_pulses: int = 1 << 20):
    modes = schmidt_modes(cfg.jsa, cfg.max_modes)
    starts = list(range(0, pulses, block_pulses))

    def job(b):
        return _mc_block(cfg, modes.weights, starts[b], min(block_pulses, pulses - starts[b]), seed, b)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            blocks = list(pool.map(job, range(len(starts))))
    else:
        blocks = [job(b) for b in range(len(starts))]
    idx, ca, cb, ch, short, long = (np.concatenate([blk[k] for blk in blocks]) for k in range(6))

    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1, 7]))
    det_a, det_b, det_3, det_4 = cfg.detectors
    heralds = {
        "A": _registered(idx[ca], det_a, cfg, rng, pulses),
        "B": _registered(idx[cb], det_b, cfg, rng, pulses),
        "H": _registered(idx[ch], det_a, cfg, rng, pulses, apply_dead=False),
    }

    # slot t collects the short arm of pulse t and the long arm of pulse t-1
    slots = np.union1d(idx[short.any(axis=1)], idx[long.any(axis=1)] + 1)
    slots = slots[slots < pulses]
    r = short.shape[1]
    S = np.zeros((slots.size, r), dtype=np.int64)
    L = np.zeros((slots.size, r), dtype=np.int64)
    pos = np.searchsorted(slots, idx)
    ok = (pos < slots.size) & (slots[np.minimum(pos, slots.size - 1)] == idx)
    S[pos[ok]] = short[ok]
    pos1 = np.searchsorted(slots, idx + 1)
    ok1 = (pos1 < slots.size) & (slots[np.minimum(pos1, slots.size - 1)] == idx + 1)
    L[pos1[ok1]] = long[ok1]

    R = cfg.splitter_ratio
    n_max = int(max(S.max(initial=0), L.max(initial=0)))
    table = beam_splitter_fock_table(R, n_max)
    cdf = np.cumsum(table, axis=2)
    results = {}
    for label, tau in (("dip", 0.0), ("far", np.inf)):
        d3 = np.zeros(slots.size, dtype=np.int64)
        if tau == 0.0:
            for j in range(r):
                u = rng.random(slots.size)
                rows = cdf[L[:, j], S[:, j]]
                d3 += (u[:, None] >= rows).sum(axis=1)
        else:
            d3 = rng.binomial(S, R).sum(axis=1) + rng.binomial(L, 1 - R).sum(axis=1)
        d4 = S.sum(axis=1) + L.sum(axis=1) - d3
        raw3 = slots[rng.binomial(d3, det_3.efficiency) > 0]
        raw4 = slots[rng.binomial(d4, det_4.efficiency) > 0]
        reg3 = _registered(raw3, det_3, cfg, rng, pulses)
        reg4 = _registered(raw4, det_4, cfg, rng, pulses)
        results[label] = _count_fourfolds(cfg.herald, heralds, reg3, reg4)
    cmax, cmin = results["far"], results["dip"]
    V, sigma = visibility((cmax, cmin), "hom") if cmax > 0 else (0.0, np.inf)
    delays = np.array([0.0, np.inf])
    rates = np.array([cmin, cmax]) * cfg.rep_rate / pulses
    return HomResult(delays, rates, rates[1], rates[0], V, sigma, float(cmax), float(cmin))


def _count_fourfolds(herald, heralds, reg3, reg4):
    both = np.intersect1d(reg3, reg4)
    late = both[~np.isin(both - 1, reg3) & ~np.isin(both - 1, reg4)]
    k = late - 1
    if herald == "single_click":
        h = heralds["H"]
        return int(np.count_nonzero(np.isin(k, h) & np.isin(late, h)))
    a, b = heralds["A"], heralds["B"]
    ab = np.isin(k, a) & ~np.isin(k, b) & np.isin(late, b)
    ba = np.isin(k, b) & ~np.isin(k, a) & np.isin(late, a)
    return int(np.count_nonzero(ab) + np.count_nonzero(ba))


def hom_experiment(config: HomConfig, analytic_or_mc: str = "analytic", pulses: int = 10**7,
                   seed: int = 0, threads: int = 1) -> HomResult:
    """Four-fold rate versus delay and the dip visibility (Cmax - Cmin)/Cmax.

    ``pulses`` sets the counting statistics for sigma_V. The Monte Carlo
    path only evaluates zero delay and full distinguishability.
    """
    if analytic_or_mc == "analytic":
        return _analytic(config, pulses)
    if analytic_or_mc == "mc":
        return _mc(config, pulses, seed, threads)
    raise ValueError("analytic_or_mc must be 'analytic' or 'mc'")


class Extrapolation(NamedTuple):
    intercept: float
    slope: float
    sigma_intercept: float
    sigma_slope: float
    chi2: float


def power_extrapolation(points) -> Extrapolation:
    """Weighted straight-line fit V = intercept + slope * x with weights 1/sigma^2.

    ``points`` is an (n, 3) array of (power or mu, V, sigma_V).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 3:
        raise ValueError("need at least three (x, V, sigma) points")
    x, y, s = pts.T
    if np.any(s <= 0):
        raise ValueError("uncertainties must be positive")
    w = 1.0 / s**2
    A = np.column_stack([np.ones_like(x), x])
    F = A.T @ (w[:, None] * A)
    if np.unique(x).size < 2 or np.linalg.cond(F) > 1e14:
        raise ValueError("singular design: abscissae must not all coincide")
    cov = np.linalg.inv(F)
    coef = cov @ (A.T @ (w * y))
    chi2 = float(np.sum(w * (A @ coef - y) ** 2))
    return Extrapolation(float(coef[0]), float(coef[1]), float(np.sqrt(cov[0, 0])),
                         float(np.sqrt(cov[1, 1])), chi2)


def synthetic_power_series(config: HomConfig, mus, counts_max: float = 2000.0, seed: int = 0):
    """(mu, V, sigma_V) rows from Poisson-sampled analytic four-fold counts.

    Each point integrates long enough to collect ``counts_max`` expected
    four-folds away from the dip.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2]))
    modes = schmidt_modes(config.jsa, config.max_modes)
    rows = []
    for mu in mus:
        cfg = config.replace(mu=float(mu))
        live = _liveness(cfg, modes)
        p_far = _fourfold_probability(cfg, modes, np.inf, live)
        p_dip = _fourfold_probability(cfg, modes, 0.0, live)
        scale = counts_max / p_far
        cmax = rng.poisson(counts_max)
        cmin = rng.poisson(p_dip * scale)
        V, sigma = visibility((cmax, cmin), "hom")
        rows.append((float(mu), V, sigma))
    return np.array(rows)
