"""Truncated Fock-space two-mode interference: brute-force reference."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from ..counting import DetectorModel

__all__ = ["ClickOutcomes", "fock_oracle", "fock_dm", "coherent_dm", "thermal_dm", "beam_splitter"]

IDEAL = DetectorModel(1.0)


class ClickOutcomes(NamedTuple):
    """Joint click probabilities; p01 means detector 1 silent, detector 2 fires."""

    p00: float
    p01: float
    p10: float
    p11: float


def fock_dm(n: int, cutoff: int) -> np.ndarray:
    rho = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    rho[n, n] = 1.0
    return rho


def coherent_dm(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    amp = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(alpha + 0j) - 0.5 * gammaln(n + 1)) if alpha != 0 else (n == 0) * 1.0
    return np.outer(amp, np.conj(amp))


def thermal_dm(nbar: float, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    p = nbar**n / (1 + nbar) ** (n + 1)
    return np.diag(p).astype(complex)


def _annihilation(dim):
    return np.diag(np.sqrt(np.arange(1, dim)), 1)


def beam_splitter(splitter_ratio: float, dim: int) -> np.ndarray:
    """exp(theta (a^dag b - a b^dag)) on a (dim x dim) two-mode space, cos^2 theta = ratio."""
    a = np.kron(_annihilation(dim), np.eye(dim))
    b = np.kron(np.eye(dim), _annihilation(dim))
    theta = np.arccos(np.sqrt(splitter_ratio))
    return expm(theta * (a.conj().T @ b - a @ b.conj().T))


def fock_oracle(state_a, state_b, splitter_ratio: float = 0.5,
                detectors: Sequence[DetectorModel] = (IDEAL, IDEAL), gate: float = 0.0) -> ClickOutcomes:
    """Click statistics behind a beam splitter for two single-mode input states.

    Inputs are number-basis density matrices truncated at the same cutoff N.
    The splitter acts on a space with up to 2N photons per mode so that
    every input component is propagated without truncation error.
    """
    rho_a = np.asarray(state_a, dtype=complex)
    rho_b = np.asarray(state_b, dtype=complex)
    if rho_a.shape != rho_b.shape or rho_a.shape[0] != rho_a.shape[1]:
        raise ValueError("input states must be square matrices of the same cutoff")
    for rho in (rho_a, rho_b):
        if abs(np.trace(rho) - 1) > 1e-6:
            raise ValueError(f"input state trace {np.trace(rho).real:.8f} deviates from 1; raise the cutoff")
    n_in = rho_a.shape[0]
    dim = 2 * n_in - 1
    pad = np.zeros((dim, dim), dtype=complex)
    big_a, big_b = pad.copy(), pad.copy()
    big_a[:n_in, :n_in] = rho_a
    big_b[:n_in, :n_in] = rho_b
    U = beam_splitter(splitter_ratio, dim)
    rho_out = U @ np.kron(big_a, big_b) @ U.conj().T
    p = np.real(np.diag(rho_out)).reshape(dim, dim)
    n = np.arange(dim)
    d1, d2 = detectors
    q1 = (1 - d1.efficiency) ** n * (1 - d1.dark_probability(gate))
    q2 = (1 - d2.efficiency) ** n * (1 - d2.dark_probability(gate))
    p00 = float(q1 @ p @ q2)
    p0_ = float(q1 @ p.sum(axis=1))
    p_0 = float(p.sum(axis=0) @ q2)
    total = float(p.sum())
    return ClickOutcomes(p00, p0_ - p00, p_0 - p00, total - p0_ - p_0 + p00)
