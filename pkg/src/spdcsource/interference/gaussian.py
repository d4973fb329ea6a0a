"""
Zero-mean or displaced multimode Gaussian states described by their
normally ordered moments

    N_ij = <a_i^dag a_j> - <a_i>^* <a_j>,    M_ij = <a_i a_j> - <a_i><a_j>,

with threshold-detector click probabilities from the vacuum overlap

    P(vacuum on S) = exp(-xi^dag Q^-1 xi / 2) / sqrt(det Q),
    Q = [[I + N^T, M], [M^*, I + N]],  xi = (d, d^*),

restricted to the detector modes S. Passive (lossy) linear optics a -> T a
maps N -> T^* N T^T, M -> T M T^T, d -> T d.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

__all__ = ["GaussianState", "two_mode_squeezed", "click_probability"]


@dataclass(frozen=True)
class GaussianState:
    N: np.ndarray
    M: np.ndarray
    mean: np.ndarray

    @classmethod
    def vacuum(cls, n_modes: int) -> "GaussianState":
        z = np.zeros((n_modes, n_modes), dtype=complex)
        return cls(z, z.copy(), np.zeros(n_modes, dtype=complex))

    @property
    def n_modes(self):
        return self.N.shape[0]

    def transform(self, T) -> "GaussianState":
        T = np.asarray(T, dtype=complex)
        return GaussianState(T.conj() @ self.N @ T.T, T @ self.M @ T.T, T @ self.mean)

    def vacuum_probability(self, modes: Sequence[int]) -> float:
        idx = np.asarray(modes, dtype=int)
        if idx.size == 0:
            return 1.0
        n = idx.size
        N = self.N[np.ix_(idx, idx)]
        M = self.M[np.ix_(idx, idx)]
        Q = np.empty((2 * n, 2 * n), dtype=complex)
        Q[:n, :n] = np.eye(n) + N.T
        Q[:n, n:] = M
        Q[n:, :n] = M.conj()
        Q[n:, n:] = np.eye(n) + N
        chol = np.linalg.cholesky(Q)
        log_det = 2.0 * np.sum(np.log(np.real(np.diag(chol))))
        d = self.mean[idx]
        quad = 0.0
        if np.any(d):
            xi = np.concatenate([d, d.conj()])
            y = np.linalg.solve(chol, xi)
            quad = float(np.real(np.vdot(y, y)))
        return float(np.exp(-0.5 * log_det - 0.5 * quad))


def two_mode_squeezed(mean_pairs) -> GaussianState:
    """Independent two-mode squeezed vacua; mode order (s_0, i_0, s_1, i_1, ...)."""
    mean_pairs = np.atleast_1d(np.asarray(mean_pairs, dtype=float))
    n = 2 * mean_pairs.size
    N = np.zeros((n, n), dtype=complex)
    M = np.zeros((n, n), dtype=complex)
    for k, nbar in enumerate(mean_pairs):
        s, i = 2 * k, 2 * k + 1
        N[s, s] = N[i, i] = nbar
        M[s, i] = M[i, s] = np.sqrt(nbar * (1 + nbar))
    return GaussianState(N, M, np.zeros(n, dtype=complex))


def click_probability(state: GaussianState, clicks: Sequence[Sequence[int]],
                      silent: Sequence[Sequence[int]] = (), dark: dict | None = None) -> float:
    """Probability that every detector in ``clicks`` fires and none in ``silent`` does.

    Detectors are lists of mode indices. ``dark`` maps a detector's position
    (('c', k) or ('s', k)) to its dark-count probability in the gate.
    """
    dark = dark or {}
    silent_modes = [m for det in silent for m in det]
    base = np.prod([1 - dark.get(("s", k), 0.0) for k in range(len(silent))])
    total = 0.0
    for r in range(len(clicks) + 1):
        for subset in combinations(range(len(clicks)), r):
            modes = silent_modes + [m for k in subset for m in clicks[k]]
            factor = base * np.prod([1 - dark.get(("c", k), 0.0) for k in subset])
            total += (-1) ** r * factor * state.vacuum_probability(modes)
    return total
