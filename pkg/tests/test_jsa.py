import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import c

from conftest import random_jsa
from spdcsource.jsa import (
    JointAmplitude, JointGrid, SourceDesign, build_jsa, design_crystal, heralded_hom_overlap, hom_dip,
    marginals, purity_sweep, reduced_density, schmidt, solve_design_parameter,
)

PS2 = 1e-24


def gram_purity(jsa):
    """Tr[rho^2] by direct contraction, no SVD."""
    rho = reduced_density(jsa)
    return float(np.real(np.trace(rho @ rho)) / np.real(np.trace(rho)) ** 2)


# --- design ----------------------------------------------------------------

def test_design_schmidt_number_and_runtime():
    start = time.perf_counter()
    jsa = SourceDesign().jsa()
    K = schmidt(jsa).K
    assert time.perf_counter() - start < 10.0
    assert abs(K - 1.0016) <= 0.005


def test_design_marginals(design_jsa):
    m = marginals(design_jsa)
    assert abs(m.fwhm_signal * 1e9 - 1.69) <= 0.15
    assert abs(m.fwhm_idler * 1e9 - 1.78) <= 0.15


def test_jsa_is_normalized(design_jsa):
    g = design_jsa.grid
    assert np.isclose(np.sum(design_jsa.jsi) * g.ds * g.di, 1.0, atol=1e-9)


def test_unapodized_crystal_is_less_pure(design, design_jsa):
    rect = design.replace(crystal=design_crystal(apodization_fwhm=None))
    K_rect = schmidt(rect.jsa(coverage=0)).K
    K_apod = schmidt(design_jsa).K
    assert K_rect > K_apod
    assert K_rect - 1 >= 10 * (K_apod - 1)


def test_narrow_grid_is_rejected(design):
    with pytest.raises(ValueError, match="captures only"):
        design.replace(half_width=1.5e-9, n_points=64).jsa()


def test_cw_limit_lies_on_energy_conservation_line(design):
    d = design.replace(pump_fwhm=1e-12, n_points=128)
    jsa = d.jsa(coverage=0)
    g = jsa.grid
    nu_p = c / d.pump_wavelength
    # idler wavelength that conserves energy for each signal wavelength
    lam_i = c / (nu_p - c / g.signal)
    dist = np.abs(g.idler[None, :] - lam_i[:, None])
    off = jsa.jsi[dist > g.di].sum() / jsa.jsi.sum()
    assert off < 1e-9


def test_pump_only_jsa_depends_on_sum_frequency(design):
    jsa = design.replace(n_points=64).jsa(phase_matching=False)
    g = jsa.grid
    nu_sum = c / g.signal[:, None] + c / g.idler[None, :]
    pump = design.pump().at(nu_sum)
    live = np.abs(pump) > 1e-6 * np.abs(pump).max()
    ratio = jsa.f[live] / pump[live]
    assert np.allclose(ratio, ratio[0], rtol=1e-9)
    assert np.allclose(jsa.f, ratio[0] * pump, rtol=0, atol=1e-9 * np.abs(jsa.f).max())


@pytest.mark.parametrize("s_plus, s_minus", [(1.0, 1.0), (1.0, 3.0), (2.5, 0.8), (1.0, 6.0)])
def test_gaussian_jsa_matches_closed_form_schmidt_number(s_plus, s_minus):
    x = np.linspace(-40, 40, 241)
    X, Y = np.meshgrid(x, x, indexing="ij")
    f = np.exp(-(X + Y) ** 2 / (2 * s_plus**2) - (X - Y) ** 2 / (2 * s_minus**2))
    grid = JointGrid(1550e-9 + x * 1e-11, 1550e-9 + x * 1e-11)
    K = schmidt(JointAmplitude.normalized(grid, f)).K
    assert np.isclose(K, 0.5 * (s_plus / s_minus + s_minus / s_plus), rtol=1e-6)


# --- marginals -------------------------------------------------------------

def test_separable_marginals(rng):
    u = rng.normal(size=40) + 1j * rng.normal(size=40)
    v = rng.normal(size=50) + 1j * rng.normal(size=50)
    grid = JointGrid(np.arange(40) * 1e-11 + 1e-6, np.arange(50) * 2e-11 + 1e-6)
    u /= np.sqrt(np.sum(np.abs(u) ** 2) * grid.ds)
    v /= np.sqrt(np.sum(np.abs(v) ** 2) * grid.di)
    m = marginals(JointAmplitude(grid, np.outer(u, v)))
    assert np.allclose(m.signal, np.abs(u) ** 2, atol=1e-12)
    assert np.allclose(m.idler, np.abs(v) ** 2, atol=1e-12)


def test_symmetric_jsa_has_equal_marginals(rng):
    a = rng.normal(size=(48, 48)) + 1j * rng.normal(size=(48, 48))
    x = np.linspace(-1, 1, 48)
    f = (a + a.T) * np.exp(-x[:, None] ** 2 - x[None, :] ** 2)
    grid = JointGrid(1550e-9 + x * 1e-9, 1550e-9 + x * 1e-9)
    m = marginals(JointAmplitude.normalized(grid, f))
    assert np.allclose(m.signal, m.idler, atol=1e-12)


# --- Schmidt ---------------------------------------------------------------

def test_rank_one_has_unit_schmidt_number(rng):
    assert schmidt(random_jsa(rng, 30, 20, rank=1)).K == pytest.approx(1.0, abs=1e-12)


def test_two_equal_modes():
    f = np.zeros((8, 8))
    f[0, 0] = f[3, 5] = 1.0
    grid = JointGrid(np.arange(8) * 1e-11 + 1e-6, np.arange(8) * 1e-11 + 1e-6)
    sd = schmidt(JointAmplitude.normalized(grid, f))
    assert np.allclose(sd.singular_values[:2], 1 / math.sqrt(2))
    assert sd.K == pytest.approx(2.0, abs=1e-12)
    assert sd.purity * sd.K == pytest.approx(1.0, abs=1e-15)


def test_intensity_schmidt_rejects_negative():
    with pytest.raises(ValueError):
        schmidt(np.array([[1.0, -0.1], [0.2, 0.3]]), "intensity")


def test_intensity_schmidt_uses_square_root(rng):
    jsa = random_jsa(rng, 12, 12)
    assert schmidt(jsa.jsi, "intensity").K == pytest.approx(schmidt(np.abs(jsa.f)).K, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 64), st.integers(2, 64), st.integers(0, 2**32 - 1))
def test_schmidt_purity_equals_gram_trace(n_s, n_i, seed):
    jsa = random_jsa(np.random.default_rng(seed), n_s, n_i)
    sd = schmidt(jsa)
    assert sd.K >= 1.0
    assert abs(sd.purity - gram_purity(jsa)) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 64), st.integers(2, 64), st.integers(0, 2**32 - 1))
def test_hom_overlap_equals_purity(n_s, n_i, seed):
    jsa = random_jsa(np.random.default_rng(seed), n_s, n_i)
    assert abs(heralded_hom_overlap(jsa, jsa, 0.0) - schmidt(jsa).purity) < 1e-6


def test_chirp_changes_amplitude_purity_but_not_intensity(design):
    d = design.replace(n_points=128)
    plain, chirped = d.jsa(), d.replace(pump_gdd=0.8 * PS2).jsa()
    assert schmidt(chirped).K > schmidt(plain).K + 1e-3
    assert np.allclose(chirped.jsi, plain.jsi, rtol=1e-9, atol=1e-9 * plain.jsi.max())
    assert abs(schmidt(chirped, "intensity").K - schmidt(plain, "intensity").K) < 1e-9


def test_grid_refinement_stability(design, design_jsa):
    fine = design.replace(n_points=511).jsa()
    assert abs(schmidt(fine).K - schmidt(design_jsa).K) < 1e-4


# --- HOM overlap -----------------------------------------------------------

def test_identical_pure_photons_interfere_fully(rng):
    jsa = random_jsa(rng, 20, 20, rank=1)
    assert heralded_hom_overlap(jsa, jsa) == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_photons_do_not_interfere():
    grid = JointGrid(np.arange(10) * 1e-11 + 1e-6, np.arange(10) * 1e-11 + 1e-6)
    a = np.zeros((10, 10))
    b = np.zeros((10, 10))
    a[2, 4] = b[7, 4] = 1.0
    assert heralded_hom_overlap(JointAmplitude.normalized(grid, a), JointAmplitude.normalized(grid, b)) == 0.0


def test_overlap_rejects_grid_mismatch(rng):
    with pytest.raises(ValueError, match="same grid"):
        heralded_hom_overlap(random_jsa(rng, 10, 10), random_jsa(rng, 11, 10))


def test_design_dip_is_at_zero_delay(design_jsa):
    dip = hom_dip(design_jsa, design_jsa, np.linspace(-5e-12, 5e-12, 11))
    assert np.argmin(dip) == 5
    assert np.isclose(dip[5], 0.5 * (1 - schmidt(design_jsa).purity), atol=1e-9)
    assert dip[0] > 0.49


# --- sweeps ----------------------------------------------------------------

def test_gdd_sweep_is_symmetric(design):
    d = design.replace(n_points=128)
    table = purity_sweep("pump_gdd", [-0.5 * PS2, 0.5 * PS2], d)
    assert abs(table.K[0] - table.K[1]) < 1e-6


def test_narrowing_pump_increases_schmidt_number(design):
    table = purity_sweep("pump_fwhm", [0.6e-9, 0.5e-9, 0.4e-9, 0.3e-9], design.replace(n_points=128))
    assert np.all(np.diff(table.K) > 0)


def test_matched_pump_is_near_sweep_minimum(design):
    values = np.arange(0.3e-9, 1.01e-9, 0.1e-9)
    table = purity_sweep("pump_fwhm", values, design.replace(n_points=128))
    step = values[1] - values[0]
    assert abs(table.best_value - 0.6e-9) <= step + 1e-15


def test_sweep_rejects_unknown_parameter(design):
    with pytest.raises(ValueError, match="cannot sweep"):
        purity_sweep("crystal_length", [1.0], design)


def test_solve_design_parameter_hits_target(design):
    d = design.replace(n_points=128)
    gdd = solve_design_parameter("pump_gdd", 1 / 0.963, (0.0, 2 * PS2), d, xtol=1e-30)
    assert np.isclose(schmidt(d.replace(pump_gdd=gdd).jsa()).purity, 0.963, atol=1e-6)
