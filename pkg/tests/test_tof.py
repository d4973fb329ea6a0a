import numpy as np
import pytest
from scipy.constants import c
from scipy.stats import poisson

from spdcsource.counting import DetectorModel
from spdcsource.jsa import JointAmplitude, JointGrid, SourceDesign, build_jsa, schmidt
from spdcsource.tof import (
    TofSpec, matched_grid, reconstruct_jsi, simulate_tof, swap_calibrate, total_variation,
)

SPEC = TofSpec.from_ps_per_nm(1360.0, 1550e-9)
LOSSY = SPEC.replace(insertion_loss=0.5)


def _jittered(fwhm):
    return (DetectorModel(1.0, jitter_fwhm=fwhm),) * 2


@pytest.fixture(scope="module")
def grid():
    return matched_grid(SPEC, SPEC, 128)


@pytest.fixture(scope="module")
def tof_jsa(grid):
    d = SourceDesign()
    return build_jsa(d.pump(), d.crystal, grid, coverage=0)


def _counting_noise_tv(jsi, n):
    """Expected total-variation distance of an n-event histogram from its parent, from Poisson statistics."""
    lam = n * (jsi / jsi.sum()).ravel()
    lam = lam[lam > 0]
    return 0.5 * float(np.sum(2 * lam * poisson.pmf(np.floor(lam), lam))) / n


# --- forward map -----------------------------------------------------------

def test_delta_jsi_lands_in_one_bin(grid):
    jsi = np.zeros(grid.shape)
    jsi[40, 70] = 1.0
    hist = simulate_tof((grid, jsi), SPEC, SPEC, n_events=5000, seed=1)
    assert hist.counts.sum() == 5000
    assert hist.counts[40, 70] == 5000


def test_one_nanometre_maps_to_1360_ps():
    assert SPEC.arrival(1551e-9) - SPEC.arrival(1550e-9) == pytest.approx(1360e-12, rel=1e-9)
    assert SPEC.arrival(1550e-9) == pytest.approx(5e-9)
    assert SPEC.wavelength(SPEC.arrival(1549.3e-9)) == pytest.approx(1549.3e-9, rel=1e-15)


def test_two_nanometre_band_fits_in_frame():
    span = SPEC.arrival(1551e-9) - SPEC.arrival(1549e-9)
    assert span == pytest.approx(2.72e-9, rel=1e-9)
    assert span < SPEC.frame


def test_mean_arrival_offset():
    g = JointGrid(np.linspace(1550.95e-9, 1551.05e-9, 11), np.linspace(1549.5e-9, 1550.5e-9, 11))
    jsi = np.zeros(g.shape)
    jsi[5, :] = 1.0
    hist = simulate_tof((g, jsi), SPEC, SPEC, n_events=20000, seed=2)
    mean_t = np.sum(hist.counts.sum(axis=1) * hist.centers_s) / hist.counts.sum()
    assert mean_t - 5e-9 == pytest.approx(1360e-12, abs=SPEC.frame / 128)


def test_wraparound_rejected():
    g = JointGrid(np.linspace(1545e-9, 1555e-9, 64), np.linspace(1549e-9, 1551e-9, 64))
    with pytest.raises(ValueError, match="wraparound"):
        simulate_tof((g, np.ones(g.shape)), SPEC, SPEC, n_events=10)


@pytest.mark.parametrize("kwargs", [dict(dispersion=0.0), dict(insertion_loss=1.0), dict(frame=0.0)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        TofSpec(**{"dispersion": 1.36, "reference_wavelength": 1550e-9, **kwargs})


def test_same_seed_same_histogram(tof_jsa):
    a = simulate_tof(tof_jsa, SPEC, SPEC, _jittered(223e-12), 3 * 10**5, 4, block_events=1 << 16)
    b = simulate_tof(tof_jsa, SPEC, SPEC, _jittered(223e-12), 3 * 10**5, 4, threads=4, block_events=1 << 16)
    assert np.array_equal(a.counts, b.counts)


# --- reconstruction --------------------------------------------------------

def test_round_trip_is_limited_only_by_counting_noise(tof_jsa):
    n = 10**6
    rec = reconstruct_jsi(simulate_tof(tof_jsa, SPEC, SPEC, n_events=n, seed=5, threads=4), SPEC, SPEC)
    assert np.allclose(rec.grid.signal, tof_jsa.grid.signal, rtol=1e-12)
    assert abs(total_variation(rec.jsi, tof_jsa.jsi) / _counting_noise_tv(tof_jsa.jsi, n) - 1) < 0.05
    assert rec.jsi.sum() == pytest.approx(1.0)
    assert np.allclose(rec.sigma, np.sqrt(rec.jsi / rec.total_counts))


@pytest.mark.xfail(strict=True, reason="counting noise alone puts the expected distance at 0.025 for this JSI "
                                       "on 128 x 128 bins at 1e6 events")
def test_round_trip_total_variation_at_1e6_events(tof_jsa):
    rec = reconstruct_jsi(simulate_tof(tof_jsa, SPEC, SPEC, n_events=10**6, seed=5, threads=4), SPEC, SPEC)
    assert total_variation(rec.jsi, tof_jsa.jsi) < 0.01


@pytest.fixture(scope="module")
def jitter_scan(tof_jsa):
    out = {}
    for fwhm in (0.0, 100e-12, 223e-12):
        hist = simulate_tof(tof_jsa, SPEC, SPEC, _jittered(fwhm), 10**7, 6, threads=8)
        out[fwhm] = reconstruct_jsi(hist, SPEC, SPEC)
    return out


def test_round_trip_converges_with_events_and_vanishing_jitter(tof_jsa, jitter_scan):
    tv = [total_variation(jitter_scan[f].jsi, tof_jsa.jsi) for f in sorted(jitter_scan)]
    assert tv[0] < 0.01
    assert tv[0] <= tv[1] <= tv[2]


def test_schmidt_number_converges_at_zero_jitter(tof_jsa, jitter_scan):
    K_true = schmidt(tof_jsa, "intensity").K
    assert abs(schmidt(jitter_scan[0.0].jsi, "intensity").K - K_true) < 1e-3


@pytest.mark.xfail(strict=True, reason="at 1e7 events counting noise inflates K by about 6e-4, more than the "
                                       "jitter changes it, so the error does not shrink monotonically")
def test_schmidt_error_shrinks_with_jitter(tof_jsa, jitter_scan):
    K_true = schmidt(tof_jsa, "intensity").K
    err = [abs(schmidt(jitter_scan[f].jsi, "intensity").K - K_true) for f in sorted(jitter_scan)]
    assert err[0] <= err[1] <= err[2]


def test_reference_shift_moves_axis_exactly(tof_jsa):
    hist = simulate_tof(tof_jsa, SPEC, SPEC, n_events=10**4, seed=7)
    base = reconstruct_jsi(hist, SPEC, SPEC)
    shifted = reconstruct_jsi(hist, SPEC.replace(reference_wavelength=1550.2e-9), SPEC)
    assert np.allclose(shifted.grid.signal - base.grid.signal, 0.2e-9, rtol=0, atol=1e-20)
    assert np.array_equal(shifted.jsi, base.jsi)


def test_empty_histogram_rejected(tof_jsa):
    hist = simulate_tof(tof_jsa, SPEC, SPEC, n_events=10, seed=1)
    with pytest.raises(ValueError, match="empty"):
        reconstruct_jsi(hist._replace(counts=np.zeros_like(hist.counts)), SPEC, SPEC)


def test_loss_changes_statistics_not_shape(tof_jsa):
    lossless = simulate_tof(tof_jsa, SPEC, SPEC, n_events=5 * 10**5, seed=8).counts
    lossy = simulate_tof(tof_jsa, LOSSY, LOSSY, n_events=2 * 10**6, seed=9, threads=4).counts
    assert lossy.sum() / 2e6 == pytest.approx(0.25, abs=3e-3)
    # two-sample chi-square on bins with enough counts, at comparable retained totals
    a, b = lossless.astype(float), lossy.astype(float)
    ka, kb = np.sqrt(b.sum() / a.sum()), np.sqrt(a.sum() / b.sum())
    used = (a + b) >= 20
    chi2 = np.sum((ka * a[used] - kb * b[used]) ** 2 / (a[used] + b[used]))
    dof = used.sum() - 1
    assert abs(chi2 - dof) < 4 * np.sqrt(2 * dof)


# --- swap calibration ------------------------------------------------------

def _swap_pair(jsa, true_a, true_b, n, seed):
    g = jsa.grid
    swapped = JointAmplitude(JointGrid(g.idler, g.signal), jsa.f.T)
    direct = simulate_tof(jsa, true_a, true_b, n_events=n, seed=seed, threads=4)
    return direct, simulate_tof(swapped, true_a, true_b, n_events=n, seed=seed + 1, threads=4)


def test_symmetric_jsi_is_unchanged_by_swap(grid):
    x = np.arange(128) - 63.5
    jsi = np.exp(-((x[:, None] + x[None, :]) / 18) ** 2 - ((x[:, None] - x[None, :]) / 30) ** 2)
    f = np.sqrt(jsi)
    jsa = JointAmplitude.normalized(grid, f)
    direct, swapped = _swap_pair(jsa, SPEC, SPEC, 10**6, 10)
    cal = swap_calibrate(direct, swapped, SPEC, SPEC, 775e-9)
    step_nu = c * 10e-9 / 128 / 1.36 / 1550e-9 ** 2
    assert cal.reflection_axis == pytest.approx(c / 1550e-9, rel=1e-12)
    assert abs(cal.offset_s - cal.offset_i) < step_nu
    assert cal.reduced_chi2 < 2


def test_asymmetric_jsi_recovers_references():
    # the fibres' true reference wavelengths differ from the nominal ones the analysis assumes;
    # a +-3 nm grid leaves room for the offsets inside the frame
    d = SourceDesign()
    axis = np.linspace(1547e-9, 1553e-9, 128)
    tof_jsa = build_jsa(d.pump(), d.crystal, JointGrid(axis, axis), coverage=0)
    true_a = SPEC.replace(reference_wavelength=1550.15e-9)
    true_b = SPEC.replace(reference_wavelength=1549.9e-9)
    direct, swapped = _swap_pair(tof_jsa, true_a, true_b, 10**6, 12)
    cal = swap_calibrate(direct, swapped, SPEC, SPEC, SourceDesign().pump_wavelength)
    bin_nm = 10e-9 / 128 / SPEC.dispersion
    assert abs(cal.reference_s - 1550.15e-9) < bin_nm
    assert abs(cal.reference_i - 1549.9e-9) < bin_nm
    assert cal.reduced_chi2 < 2


def test_shuffled_histogram_rejected(tof_jsa, rng):
    direct, swapped = _swap_pair(tof_jsa, SPEC, SPEC, 10**6, 14)
    flat = swapped.counts.ravel().copy()
    rng.shuffle(flat)
    with pytest.raises(ValueError, match="mirror image"):
        swap_calibrate(direct, swapped._replace(counts=flat.reshape(swapped.counts.shape)), SPEC, SPEC, 775e-9)


def test_swap_rejects_shape_mismatch(tof_jsa):
    a = simulate_tof(tof_jsa, SPEC, SPEC, n_events=1000, seed=1)
    b = a._replace(counts=a.counts[:, :64])
    with pytest.raises(ValueError, match="square"):
        swap_calibrate(a, b, SPEC, SPEC, 775e-9)
