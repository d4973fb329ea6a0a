"""Dispersive time-of-flight measurement of the joint spectral intensity at several detector jitters."""

from spdcsource.counting import DetectorModel
from spdcsource.jsa import SourceDesign, build_jsa, schmidt
from spdcsource.tof import TofSpec, matched_grid, reconstruct_jsi, simulate_tof, total_variation

spec = TofSpec.from_ps_per_nm(1360.0, 1550e-9)
d = SourceDesign()
jsa = build_jsa(d.pump(), d.crystal, matched_grid(spec, spec, 128), coverage=0)
K_true = schmidt(jsa, "intensity").K
print(f"true K {K_true:.5f}")
for fwhm in (223e-12, 100e-12, 0.0):
    det = (DetectorModel(1.0, jitter_fwhm=fwhm),) * 2
    rec = reconstruct_jsi(simulate_tof(jsa, spec, spec, det, 10**6, seed=1, threads=4), spec, spec)
    print(f"jitter {fwhm * 1e12:5.0f} ps: K {schmidt(rec.jsi, 'intensity').K:.5f}  "
          f"TV {total_variation(rec.jsi, jsa.jsi):.4f}")
