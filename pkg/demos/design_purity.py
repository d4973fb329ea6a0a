"""Schmidt number and marginal widths of the apodized source, with and without apodization."""

from spdcsource.jsa import SourceDesign, design_crystal, marginals, schmidt

design = SourceDesign()
jsa = design.jsa()
res = schmidt(jsa)
m = marginals(jsa)
print(f"apodized:    K = {res.K:.5f}  purity = {res.purity:.5f}")
print(f"marginals:   signal {m.fwhm_signal * 1e9:.3f} nm  idler {m.fwhm_idler * 1e9:.3f} nm")

rect = design.replace(crystal=design_crystal(apodization_fwhm=None)).jsa(coverage=0)
print(f"rectangular: K = {schmidt(rect).K:.5f}")
