"""Synthetic HOM power series and its linear extrapolation to zero pump power."""

from spdcsource.config import load_config
from spdcsource.interference import HomConfig, hom_experiment, power_extrapolation, synthetic_power_series
from spdcsource.jsa import schmidt, solve_design_parameter

cfg = load_config()
design = cfg.design(cfg["hom.grid_points"])
gdd = solve_design_parameter("pump_gdd", 1 / cfg["hom.purity"], (0.0, 2e-24), design, xtol=1e-30)
jsa = design.replace(pump_gdd=gdd).jsa()
src = cfg.source_stats(schmidt(cfg.design().jsa()).K)
mus = src.power_calibration * cfg.arrays("hom.powers")

hom = HomConfig(jsa, mus.max(), eta_signal=src.eta_signal, eta_idler=src.eta_idler, detectors=cfg.detectors())
for mu in mus:
    dual = hom_experiment(hom.replace(mu=mu)).V
    single = hom_experiment(hom.replace(mu=mu, herald="single_click")).V
    print(f"mu {mu:.5f}: V dual-click {dual:.4f}  single-click {single:.4f}")

fit = power_extrapolation(synthetic_power_series(hom, mus, counts_max=2e5, seed=cfg.seed))
print(f"zero-power intercept {fit.intercept:.4f} +/- {fit.sigma_intercept:.4f}, "
      f"injected purity {schmidt(jsa).purity:.4f}")
