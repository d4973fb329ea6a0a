"""Predicted and simulated singles, coincidences and heralding efficiency at the bundled operating point."""

from spdcsource.config import load_config
from spdcsource.counting import coincidences, heralded_efficiency, predict_rates, simulate_timetags
from spdcsource.jsa import schmidt

cfg = load_config()
src = cfg.source_stats(schmidt(cfg.design().jsa()).K)
det_s, det_i = cfg.detectors()[:2]
window = cfg["source.window"]
duration = 0.1  # seconds, 1e7 pulses at 100 MHz

pred = predict_rates(src, det_s, det_i, duration, window)
s, i = simulate_timetags(src, det_s, det_i, duration, cfg.seed, threads=4)
co = coincidences(s, i, window)
h = heralded_efficiency(co.C, len(s), len(i))

print(f"mu per pulse {src.mu:.5f}, channel efficiencies {src.eta_signal:.4f} / {src.eta_idler:.4f}")
print(f"singles      predicted {pred.singles_s:10.0f} {pred.singles_i:10.0f}  simulated {len(s):10d} {len(i):10d}")
print(f"coincidences predicted {pred.coincidences:10.0f}  simulated {co.C:10d}")
print(f"H            predicted {pred.H_predicted:.4f}  simulated {h.H:.4f} +/- {h.sigma_H:.4f}")
