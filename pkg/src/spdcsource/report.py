"""Comparison of computed metrics with published measurements."""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

__all__ = ["ReportRow", "ReportTable", "PUBLISHED", "compare"]


class ReportRow(NamedTuple):
    metric: str
    computed: float
    reported: float
    uncertainty: float
    tolerance: float
    passed: bool
    source: str


# metric -> (reported value, reported uncertainty, fixed tolerance or None, source description)
PUBLISHED = {
    "design_schmidt_number": (1.0016, 0.0, 0.005, "design-tool Schmidt number of the apodized crystal"),
    "design_signal_fwhm_nm": (1.69, 0.0, 0.15, "design signal marginal bandwidth"),
    "design_idler_fwhm_nm": (1.78, 0.0, 0.15, "design idler marginal bandwidth"),
    "stretcher_gdd_ps2": (-14.4, 0.6, 3.6, "stretcher group delay dispersion (geometry under-specified, 25 %)"),
    "shg_bandwidth_nm": (0.608, 0.006, None, "775 nm pump bandwidth after SHG"),
    "heralded_efficiency": (0.680, 0.001, None, "symmetric heralded efficiency as detected"),
    "brightness_pairs_per_s_mW": (2050.0, 50.0, None, "detected pair rate per pump power"),
    "pol_visibility_D": (0.991, 0.001, None, "polarization visibility, D basis"),
    "pol_visibility_A": (0.991, 0.001, None, "polarization visibility, A basis"),
    "pol_visibility_H": (0.997, 0.001, None, "polarization visibility, H basis"),
    "pol_visibility_V": (0.998, 0.002, None, "polarization visibility, V basis"),
    "hom_zero_power_visibility": (0.963, 0.006, None, "successive-photon HOM visibility extrapolated to zero power"),
    "lo_zero_power_visibility": (0.886, 0.002, None, "heralded photon vs LO HOM visibility at zero power"),
    "measured_schmidt_number": (1.0089, 0.0002, None, "Schmidt number of the time-of-flight JSI"),
}


def compare(metric: str, computed: float, computed_sigma: float = 0.0, n_sigma: float = 3.0) -> ReportRow:
    """Pass when |computed - reported| is within the fixed tolerance, or within
    ``n_sigma`` combined standard uncertainties when no fixed tolerance applies."""
    reported, sigma, fixed, source = PUBLISHED[metric]
    tol = fixed if fixed is not None else n_sigma * math.hypot(sigma, computed_sigma)
    passed = bool(abs(computed - reported) <= tol)
    return ReportRow(metric, float(computed), reported, sigma, tol, passed, source)


class ReportTable(NamedTuple):
    rows: tuple

    def columns(self) -> dict:
        return {
            "metric": [r.metric for r in self.rows],
            "computed": [r.computed for r in self.rows],
            "reported": [r.reported for r in self.rows],
            "uncertainty": [r.uncertainty for r in self.rows],
            "tolerance": [r.tolerance for r in self.rows],
            "pass": ["pass" if r.passed else "FAIL" for r in self.rows],
            "source": [r.source for r in self.rows],
        }

    def render(self) -> str:
        head = ("metric", "computed", "reported", "+/-", "tolerance", "result")
        body = [(r.metric, f"{r.computed:.6g}", f"{r.reported:.6g}", f"{r.uncertainty:.2g}",
                 f"{r.tolerance:.2g}", "pass" if r.passed else "FAIL") for r in self.rows]
        widths = [max(len(x[i]) for x in [head] + body) for i in range(len(head))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [head] + body]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def by_metric(self, metric: str) -> Optional[ReportRow]:
        for r in self.rows:
            if r.metric == metric:
                return r
        return None
