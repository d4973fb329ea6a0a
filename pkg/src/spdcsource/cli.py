"""
Batch command line: ``spdcsource <subcommand> --config FILE --out DIR``.

Exit status 0 on success, 2 on a configuration error (nothing written),
3 when a numerical validation fails.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .io import provenance_header, write_matrix, write_table, write_timetags
from .report import ReportTable, compare

__all__ = ["main", "run", "SUBCOMMANDS"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class Context:
    def __init__(self, cfg: ExperimentConfig, out: Path, threads: int):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.header = provenance_header(cfg.hash, cfg.seed)
        self.written = []
        self._cache = {}

    def table(self, name, columns, comments=()):
        self.written.append(write_table(self.out / name, columns, self.header, comments))

    def matrix(self, name, m, rows, cols, **kw):
        self.written.append(write_matrix(self.out / name, m, rows, cols, self.header, **kw))

    def cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    # shared objects -----------------------------------------------------

    def design_jsa(self):
        return self.cached("design_jsa", lambda: self.cfg.design().jsa())

    def source(self):
        def build():
            from .jsa import schmidt
            return self.cfg.source_stats(schmidt(self.design_jsa()).K)
        return self.cached("source", build)

    def hom_jsa(self):
        """Design JSA with the pump chirp tuned to the configured purity."""
        def build():
            from .jsa import schmidt, solve_design_parameter
            design = self.cfg.design(self.cfg["hom.grid_points"])
            target = 1.0 / self.cfg["hom.purity"]
            if schmidt(design.jsa()).K >= target:
                return design.jsa()
            gdd = solve_design_parameter("pump_gdd", target, (0.0, 2e-24), design, xtol=1e-30)
            return design.replace(pump_gdd=gdd).jsa()
        return self.cached("hom_jsa", build)


def _summary(ctx, name, rows):
    ctx.table(name, {"quantity": [r[0] for r in rows], "value": [r[1] for r in rows]})
    for q, v in rows:
        print(f"{q:32s} {v:.6g}")


# subcommands -------------------------------------------------------------

def cmd_design(ctx: Context):
    from .jsa import marginals, schmidt
    from .spectra import (bandwidth_convert, grating_stretcher_gdd, make_envelope, residual_gdd,
                          shg_convert, solve_slit_width, time_bandwidth)
    from .phasematch import ppln_shg_crystal

    cfg = ctx.cfg
    jsa = ctx.design_jsa()
    sd = schmidt(jsa)
    m = marginals(jsa)
    g = jsa.grid
    ctx.matrix("jsi.csv", jsa.jsi, g.signal * 1e9, g.idler * 1e9)
    ctx.matrix("jsa_real.csv", jsa.f.real, g.signal * 1e9, g.idler * 1e9)
    ctx.matrix("jsa_imag.csv", jsa.f.imag, g.signal * 1e9, g.idler * 1e9)
    ctx.table("marginals.csv", {"signal_nm": g.signal * 1e9, "signal": m.signal,
                                "idler_nm": g.idler * 1e9, "idler": m.idler})

    # pump chain
    seed = make_envelope(cfg["seed.shape"], cfg["seed.center_wavelength"], cfg["seed.bandwidth"])
    tbp = time_bandwidth(seed)
    gdd = grating_stretcher_gdd(cfg["stretcher.groove_density"], cfg["stretcher.incidence"], cfg["stretcher.defocus"],
                                cfg["stretcher.passes"], cfg["seed.center_wavelength"])
    slit = solve_slit_width(seed, cfg["stretcher.slit_bandwidth"])
    resid = residual_gdd(cfg["compressor.duration"],
                         bandwidth_convert(cfg["seed.center_wavelength"], cfg["compressor.bandwidth"]), "gaussian")
    compressed = make_envelope("gaussian", cfg["seed.center_wavelength"], cfg["compressor.bandwidth"])
    shg = shg_convert(compressed, ppln_shg_crystal(cfg["shg.length"], cfg["shg.poling_period"], cfg["shg.temperature"]))

    rows = [
        ("schmidt_number", sd.K),
        ("purity", sd.purity),
        ("signal_fwhm_nm", m.fwhm_signal * 1e9),
        ("idler_fwhm_nm", m.fwhm_idler * 1e9),
        ("poling_period_um", cfg.crystal().poling_period * 1e6),
        ("seed_tbp_transform_limited", tbp.tbp),
        ("seed_tbp_stated", cfg["seed.duration"] * bandwidth_convert(cfg["seed.center_wavelength"], cfg["seed.bandwidth"])),
        ("stretcher_gdd_ps2", gdd * 1e24),
        ("slit_width_nm", slit * 1e9),
        ("residual_gdd_ps2", resid * 1e24),
        ("shg_bandwidth_nm", shg.fwhm_wavelength() * 1e9),
    ]
    _summary(ctx, "design_summary.csv", rows)
    table = ReportTable((
        compare("design_schmidt_number", sd.K),
        compare("design_signal_fwhm_nm", m.fwhm_signal * 1e9),
        compare("design_idler_fwhm_nm", m.fwhm_idler * 1e9),
    ))
    ctx.table("design_check.csv", table.columns())
    sys.stdout.write(table.render())
    return {"K": sd.K, "signal_fwhm": m.fwhm_signal, "idler_fwhm": m.fwhm_idler,
            "stretcher_gdd": gdd, "shg_fwhm": shg.fwhm_wavelength()}


def cmd_sweep(ctx: Context):
    from .jsa import purity_sweep

    cfg = ctx.cfg
    param = cfg["sweep.parameter"]
    values = cfg.arrays(f"sweep.{param}")
    table = purity_sweep(param, values, cfg.design(cfg["sweep.grid_points"]))
    scale = {"pump_fwhm": 1e9, "pump_gdd": 1e24, "apodization_fwhm": 1e3}[param]
    unit = {"pump_fwhm": "nm", "pump_gdd": "ps2", "apodization_fwhm": "mm"}[param]
    ctx.table("sweep.csv", {f"{param}_{unit}": np.asarray(table.values) * scale, "schmidt_number": table.K,
                            "purity": 1.0 / np.asarray(table.K),
                            "signal_fwhm_nm": np.asarray(table.fwhm_signal) * 1e9,
                            "idler_fwhm_nm": np.asarray(table.fwhm_idler) * 1e9})
    for v, K in zip(table.values, table.K):
        print(f"{param} = {v * scale:.4g} {unit}: K = {K:.6f}")
    return {"table": table}


def cmd_rates(ctx: Context):
    from .counting import coincidences, heralded_efficiency, predict_rates, simulate_timetags

    cfg = ctx.cfg
    src = ctx.source()
    det = ctx.cfg.detectors()
    duration = cfg["rates.duration"]
    window = cfg["source.window"]
    power = cfg["source.power"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pred = predict_rates(src, det[0], det[1], duration, window, power)
    s, i = simulate_timetags(src, det[0], det[1], duration, ctx.cfg.seed, threads=ctx.threads)
    co = coincidences(s, i, window)
    he = heralded_efficiency(co.C, len(s), len(i))
    write_timetags(ctx.out / "timetags.txt", (s, i), ctx.header)
    ctx.written.append(ctx.out / "timetags.txt")
    ctx.table("rates.csv", {
        "quantity": ["singles_signal", "singles_idler", "coincidences", "heralded_efficiency"],
        "predicted": [pred.singles_s, pred.singles_i, pred.coincidences, pred.H_predicted],
        "simulated": [len(s), len(i), co.C, he.H],
        "sigma": [math.sqrt(len(s)), math.sqrt(len(i)), co.sigma, he.sigma_H],
    }, comments=[f"mu={src.mu:.6g} eta_signal={src.eta_signal:.6g} eta_idler={src.eta_idler:.6g} "
                 f"integration_s={duration:g} power_mW={power:g}"])
    rows = [("mu", src.mu), ("eta_signal", src.eta_signal), ("eta_idler", src.eta_idler),
            ("H_predicted", pred.H_predicted), ("H_simulated", he.H), ("H_sigma", he.sigma_H),
            ("coincidences_per_s_predicted", pred.coincidences / duration),
            ("coincidences_per_s_simulated", co.C / duration)]
    _summary(ctx, "rates_summary.csv", rows)
    return {"H": he, "brightness": co.C / duration / power,
            "brightness_sigma": co.sigma / duration / power, "prediction": pred}


def cmd_pol(ctx: Context):
    from .interference.polarization import BASIS_ANGLES, basis_visibilities, calibrate_bases, coincidence_rate

    cfg = ctx.cfg
    model = cfg.polarization_model()
    n = cfg["pol.points"]
    angles = np.linspace(-math.pi / 2, math.pi / 2, n, endpoint=False)
    cols = {"angle_deg": np.degrees(angles)}
    for b, th in BASIS_ANGLES.items():
        cols[f"fixed_{b}"] = [coincidence_rate(model, th, a) for a in angles]
    ctx.table("pol_curves.csv", cols)
    vis = basis_visibilities(model, n)
    ctx.table("pol_visibility.csv", {"basis": list(vis), "visibility": list(vis.values())})
    cal = calibrate_bases(lambda th, b: coincidence_rate(model, BASIS_ANGLES[b], th))
    ctx.table("pol_calibration.csv", {"basis": list(cal._fields),
                                      "angle_deg": [math.degrees(v) for v in cal]})
    for b, v in vis.items():
        print(f"V_{b} = {v:.6f}")
    return {"visibility": vis, "calibration": cal}


def _hom_config(ctx, mu):
    from .interference.hom import HomConfig

    src = ctx.source()
    return HomConfig(ctx.hom_jsa(), mu, herald=ctx.cfg["hom.herald"], splitter_ratio=ctx.cfg["hom.splitter_ratio"],
                     eta_signal=src.eta_signal, eta_idler=src.eta_idler, detectors=ctx.cfg.detectors())


def cmd_hom(ctx: Context):
    from .interference.hom import hom_experiment, power_extrapolation, synthetic_power_series
    from .jsa import schmidt

    cfg = ctx.cfg
    src = ctx.source()
    powers = cfg.arrays("hom.powers")
    mus = src.power_calibration * powers
    span, npts = cfg["hom.delay_span"], cfg["hom.delay_points"]
    delays = np.linspace(-span, span, npts)
    dip = hom_experiment(_hom_config(ctx, mus.max()).replace(delay_grid=delays), "analytic")
    ctx.table("hom_dip.csv", {"delay_ps": delays * 1e12, "fourfold_rate_per_s": dip.fourfold_rate},
              comments=[f"power_mW={powers.max():g} mu={mus.max():.6g} V={dip.V:.6f}"])
    rows = synthetic_power_series(_hom_config(ctx, mus.max()), mus, cfg["hom.counts_max"], ctx.cfg.seed)
    ctx.table("hom_power.csv", {"power_mW": powers, "mu": rows[:, 0], "V": rows[:, 1], "sigma_V": rows[:, 2]})
    fit = power_extrapolation(np.column_stack([powers, rows[:, 1], rows[:, 2]]))
    purity = schmidt(ctx.hom_jsa()).purity
    summary = [("jsa_purity", purity), ("intercept", fit.intercept), ("sigma_intercept", fit.sigma_intercept),
               ("slope_per_mW", fit.slope), ("chi2", fit.chi2), ("dip_visibility_at_max_power", dip.V)]
    _summary(ctx, "hom_extrapolation.csv", summary)
    return {"fit": fit, "purity": purity, "dip": dip}


def _lo_config(ctx, mu_pump, delays=None):
    from .interference.lo import LoConfig, fit_mode_overlap

    cfg = ctx.cfg
    src = ctx.source()
    det = cfg.detectors()
    base = LoConfig(cfg["lo.mu"], 1.0, 0.0, cfg["lo.fock_cutoff"], cfg["lo.purity"],
                    eta_signal=src.eta_signal, eta_herald=src.eta_idler, detectors=(det[2], det[3], det[1]))
    overlap = ctx.cached("lo_overlap", lambda: fit_mode_overlap(base, cfg["lo.zero_power_visibility"]))
    return base.replace(mode_overlap=overlap, mu_pump=mu_pump, delays=delays,
                        jsa=ctx.design_jsa() if delays is not None else None)


def cmd_lo_hom(ctx: Context):
    from .interference.lo import lo_hom

    cfg = ctx.cfg
    src = ctx.source()
    powers = cfg.arrays("lo.powers")
    mus = src.power_calibration * powers
    span, npts = cfg["hom.delay_span"], cfg["hom.delay_points"]
    delays = np.linspace(-span, span, npts)
    dip = lo_hom(_lo_config(ctx, mus.max(), delays))
    ctx.table("lo_dip.csv", {"delay_ps": delays * 1e12, "threefold_per_pulse": dip.threefold},
              comments=[f"power_mW={powers.max():g} mu_pump={mus.max():.6g} V={dip.V:.6f}"])
    series = [lo_hom(_lo_config(ctx, m)) for m in mus]
    ctx.table("lo_power.csv", {"power_mW": powers, "mu_pump": mus, "V": [r.V for r in series]})
    fock = lo_hom(_lo_config(ctx, mus.max()), "fock")
    summary = [("mode_overlap", ctx.cached("lo_overlap", None)), ("V_zero_power", dip.V_zero_power), ("lo_reduction", dip.lo_reduction),
               ("V_at_max_power", dip.V), ("fock_minus_analytic", fock.threefold_dip - dip.threefold_dip)]
    _summary(ctx, "lo_summary.csv", summary)
    return {"V0": dip.V_zero_power, "reduction": dip.lo_reduction}


def cmd_tof(ctx: Context):
    from .jsa import JointAmplitude, JointGrid, build_jsa, schmidt
    from .tof import matched_grid, reconstruct_jsi, simulate_tof, swap_calibrate, total_variation

    cfg = ctx.cfg
    spec_s, spec_i = cfg.tof_specs()
    bins = cfg["tof.bins"]
    design = cfg.design()
    grid = matched_grid(spec_s, spec_i, bins)
    jsa = build_jsa(design.pump(), design.crystal, grid, coverage=0)
    det = cfg.detectors()[:2]
    hist = simulate_tof(jsa, spec_s, spec_i, det, cfg["tof.events"], ctx.cfg.seed, bins, ctx.threads)
    rec = reconstruct_jsi(hist, spec_s, spec_i)
    ctx.matrix("tof_histogram.csv", hist.counts, hist.centers_s * 1e12, hist.centers_i * 1e12,
               row_name="signal_ps", col_name="idler_ps", axis_digits=8)
    ctx.matrix("tof_jsi.csv", rec.jsi, rec.grid.signal * 1e9, rec.grid.idler * 1e9)
    swapped = JointAmplitude(JointGrid(grid.idler, grid.signal), jsa.f.T)
    hist2 = simulate_tof(swapped, spec_s, spec_i, det, cfg["tof.events"], ctx.cfg.seed + 1, bins, ctx.threads)
    cal = swap_calibrate(hist, hist2, spec_s, spec_i, design.pump_wavelength)
    K_true = schmidt(jsa, "intensity").K
    K_rec = schmidt(rec.jsi, "intensity").K
    rows = [("K_true", K_true), ("K_reconstructed", K_rec), ("delta_K", K_rec - K_true),
            ("total_variation", total_variation(rec.jsi, jsa.jsi)), ("detected_pairs", rec.total_counts),
            ("reference_signal_nm", cal.reference_s * 1e9), ("reference_idler_nm", cal.reference_i * 1e9),
            ("swap_residual", cal.residual), ("swap_reduced_chi2", cal.reduced_chi2)]
    _summary(ctx, "tof_summary.csv", rows)
    return {"K_rec": K_rec, "K_true": K_true}


def cmd_report(ctx: Context):
    d = cmd_design(ctx)
    r = cmd_rates(ctx)
    p = cmd_pol(ctx)
    h = cmd_hom(ctx)
    lo = cmd_lo_hom(ctx)
    t = cmd_tof(ctx)
    vis = p["visibility"]
    table = ReportTable((
        compare("design_schmidt_number", d["K"]),
        compare("design_signal_fwhm_nm", d["signal_fwhm"] * 1e9),
        compare("design_idler_fwhm_nm", d["idler_fwhm"] * 1e9),
        compare("stretcher_gdd_ps2", d["stretcher_gdd"] * 1e24),
        compare("shg_bandwidth_nm", d["shg_fwhm"] * 1e9),
        compare("heralded_efficiency", r["H"].H, r["H"].sigma_H),
        compare("brightness_pairs_per_s_mW", r["brightness"], r["brightness_sigma"]),
        compare("pol_visibility_D", vis["D"]),
        compare("pol_visibility_A", vis["A"]),
        compare("pol_visibility_H", vis["H"]),
        compare("pol_visibility_V", vis["V"]),
        compare("hom_zero_power_visibility", h["fit"].intercept, h["fit"].sigma_intercept),
        compare("lo_zero_power_visibility", lo["V0"]),
        compare("measured_schmidt_number", t["K_rec"]),
    ))
    ctx.table("report.csv", table.columns())
    text = table.render()
    with open(ctx.out / "report.txt", "w", newline="\n") as fh:
        fh.write(ctx.header + "\n" + text)
    ctx.written.append(ctx.out / "report.txt")
    sys.stdout.write(text)
    return {"table": table}


SUBCOMMANDS = {
    "design": cmd_design,
    "sweep": cmd_sweep,
    "rates": cmd_rates,
    "pol": cmd_pol,
    "hom": cmd_hom,
    "lo-hom": cmd_lo_hom,
    "tof": cmd_tof,
    "report": cmd_report,
}


def _default_threads():
    env = os.environ.get("SPDCSOURCE_THREADS")
    if env is None:
        return 1
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(f"SPDCSOURCE_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError("SPDCSOURCE_THREADS must be at least 1")
    return n


def run(subcommand: str, config_path=None, out_dir=".", seed=None, threads=None) -> int:
    """Run one subcommand; returns the exit status."""
    try:
        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        cfg = load_config(config_path).with_seed(seed)
        threads = threads if threads is not None else _default_threads()
        if threads < 1:
            raise ConfigError("--threads must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"config error: output directory {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ctx = Context(cfg, out, threads)
    try:
        with np.errstate(all="ignore"):
            SUBCOMMANDS[subcommand](ctx)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical validation error in {subcommand}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (default: bundled paper.config)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, help="override rng.seed")
    common.add_argument("--threads", type=int, help="worker threads (default: $SPDCSOURCE_THREADS or 1)")
    common.add_argument("--format", choices=["csv"], default="csv", help="artifact format")
    parser = argparse.ArgumentParser(prog="spdcsource", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"spdcsource {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return run(args.subcommand, args.config, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
