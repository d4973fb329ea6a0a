"""
Experiment configuration: flat ``section.key = value unit`` text.

Grammar, one entry per line::

    # comment
    crystal.length = 27.5 mm
    hom.powers = 10, 20, 30 mW
    hom.herald = dual_click_quasi_pnr

Values are converted to SI on load. Keys not in ``SCHEMA`` are rejected,
as are missing required sections and unknown or mismatched units.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = ["ConfigError", "ExperimentConfig", "SCHEMA", "REQUIRED_SECTIONS", "load_config", "parse_config",
           "bundled_config_path"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


UNITS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9, "pm": 1e-12},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12},
    "power": {"W": 1e3, "mW": 1.0, "uW": 1e-3, "µW": 1e-3},  # stored in mW
    "gdd": {"s^2": 1.0, "ps^2": 1e-24, "fs^2": 1e-30},
    "angle": {"rad": 1.0, "deg": math.pi / 180},
    "dispersion": {"s/m": 1.0, "ps/nm": 1e-3},
    "groove_density": {"/m": 1.0, "/mm": 1e3},
    "brightness": {"/s/mW": 1.0},
}

REQUIRED = object()

# key -> (kind, default); kinds beyond UNITS: temperature, fraction, loss, count, number,
# choice:<a|b>, period (length or "degenerate"), and list:<kind>
SCHEMA = {
    "seed.center_wavelength": ("length", 1550e-9),
    "seed.duration": ("time", 0.23e-12),
    "seed.bandwidth": ("length", 11.1e-9),
    "seed.shape": ("choice:sech2|gaussian", "sech2"),
    "stretcher.groove_density": ("groove_density", 1e6),
    "stretcher.incidence": ("angle", math.radians(52)),
    "stretcher.defocus": ("length", 0.127),
    "stretcher.passes": ("count", 4),
    "stretcher.slit_bandwidth": ("length", 5.42e-9),
    "compressor.duration": ("time", 1.37e-12),
    "compressor.bandwidth": ("length", 3.16e-9),
    "shg.length": ("length", 3e-3),
    "shg.poling_period": ("length", 19.2e-6),
    "shg.temperature": ("temperature", 343.15),
    "pump.center_wavelength": ("length", REQUIRED),
    "pump.fwhm": ("length", REQUIRED),
    "pump.shape": ("choice:gaussian|sech2", "gaussian"),
    "pump.gdd": ("gdd", 0.0),
    "crystal.length": ("length", REQUIRED),
    "crystal.poling_period": ("period", "degenerate"),
    "crystal.temperature": ("temperature", 298.15),
    "crystal.apodization_fwhm": ("length", 14.6e-3),
    "crystal.apodization": ("choice:nonlinearity|duty_cycle|none", "nonlinearity"),
    "grid.half_width": ("length", 7e-9),
    "grid.points": ("count", 256),
    "source.rep_rate": ("frequency", 100e6),
    "source.power": ("power", REQUIRED),
    "source.brightness": ("brightness", REQUIRED),
    "source.heralded_efficiency": ("fraction", REQUIRED),
    "source.window": ("time", 1e-9),
    "rates.duration": ("time", 0.1),
    "sweep.parameter": ("choice:pump_fwhm|pump_gdd|apodization_fwhm", "pump_fwhm"),
    "sweep.pump_fwhm": ("list:length", [v * 1e-9 for v in (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0)]),
    "sweep.pump_gdd": ("list:gdd", [v * 1e-24 for v in (-1.0, -0.5, 0.0, 0.5, 1.0)]),
    "sweep.apodization_fwhm": ("list:length", [v * 1e-3 for v in (8.0, 11.0, 14.6, 18.0, 22.0)]),
    "sweep.grid_points": ("count", 128),
    "pol.phi": ("angle", 0.0),
    "pol.mixed_fraction": ("fraction", 0.0),
    "pol.dephasing": ("fraction", 0.0),
    "pol.amplitude_imbalance": ("number", 0.0),
    "pol.waveplate_error": ("angle", 0.0),
    "pol.points": ("count", 72),
    "hom.herald": ("choice:dual_click_quasi_pnr|single_click", "dual_click_quasi_pnr"),
    "hom.purity": ("fraction", 0.963),
    "hom.grid_points": ("count", 128),
    "hom.powers": ("list:power", [10.0, 20.0, 30.0, 40.0, 48.3]),
    "hom.counts_max": ("number", 2000.0),
    "hom.delay_span": ("time", 10e-12),
    "hom.delay_points": ("count", 81),
    "hom.splitter_ratio": ("fraction", 0.5),
    "lo.mu": ("number", 0.0194),
    "lo.purity": ("fraction", 0.963),
    "lo.zero_power_visibility": ("fraction", 0.886),
    "lo.powers": ("list:power", [10.0, 20.0, 40.0, 67.0]),
    "lo.fock_cutoff": ("count", 6),
    "tof.dispersion": ("dispersion", 1.36),
    "tof.insertion_loss": ("loss", 1 - 10 ** -0.3),
    "tof.reference_wavelength": ("length", 1550e-9),
    "tof.frame": ("time", 10e-9),
    "tof.bins": ("count", 128),
    "tof.events": ("count", 10**6),
    "rng.seed": ("count", REQUIRED),
}
for _n in range(1, 5):
    SCHEMA.update({
        f"detector.{_n}.efficiency": ("fraction", REQUIRED),
        f"detector.{_n}.dark_rate": ("frequency", 0.0),
        f"detector.{_n}.jitter": ("time", 0.0),
        f"detector.{_n}.dead_time": ("time", 0.0),
    })

REQUIRED_SECTIONS = ("pump", "crystal", "source", "detector.1", "detector.2", "detector.3", "detector.4", "rng")

_LINE = re.compile(r"^\s*([A-Za-z0-9_.]+)\s*=\s*(.*?)\s*$")
_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def bundled_config_path() -> Path:
    return Path(str(resources.files("spdcsource") / "data" / "paper.config"))


def _split_value(text):
    m = re.match(rf"^((?:{_NUMBER})(?:\s*,\s*{_NUMBER})*)\s*(.*)$", text)
    if not m:
        return None, text
    numbers = [float(v) for v in m.group(1).split(",")]
    return numbers, m.group(2).strip()


def _convert(key, kind, text):
    if kind.startswith("choice:"):
        options = kind.split(":", 1)[1].split("|")
        if text not in options:
            raise ConfigError(f"{key}: expected one of {options}, got {text!r}")
        return text
    if kind == "period" and text == "degenerate":
        return text
    numbers, unit = _split_value(text)
    if numbers is None:
        raise ConfigError(f"{key}: cannot parse value {text!r}")
    is_list = kind.startswith("list:")
    base = kind.split(":", 1)[1] if is_list else ("length" if kind == "period" else kind)
    if len(numbers) > 1 and not is_list:
        raise ConfigError(f"{key}: expected a single value")
    values = [_scale(key, base, v, unit) for v in numbers]
    return values if is_list else values[0]


def _scale(key, kind, value, unit):
    if kind in UNITS:
        table = UNITS[kind]
        if unit not in table:
            raise ConfigError(f"{key}: unit {unit!r} not valid here; use one of {sorted(table)}")
        return value * table[unit]
    if kind == "temperature":
        if unit == "K":
            return value
        if unit == "C":
            return value + 273.15
        raise ConfigError(f"{key}: temperature unit must be K or C")
    if kind == "fraction":
        if unit == "%":
            value /= 100
        elif unit:
            raise ConfigError(f"{key}: fraction takes no unit or %")
        if not 0 <= value <= 1:
            raise ConfigError(f"{key}: fraction must lie in [0, 1]")
        return value
    if kind == "loss":
        if unit == "dB":
            return 1 - 10 ** (-value / 10)
        return _scale(key, "fraction", value, unit)
    if kind == "count":
        if unit or value != int(value) or value < 0:
            raise ConfigError(f"{key}: expected a non-negative integer without unit")
        return int(value)
    if kind == "number":
        if unit:
            raise ConfigError(f"{key}: dimensionless value takes no unit")
        return value
    raise ConfigError(f"{key}: unsupported kind {kind}")


def parse_config(text: str) -> "ExperimentConfig":
    given = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"line {lineno}: expected 'section.key = value unit'")
        key, value = m.groups()
        if key not in SCHEMA:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        if key in given:
            raise ConfigError(f"{key}: set twice (line {lineno})")
        given[key] = _convert(key, SCHEMA[key][0], value)
    for section in REQUIRED_SECTIONS:
        if not any(k.startswith(section + ".") for k in given):
            raise ConfigError(f"{section}: missing required section")
    values = {}
    for key, (kind, default) in SCHEMA.items():
        if key in given:
            values[key] = given[key]
        elif default is REQUIRED:
            raise ConfigError(f"{key}: required key missing")
        else:
            values[key] = default
    return ExperimentConfig(values)


def load_config(path=None) -> "ExperimentConfig":
    path = Path(path) if path is not None else bundled_config_path()
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @property
    def hash(self) -> str:
        """Hash of the resolved SI values, so formatting and comments do not matter."""
        lines = []
        for key in sorted(self.values):
            v = self.values[key]
            if isinstance(v, list):
                v = ",".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{key}={v}")
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]

    @property
    def seed(self) -> int:
        return self.values["rng.seed"]

    def with_seed(self, seed: Optional[int]) -> "ExperimentConfig":
        if seed is None:
            return self
        return ExperimentConfig({**self.values, "rng.seed": int(seed)})

    # builders -----------------------------------------------------------

    def crystal(self):
        from .jsa import design_crystal
        from .phasematch import ppktp_crystal

        v = self.values
        apod = v["crystal.apodization"]
        fwhm = None if apod == "none" else v["crystal.apodization_fwhm"]
        convention = "nonlinearity" if apod == "none" else apod
        if v["crystal.poling_period"] == "degenerate":
            return design_crystal(v["crystal.temperature"], v["pump.center_wavelength"], fwhm, convention,
                                  v["crystal.length"])
        return ppktp_crystal(v["crystal.length"], v["crystal.poling_period"], v["crystal.temperature"], fwhm,
                             convention)

    def design(self, n_points: Optional[int] = None):
        from .jsa import SourceDesign

        v = self.values
        return SourceDesign(self.crystal(), v["pump.center_wavelength"], v["pump.fwhm"], v["pump.gdd"],
                            v["pump.shape"], v["grid.half_width"], n_points or v["grid.points"])

    def detectors(self):
        from .counting import DetectorModel

        v = self.values
        return tuple(DetectorModel(v[f"detector.{n}.efficiency"], v[f"detector.{n}.dark_rate"],
                                   v[f"detector.{n}.jitter"], v[f"detector.{n}.dead_time"])
                     for n in range(1, 5))

    def source_stats(self, modes_K: float = 1.0):
        from .counting import SourceStats, calibrate_operating_point

        v = self.values
        det = self.detectors()
        base = SourceStats(0.0, modes_K, rep_rate=v["source.rep_rate"])
        return calibrate_operating_point(v["source.heralded_efficiency"], v["source.brightness"], v["source.power"],
                                         base, det[0], det[1], v["source.window"])

    def polarization_model(self):
        from .interference.polarization import PolarizationModel

        v = self.values
        return PolarizationModel(v["pol.phi"], v["pol.amplitude_imbalance"], v["pol.mixed_fraction"],
                                 v["pol.dephasing"], v["pol.waveplate_error"])

    def tof_specs(self):
        from .tof import TofSpec

        v = self.values
        spec = TofSpec(v["tof.dispersion"], v["tof.reference_wavelength"], v["tof.insertion_loss"], v["tof.frame"])
        return spec, spec

    def arrays(self, key) -> np.ndarray:
        return np.asarray(self.values[key], dtype=float)
