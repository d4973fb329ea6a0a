"""Simulation toolkit for an apodized-crystal pulsed photon-pair source: pump
spectra, phase matching, joint spectra, photon counting, interference
experiments and time-of-flight spectroscopy."""

__version__ = "0.1.0"

from .jsa import JointAmplitude, JointGrid, SourceDesign, build_jsa, marginals, schmidt  # noqa: E402
from .phasematch import CrystalSpec, ppktp_crystal  # noqa: E402

__all__ = [
    "__version__",
    "CrystalSpec",
    "JointAmplitude",
    "JointGrid",
    "SourceDesign",
    "build_jsa",
    "marginals",
    "ppktp_crystal",
    "schmidt",
]
