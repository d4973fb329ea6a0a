"""Interference experiments: polarization analyzers, successive-photon HOM and LO HOM."""

from .fock import ClickOutcomes, beam_splitter, coherent_dm, fock_dm, fock_oracle, thermal_dm
from .gaussian import GaussianState, click_probability, two_mode_squeezed
from .hom import (
    Extrapolation,
    HomConfig,
    HomResult,
    dip_fwhm,
    hom_experiment,
    power_extrapolation,
    synthetic_power_series,
)
from .lo import LoConfig, LoResult, fit_mode_overlap, lo_hom, marginal_autocorrelation, mixture_weight
from .polarization import (
    BASIS_ANGLES,
    BasisAngles,
    PolarizationModel,
    basis_bias,
    basis_visibilities,
    calibrate_bases,
    coincidence_curve,
    coincidence_rate,
    fit_dephasing,
    fit_mixed_fraction,
    naive_bases,
)
from .visibility import SinusoidFit, Visibility, fit_sinusoid, visibility
