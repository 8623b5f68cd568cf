"""Spin-resolved slice propagation through compensated multipole filters.

The package splits along physical lines: beam kinematics, the device
field model, spinor wavefields on square grids, the slice propagation
engine, diagnostics, and a scikit-learn style simulator front end with
a command-line runner on top.
"""

from .analysis import ConversionReport, EnergySpectrum, EnergySpreadResult, \
    Moments, PolarizationCurve, RaySet, SamplingError, SamplingReport, \
    SEPARABILITY_THRESHOLD, anisotropy_harmonics, aperture_polarization, \
    conversion_fraction, energy_spread_run, far_ring_radius, \
    group_velocity_displacement, intensity_moments, lg_ray_bundle, \
    point_moments, ray_histogram, ray_trace, sampling_check, \
    separability_metric
from .config import ConfigError, RunConfig, load_config, parse_config
from .constants import CONSTANTS, EV, PhysicalConstants
from .estimator import MultisliceSimulator
from .fields import CANONICAL_BETA, FieldSample, MultipoleFilter, SliceError, \
    SliceIntegrals, core_field, device_fields, fringe_field, ramp_integrals, \
    slice_integrals
from .io import read_field, read_metrics, read_pgm16, read_provenance, \
    write_field, write_intensity_pgm, write_metrics, write_phase_pgm, \
    write_provenance
from .kinematics import BeamParams, beam_params, mixing_rate, pauli_pitch
from .propagation import PropagatorKernel, SliceScheme, build_slice_scheme, \
    far_field, free_propagate, fresnel_propagate, interaction_phase, \
    make_kernel, pauli_step, run_multislice, translate_step, \
    translation_displacement
from .wavefield import Grid, LGParams, OamSpectrum, SpinorField, \
    azimuthal_spectrum, make_lg_beam, mixed_state_average, total_norm

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_BETA", "CONSTANTS", "ConfigError", "ConversionReport",
    "EnergySpectrum", "EnergySpreadResult", "EV", "FieldSample", "Grid",
    "LGParams", "Moments", "MultipoleFilter", "MultisliceSimulator",
    "OamSpectrum", "PhysicalConstants", "PolarizationCurve",
    "PropagatorKernel", "RaySet", "RunConfig", "SEPARABILITY_THRESHOLD",
    "SamplingError", "SamplingReport", "SliceError", "SliceIntegrals",
    "SliceScheme", "SpinorField", "anisotropy_harmonics",
    "aperture_polarization", "azimuthal_spectrum", "beam_params",
    "BeamParams", "build_slice_scheme", "conversion_fraction", "core_field",
    "device_fields", "energy_spread_run", "far_field", "far_ring_radius",
    "free_propagate", "fresnel_propagate", "fringe_field",
    "group_velocity_displacement", "intensity_moments", "interaction_phase",
    "lg_ray_bundle", "load_config", "make_kernel", "make_lg_beam",
    "mixed_state_average", "mixing_rate", "parse_config", "pauli_pitch",
    "pauli_step", "point_moments", "ramp_integrals", "ray_histogram",
    "ray_trace", "read_field", "read_metrics", "read_pgm16",
    "read_provenance", "run_multislice", "sampling_check",
    "separability_metric", "slice_integrals", "total_norm", "translate_step",
    "translation_displacement", "write_field", "write_intensity_pgm",
    "write_metrics", "write_phase_pgm", "write_provenance",
]
