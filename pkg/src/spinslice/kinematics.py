"""Relativistic beam kinematics and the spin precession pitch.

All quantities are SI. Energies are kinetic energies in joules; use
``constants.EV`` to convert from electronvolts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import CONSTANTS, PhysicalConstants


@dataclass(frozen=True)
class BeamParams:
    """Derived kinematic parameters of a monochromatic electron beam.

    Attributes
    ----------
    epsilon : float
        Kinetic energy, J.
    wavelength : float
        de Broglie wavelength 2''pi/k0, m (``inf`` at rest).
    k0 : float
        Longitudinal wavenumber, 1/m.
    v : float
        Group velocity, m/s.
    gamma : float
        Lorentz factor.
    m_star : float
        Relativistic mass gamma*m_e, kg.
    """

    epsilon: float
    wavelength: float
    k0: float
    v: float
    gamma: float
    m_star: float

    @property
    def momentum(self) -> float:
        """Relativistic momentum hbar*k0 = m_star*v, kg m/s."""
        return CONSTANTS.hbar * self.k0


def beam_params(epsilon: float, constants: PhysicalConstants = CONSTANTS) -> BeamParams:
    """Compute kinematics for a beam of kinetic energy ``epsilon`` (J).

    The wavenumber carries the relativistic momentum correction,

        k0 = sqrt(2 m_e eps (1 + eps / (2 m_e c^2))) / hbar,

    and the velocity follows from v = hbar k0 / m_star, which is identical
    to c*sqrt(1 - 1/gamma^2).

    Parameters
    ----------
    epsilon : float
        Kinetic energy in joules, >= 0.

    Returns
    -------
    BeamParams
    """
    if not math.isfinite(epsilon) or epsilon < 0.0:
        raise ValueError(f"kinetic energy must be finite and >= 0, got {epsilon!r}")
    mc2 = constants.mc2
    gamma = 1.0 + epsilon / mc2
    m_star = gamma * constants.m_e
    k0 = math.sqrt(2.0 * constants.m_e * epsilon * (1.0 + epsilon / (2.0 * mc2))) / constants.hbar
    v = constants.hbar * k0 / m_star
    wavelength = 2.0 * math.pi / k0 if k0 > 0.0 else math.inf
    return BeamParams(epsilon=epsilon, wavelength=wavelength, k0=k0, v=v,
                      gamma=gamma, m_star=m_star)


def pauli_pitch(beam: BeamParams, b0: float,
                relativistic_correction: bool = True,
                constants: PhysicalConstants = CONSTANTS) -> float:
    """Full spin-rotation pitch (m) in a transverse field of magnitude ``b0``.

    The spinor mixing angle accumulated over a path dz is 2*pi*dz/pitch, so
    the pitch is the path length for a complete 2*pi rotation:

        pitch = 2 pi hbar^2 k0 / (m_star (g/2) mu_B B)

    With ``relativistic_correction`` the laboratory field is replaced by the
    effective precession field B/gamma^2, which folds in both the moment and
    time-dilation factors; the pitch grows by gamma^2 accordingly.

    Parameters
    ----------
    beam : BeamParams
    b0 : float
        Transverse field magnitude, T, > 0.
    relativistic_correction : bool
        Apply the 1/gamma^2 effective-field scaling (default True).

    Returns
    -------
    float
        Pitch in metres.
    """
    if b0 <= 0.0:
        raise ValueError(f"field magnitude must be > 0, got {b0!r}")
    if beam.k0 <= 0.0:
        raise ValueError("beam at rest has no defined precession pitch")
    b_eff = b0 / beam.gamma**2 if relativistic_correction else b0
    num = 2.0 * math.pi * constants.hbar**2 * beam.k0
    den = beam.m_star * (constants.g / 2.0) * constants.mu_B * b_eff
    return num / den


def mixing_rate(beam: BeamParams, relativistic_correction: bool = True,
                constants: PhysicalConstants = CONSTANTS) -> float:
    """Spinor mixing angle per unit (field * path), rad / (T m).

    angle = mixing_rate * B * dz == 2 pi dz / pauli_pitch(beam, B); exposing
    the rate keeps per-pixel work in the propagation loop to one multiply.
    """
    rate = (constants.g / 2.0) * constants.mu_B / (constants.hbar * beam.v)
    if relativistic_correction:
        rate /= beam.gamma**2
    return rate
