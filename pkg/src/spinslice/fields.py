"""Multipolar Wien-filter field model: core multipole, soft-edge fringes,
vector potential and per-slice integrals.

The transverse multipole of order q (q <= -1) has field direction
q*theta + beta and magnitude B0 (r/R0)^|q|. Internally the field derives
from the complex monomial c W^n with W = x + iy, n = 1 - q and
c = B0 exp(-i beta) / (n R0^(n-1)):

    B_x + i B_y = conj(n c W^(n-1)),      A_z = Im(c W^n).

This pair satisfies B_perp = curl(A_z zhat) identically, which the tests
verify by finite differences. With the default beta = pi/2 the quadrupole
is B = (B0/R0) (y, x, 0) and A_z = -(B0/(2 R0)) (x^2 - y^2).

Soft fringes (quadrupole only) scale the core pattern by a linear ramp
k(z) that rises 0 -> 1 over the entry region of length 1/a and falls back
over the exit region. The ramp adds a longitudinal component
B_z = (B0/R0) k'(z) x y and the transverse vector potential

    A_perp = (B0/R0) (-(k'/4) x y^2, +(k'/4) x^2 y),

again consistent with curl A = B inside each region. The compensating
electrostatic potential is tied to the magnetic one, V_E = v (1 + offset)
A_z, so a tuned filter (offset = 0) exerts no net in-plane force;
offset = -1 describes a bare magnetic element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import BeamParams
from .validation import check_nonnegative, check_positive
from .wavefield import Grid

CANONICAL_BETA = math.pi / 2.0


class SliceError(ValueError):
    """A requested slice straddles a device-region boundary."""


@dataclass(frozen=True)
class MultipoleFilter:
    """Geometry and excitation of one multipolar Wien filter.

    Parameters
    ----------
    q : int
        Multipole order, <= -1 (-1 quadrupole, -2 hexapole, ...).
    b0 : float
        Field magnitude at the reference radius, T.
    r0 : float
        Reference radius, m.
    core_length : float
        Length of the constant-field core, m (0 allowed with fringes).
    beta : float
        Orientation: field direction angle is q*theta + beta. The default
        pi/2 is the canonical quadrupole orientation (B0/R0)(y, x, 0).
    fringe_a : float
        Inverse fringe length 1/m; 0 means hard edges.
    z_entry : float
        Axial position where the device (entry fringe, or core for hard
        edges) begins, m.
    compensation_offset : float
        Fractional detuning of the electric compensation,
        V_E = v (1 + offset) A_z. 0 = tuned, -1 = bare magnet.
    """

    q: int = -1
    b0: float = 3e-3
    r0: float = 10e-6
    core_length: float = 0.05
    beta: float = CANONICAL_BETA
    fringe_a: float = 0.0
    z_entry: float = 0.0
    compensation_offset: float = 0.0

    def __post_init__(self):
        if int(self.q) != self.q or self.q > -1:
            raise ValueError(f"multipole order q must be an integer <= -1, got {self.q!r}")
        object.__setattr__(self, "q", int(self.q))
        check_positive("b0", self.b0)
        check_positive("r0", self.r0)
        check_nonnegative("core_length", self.core_length)
        check_nonnegative("fringe_a", self.fringe_a)
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")
        if not math.isfinite(self.compensation_offset):
            raise ValueError("compensation_offset must be finite")
        if self.fringe_a > 0.0:
            if self.q != -1:
                raise ValueError("the fringe model is defined for the quadrupole (q = -1) only")
            if not math.isclose(self.beta, CANONICAL_BETA, rel_tol=0.0, abs_tol=1e-12):
                raise ValueError(
                    "fringed filters require the canonical orientation beta = pi/2")
        if self.core_length == 0.0 and self.fringe_a == 0.0:
            raise ValueError("device has zero length (no core and no fringes)")

    @property
    def fringe_length(self) -> float:
        return 1.0 / self.fringe_a if self.fringe_a > 0.0 else 0.0

    @property
    def z_core_start(self) -> float:
        return self.z_entry + self.fringe_length

    @property
    def z_core_end(self) -> float:
        return self.z_core_start + self.core_length

    @property
    def z_exit(self) -> float:
        """Axial position where all fields have fallen to zero."""
        return self.z_core_end + self.fringe_length

    @property
    def length(self) -> float:
        return self.z_exit - self.z_entry

    def regions(self) -> list[tuple[float, float, str]]:
        """Ordered (z_lo, z_hi, kind) spans; kind in entry/core/exit."""
        out = []
        if self.fringe_a > 0.0:
            out.append((self.z_entry, self.z_core_start, "entry"))
        if self.core_length > 0.0:
            out.append((self.z_core_start, self.z_core_end, "core"))
        if self.fringe_a > 0.0:
            out.append((self.z_core_end, self.z_exit, "exit"))
        return out

    def ramp(self, z: np.ndarray | float) -> tuple[np.ndarray, np.ndarray]:
        """Axial profile k(z) and its derivative k'(z) at absolute z."""
        z = np.asarray(z, dtype=float)
        core = (z >= self.z_core_start) & (z < self.z_core_end)
        if self.fringe_a == 0.0:
            k = np.where(core, 1.0, 0.0)
            return k, np.zeros_like(k)
        a = self.fringe_a
        ent = (z >= self.z_entry) & (z < self.z_core_start)
        ext = (z >= self.z_core_end) & (z < self.z_exit)
        k = np.select([core, ent, ext],
                      [1.0, (z - self.z_entry) * a,
                       1.0 - (z - self.z_core_end) * a], default=0.0)
        kp = np.select([ent, ext], [a, -a], default=0.0)
        return k, kp


@dataclass(frozen=True)
class FieldSample:
    """Fields at one or more points: B (T), A (T m), V_E (V).

    ``b`` and ``a`` are length-3 tuples of arrays/scalars (x, y, z
    components) broadcast over the sample positions.
    """

    b: tuple
    a: tuple
    v_e: np.ndarray | float


def _core_complex(filt: MultipoleFilter, x, y):
    """(B_x + i B_y, A_z) of the core pattern at full excitation."""
    n = 1 - filt.q
    c = filt.b0 / (n * filt.r0 ** (n - 1)) * np.exp(-1j * filt.beta)
    w = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
    wm = w ** (n - 1)
    return np.conj(n * c * wm), np.imag(c * wm * w)


def core_field(filt: MultipoleFilter, x, y, v: float = 0.0) -> FieldSample:
    """Fields inside the constant core at transverse position (x, y).

    ``v`` is the beam velocity used for the compensation potential
    V_E = v (1 + offset) A_z; pass 0 to ignore the electric side.
    """
    bc, az = _core_complex(filt, x, y)
    zero = np.zeros_like(az)
    v_e = v * (1.0 + filt.compensation_offset) * az
    return FieldSample(b=(bc.real, bc.imag, zero), a=(zero, zero, az), v_e=v_e)


def fringe_field(filt: MultipoleFilter, x, y, z, v: float = 0.0) -> FieldSample:
    """Fields within a fringe, ``z`` measured outward from the core edge.

    Uses the exit-side parametrization k = 1 - a z, k' = -a (the entry
    fringe is its mirror image); z >= 1/a returns zero fields.
    """
    if filt.fringe_a <= 0.0:
        raise ValueError("filter has hard edges; no fringe region")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0):
        raise ValueError("fringe coordinate z must be >= 0 (0 = core edge)")
    a = filt.fringe_a
    k = np.clip(1.0 - a * z, 0.0, 1.0)
    kp = np.where(z < 1.0 / a, -a, 0.0)
    bc, az_core = _core_complex(filt, x, y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = filt.b0 / filt.r0
    b = (k * bc.real, k * bc.imag, scale * kp * x * y)
    aperp = (-scale * kp / 4.0 * x * y ** 2, scale * kp / 4.0 * x ** 2 * y)
    az = k * az_core
    v_e = v * (1.0 + filt.compensation_offset) * az
    return FieldSample(b=b, a=(aperp[0], aperp[1], az), v_e=v_e)


def device_fields(filt: MultipoleFilter, x, y, z, v: float = 0.0):
    """(E, B) at absolute position(s) for classical tracing.

    E derives from the compensation potential V_E(x, y, z) =
    v (1 + offset) A_z, so it includes the longitudinal component in the
    fringes. Hard-edged devices have no resolved edge field; the electric
    potential step at their boundary is not modelled.

    Returns
    -------
    (E, B) : tuple of tuples of arrays, (x, y, z) components.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k, kp = filt.ramp(z)
    bc, az_core = _core_complex(filt, x, y)
    scale = filt.b0 / filt.r0
    bx = k * bc.real
    by = k * bc.imag
    bz = scale * kp * x * y if filt.fringe_a > 0.0 else np.zeros_like(bx)
    comp = v * (1.0 + filt.compensation_offset)
    # E_perp = -v grad_perp(A_z k) = v (B_y, -B_x); E_z = -v A_z_core k'
    ex = comp * by
    ey = -comp * bx
    ez = -comp * az_core * kp
    return (ex, ey, ez), (bx, by, bz)


@dataclass(frozen=True)
class SliceIntegrals:
    """Per-slice axial integrals on the grid, all SI.

    az, az2, ve are integrals of A_z, A_z^2 and V_E over the slice
    (T m^2, T^2 m^3, V m); bx, by, bz integrate the field components
    (T m); ax_mean, ay_mean are the slice-mean transverse vector
    potential (T m). kind tags the region the slice lies in.
    """

    z0: float
    z1: float
    kind: str
    az: np.ndarray
    az2: np.ndarray
    ve: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    bz: np.ndarray
    ax_mean: np.ndarray
    ay_mean: np.ndarray

    @property
    def dz(self) -> float:
        return self.z1 - self.z0


def _locate(filt: MultipoleFilter, z0: float, z1: float) -> str:
    """Region kind containing [z0, z1], or 'free'; straddles raise."""
    if z1 <= z0:
        raise SliceError(f"slice [{z0}, {z1}] has nonpositive thickness")
    tol = 1e-12 * max(1.0, filt.length, abs(z0), abs(z1))
    if z1 <= filt.z_entry + tol or z0 >= filt.z_exit - tol:
        return "free"
    for lo, hi, kind in filt.regions():
        if z0 >= lo - tol and z1 <= hi + tol:
            return kind
    raise SliceError(
        f"slice [{z0:g}, {z1:g}] straddles a region boundary of the device "
        f"spanning {[(round(lo, 12), round(hi, 12), kd) for lo, hi, kd in filt.regions()]}")


def ramp_integrals(filt: MultipoleFilter, z0: float, z1: float) -> tuple[str, float, float, float]:
    """(kind, int k dz, int k^2 dz, k') for a slice [z0, z1].

    The ramp is linear within any region, so both integrals come out in
    closed form. Raises SliceError on straddling slices.
    """
    kind = _locate(filt, z0, z1)
    dz = z1 - z0
    if kind == "free":
        return kind, 0.0, 0.0, 0.0
    if kind == "core":
        return kind, dz, dz, 0.0
    fl = filt.fringe_length
    if kind == "entry":
        u0 = (z0 - filt.z_entry) / fl
        u1 = (z1 - filt.z_entry) / fl
        kprime = filt.fringe_a
    else:  # exit
        u0 = 1.0 - (z1 - filt.z_core_end) / fl
        u1 = 1.0 - (z0 - filt.z_core_end) / fl
        kprime = -filt.fringe_a
    u0 = min(max(u0, 0.0), 1.0)
    u1 = min(max(u1, 0.0), 1.0)
    int_k = fl * (u1 * u1 - u0 * u0) / 2.0
    int_k2 = fl * (u1 ** 3 - u0 ** 3) / 3.0
    return kind, int_k, int_k2, kprime


def slice_integrals(filt: MultipoleFilter, z0: float, z1: float,
                    grid: Grid, beam: BeamParams) -> SliceIntegrals:
    """Analytic axial integrals of the device fields over one slice,
    rasterized at every pixel center of ``grid``.

    Raises
    ------
    SliceError
        If [z0, z1] straddles a region boundary.
    """
    kind, int_k, int_k2, kprime = ramp_integrals(filt, z0, z1)
    n = grid.n
    dz = z1 - z0
    if kind == "free":
        zeros = np.zeros((n, n))
        return SliceIntegrals(z0=z0, z1=z1, kind="free", az=zeros, az2=zeros,
                              ve=zeros, bx=zeros, by=zeros, bz=zeros,
                              ax_mean=zeros, ay_mean=zeros)
    X, Y = grid.mesh()
    bc, az_core = _core_complex(filt, X, Y)
    scale = filt.b0 / filt.r0
    az = az_core * int_k
    az2 = az_core ** 2 * int_k2
    ve = beam.v * (1.0 + filt.compensation_offset) * az
    bx = bc.real * int_k
    by = bc.imag * int_k
    if kind == "core":
        bz = np.zeros((n, n))
        ax_mean = np.zeros((n, n))
        ay_mean = np.zeros((n, n))
    else:
        bz = scale * kprime * X * Y * dz
        ax_mean = -scale * kprime / 4.0 * X * Y ** 2
        ay_mean = scale * kprime / 4.0 * X ** 2 * Y
    return SliceIntegrals(z0=z0, z1=z1, kind=kind, az=az, az2=az2, ve=ve,
                          bx=bx, by=by, bz=bz, ax_mean=ax_mean, ay_mean=ay_mean)
