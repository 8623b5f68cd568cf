"""Physical constants (CODATA-2018) used throughout the package.

The values are pinned as literals rather than imported from scipy.constants so
that every numeric result in the test suite is reproducible bit-for-bit no
matter which scipy release happens to be installed.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Frozen CODATA-2018 constant set.

    Attributes
    ----------
    hbar : float
        Reduced Planck constant, J s.
    m_e : float
        Electron rest mass, kg.
    e : float
        Elementary charge (positive), C.
    c : float
        Speed of light in vacuum, m/s.
    mu_B : float
        Bohr magneton, J/T.
    g : float
        Electron spin g-factor (taken as exactly 2).
    """

    hbar: float = 1.054571817e-34   # J s
    m_e: float = 9.1093837015e-31   # kg
    e: float = 1.602176634e-19      # C (exact)
    c: float = 299792458.0          # m/s (exact)
    mu_B: float = 9.2740100783e-24  # J/T
    g: float = 2.0

    def __post_init__(self):
        assert self.hbar > 0 and self.m_e > 0 and self.e > 0
        assert self.c > 0 and self.mu_B > 0 and self.g > 0
        # stored mu_B must agree with e*hbar/(2 m_e); CODATA-2018 self
        # consistency is ~6e-10 relative
        derived = self.e * self.hbar / (2.0 * self.m_e)
        assert abs(derived - self.mu_B) / self.mu_B < 1e-9

    @property
    def mc2(self) -> float:
        """Electron rest energy, J."""
        return self.m_e * self.c * self.c


CONSTANTS = PhysicalConstants()

# handy energy unit: multiply an eV figure by EV to get joules
EV = CONSTANTS.e
