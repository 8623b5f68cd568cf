"""Scikit-learn front end for the slice propagator.

The simulator is a configured device. The constructor records plain
parameters (beam energy, multipole geometry, grid, slicing); ``fit``
freezes them into validated physics objects and runs the sampling
check; ``transform`` sends one or many spinor fields through the
device. Because the class follows the estimator contract, it clones,
prints and grid-searches like any other transformer.
"""

from __future__ import annotations

import math

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .analysis import SamplingError, sampling_check
from .constants import EV
from .fields import MultipoleFilter
from .kinematics import beam_params
from .propagation import build_slice_scheme, run_multislice
from .wavefield import Grid, SpinorField


class MultisliceSimulator(BaseEstimator, TransformerMixin):
    """Propagate spinor wavefields through a compensated multipole filter.

    Parameters are SI except the beam energy, which follows the
    electron-optics custom of electronvolts. ``fringe_length`` is the
    1/a extent of the linear entrance and exit ramps; zero means hard
    edges. ``n_slices`` is the total slicing budget distributed over
    the device regions in proportion to their length.

    Fitted attributes: ``beam_``, ``filter_``, ``grid_``, ``scheme_``
    and the sampling verdict ``report_``. Fitting a configuration that
    fails the sampling check raises unless ``override_sampling`` is set.
    """

    def __init__(self, energy_ev: float = 100e3, q: int = -1,
                 b0: float = 3e-3, r0: float = 10e-6,
                 beta: float = math.pi / 2, core_length: float = 0.05,
                 fringe_length: float = 0.0,
                 compensation_offset: float = 0.0, n: int = 256,
                 extent: float = 80e-6, n_slices: int = 20,
                 relativistic_correction: bool = True, pauli: bool = True,
                 translate: bool = True, override_sampling: bool = False):
        self.energy_ev = energy_ev
        self.q = q
        self.b0 = b0
        self.r0 = r0
        self.beta = beta
        self.core_length = core_length
        self.fringe_length = fringe_length
        self.compensation_offset = compensation_offset
        self.n = n
        self.extent = extent
        self.n_slices = n_slices
        self.relativistic_correction = relativistic_correction
        self.pauli = pauli
        self.translate = translate
        self.override_sampling = override_sampling

    def fit(self, X=None, y=None) -> "MultisliceSimulator":
        """Validate the configuration and precompute the run plan.

        ``X`` is accepted and ignored, per the transformer contract.
        """
        self.beam_ = beam_params(self.energy_ev * EV)
        fringe_a = 0.0 if self.fringe_length == 0 else 1.0 / self.fringe_length
        self.filter_ = MultipoleFilter(
            q=self.q, b0=self.b0, r0=self.r0, core_length=self.core_length,
            beta=self.beta, fringe_a=fringe_a,
            compensation_offset=self.compensation_offset)
        self.grid_ = Grid(n=self.n, extent=self.extent)
        self.scheme_ = build_slice_scheme(self.filter_, self.n_slices)
        self.report_ = sampling_check(self.filter_, self.grid_, self.scheme_,
                                      self.beam_)
        if not self.report_.ok and not self.override_sampling:
            raise SamplingError(self.report_)
        return self

    def transform(self, X):
        """Propagate ``X`` (a SpinorField or an iterable of them)
        through the fitted device."""
        check_is_fitted(self, "scheme_")
        single = isinstance(X, SpinorField)
        fields = [X] if single else list(X)
        out = []
        for field in fields:
            if field.grid != self.grid_:
                raise ValueError("input field grid does not match the"
                                 " fitted grid")
            out.append(run_multislice(
                field, self.filter_, self.scheme_, self.beam_,
                relativistic_correction=self.relativistic_correction,
                pauli=self.pauli, translate=self.translate))
        return out[0] if single else out
