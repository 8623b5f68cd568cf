"""Shared fixtures: reference beams and a small grid reused across modules."""

import pytest

from spinslice import EV, Grid, beam_params


@pytest.fixture(scope="session")
def beam_100kev():
    return beam_params(100e3 * EV)


@pytest.fixture(scope="session")
def beam_40kev():
    return beam_params(40e3 * EV)


@pytest.fixture(scope="session")
def grid_small():
    return Grid(n=64, extent=80e-6)
