"""Shared solves reused across test modules.

The full-scale vortex transport of a Gaussian blob (256^2 nodes, 1000 time
layers, T = 1) is the reference configuration for residual and conservation
checks; it is expensive enough (~10 s, ~0.5 GB) that a single session-wide
instance is computed and shared. A half-resolution twin supports the
refinement comparisons.
"""

import time
from types import SimpleNamespace

import numpy as np
import pytest

from transportlab.characteristics import solve_classical
from transportlab.fields import gaussian_blob, static_field, vortex_field
from transportlab.geometry import Grid, TimePartition, unit_square


def make_transport_case(n: int, nt: int, T: float = 1.0) -> SimpleNamespace:
    grid = Grid(unit_square(), n, n)
    times = TimePartition(T, nt)
    u = vortex_field(unit_square())
    rho0 = static_field(grid, gaussian_blob((0.6, 0.5), 0.08))
    t0 = time.perf_counter()
    rho = solve_classical(rho0, u, times)
    solve_seconds = time.perf_counter() - t0
    return SimpleNamespace(
        grid=grid, times=times, u=u, rho0=rho0, rho=rho, solve_seconds=solve_seconds
    )


@pytest.fixture(scope="session")
def base_case() -> SimpleNamespace:
    """Reference-resolution transport: 256^2 nodes, 1000 layers."""
    return make_transport_case(256, 1000)


@pytest.fixture(scope="session")
def half_case() -> SimpleNamespace:
    """Half resolution in space and time, for refinement ratios."""
    return make_transport_case(128, 500)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
