"""Shared fixtures: ground states are expensive, solve each case once."""

import numpy as np
import pytest

from cylhs import Grid2D, ToleranceConfig, make_params, solve_ground_state


@pytest.fixture(scope="session")
def tol():
    return ToleranceConfig(solver_tol=1e-2)


def _solve(N, k, sigma, s_max, r_max, n_s, n_r, tol):
    params = make_params(N, k, sigma)
    grid = Grid2D.make(params, s_max, r_max, n_s, n_r)
    return solve_ground_state(params, grid, tol)


@pytest.fixture(scope="session")
def gs_k0_41(tol):
    """k = 0, (N, sigma) = (4, 1): radial oracle case."""
    return _solve(4, 0, 1.0, 1.0, 60.0, 1, 256, tol)


@pytest.fixture(scope="session")
def gs_k0_51(tol):
    return _solve(5, 0, 1.0, 1.0, 60.0, 1, 256, tol)


@pytest.fixture(scope="session")
def gs_k0_405(tol):
    return _solve(4, 0, 0.5, 1.0, 60.0, 1, 256, tol)


@pytest.fixture(scope="session")
def gs_521(tol):
    """(N, k, sigma) = (5, 2, 1): the main 2D case with exact Beta moments."""
    return _solve(5, 2, 1.0, 150.0, 150.0, 256, 256, tol)


@pytest.fixture(scope="session")
def gs_421(tol):
    """(N, k, sigma) = (4, 2, 1): feeds the N = 4 logarithmic branch."""
    return _solve(4, 2, 1.0, 150.0, 150.0, 256, 256, tol)


@pytest.fixture(scope="session")
def gs_511(tol):
    """(N, k, sigma) = (5, 1, 1): feeds the k = 1 criterion branch."""
    return _solve(5, 1, 1.0, 120.0, 120.0, 192, 192, tol)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
