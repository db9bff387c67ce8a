"""Closed-form minimizers and best constants used as references.

Two explicit families are known for the cylindrical Hardy-Sobolev
quotient.  For a point singularity (k = 0) the minimizer is radial,

    u0(x) = (1 + |x|^(2-sigma))^((2-N)/(2-sigma)),

and for sigma = 1 (any 1 <= k <= N-2) it is

    u1(t, z) = ((1 + |z|)^2 + |t|^2)^((2-N)/2),

each up to scaling.  Both are kept with unit prefactor here; every consumer
normalizes by the weighted constraint integral, which has a closed Beta
form, so the published prefactors (one of which degenerates at k = 1) are
never relied upon.  The associated best constants follow from the
constraint integral via the scale relation S = lam * K^((2-sigma)/(N-sigma))
with lam the Euler-Lagrange constant of the unit-prefactor profile.
"""

from __future__ import annotations

import numpy as np
from scipy.special import beta as _beta, gamma as _gamma

from .grids import sphere_area
from .params import ProblemParams


def k0_profile(params: ProblemParams):
    """Radial minimizer shape for k = 0, as a function of |x|."""
    N, sigma = params.N, params.sigma
    expo = (2.0 - N) / (2.0 - sigma)

    def u0(rho):
        return (1.0 + np.asarray(rho, dtype=float) ** (2.0 - sigma)) ** expo

    return u0


def k0_constraint_integral(params: ProblemParams) -> float:
    """int |x|^(-sigma) u0^(2*_sigma) dx over R^N for the unit-prefactor u0."""
    N, sigma = params.N, params.sigma
    p = (N - sigma) / (2.0 - sigma)
    return sphere_area(N) / (2.0 - sigma) * _gamma(p) ** 2 / _gamma(2.0 * p)


def k0_best_constant(params: ProblemParams) -> float:
    """Best constant for the point singularity, (N-2)(N-sigma) K^((2-s)/(N-s))."""
    N, sigma = params.N, params.sigma
    K = k0_constraint_integral(params)
    return (N - 2.0) * (N - sigma) * K ** ((2.0 - sigma) / (N - sigma))


def sigma1_profile(params: ProblemParams):
    """Minimizer shape for sigma = 1 as a function of (s, r) = (|t|, |z|)."""
    N = params.N

    def u1(s, r):
        s = np.asarray(s, dtype=float)
        r = np.asarray(r, dtype=float)
        return ((1.0 + r) ** 2 + s**2) ** ((2.0 - N) / 2.0)

    return u1


def sigma1_constraint_integral(params: ProblemParams) -> float:
    """int |z|^(-1) u1^(2*_1) dx over R^N, in closed Beta form (k >= 1)."""
    N, k, m = params.N, params.k, params.m
    if k < 1:
        raise ValueError("sigma = 1 closed form needs k >= 1")
    return (
        sphere_area(k)
        * sphere_area(m)
        * 0.5
        * _beta(k / 2.0, N - 1.0 - k / 2.0)
        * _beta(m - 1.0, N - 1.0)
    )


def sigma1_best_constant(params: ProblemParams) -> float:
    """Best constant for sigma = 1, k >= 1: (N-2)(N-k-1) K^(1/(N-1))."""
    N, k, m = params.N, params.k, params.m
    lam = (N - 2.0) * (m - 1.0)
    K = sigma1_constraint_integral(params)
    return lam * K ** (1.0 / (N - 1.0))


def best_constant_reference(params: ProblemParams):
    """Closed-form best constant when one is known, else None."""
    if params.k == 0:
        return k0_best_constant(params)
    if params.sigma == 1.0:
        return sigma1_best_constant(params)
    return None
