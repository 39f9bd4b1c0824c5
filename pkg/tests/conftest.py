"""Shared solved problems; session-scoped because shooting and grid solves
are the expensive part of the suite."""

import numpy as np
import pytest

from pohozaev.expr import parse
from pohozaev.radial import RadialProblem, RadialSolution, shoot_pair, shoot_scalar
from pohozaev.rect import NewtonConfig, RectDomain, solve_scalar_grid


@pytest.fixture(scope="session")
def ball_const():
    """f = 1, n = 3, R = 1: the explicit solution u = (1 - r^2)/6."""
    prob = RadialProblem(n=3, R=1.0, f=parse("1", []))
    return prob, shoot_scalar(prob)


@pytest.fixture(scope="session")
def ball_cubic():
    prob = RadialProblem(n=3, R=1.0, f=parse("u^3", ["u"]))
    return prob, shoot_scalar(prob)


@pytest.fixture(scope="session")
def pair_const():
    prob = RadialProblem(n=3, R=1.0, f=parse("1", []), g=parse("1", []))
    return prob, shoot_pair(prob)


@pytest.fixture(scope="session")
def pair_cubic():
    prob = RadialProblem(n=3, R=1.0, f=parse("v^3", ["v"]), g=parse("u^3", ["u"]))
    return prob, shoot_pair(prob)


@pytest.fixture(scope="session")
def analytic_const_solution():
    """u = (1 - r^2)/6 sampled exactly on the standard grid."""
    r = np.linspace(1e-6, 1.0, 2049)
    return RadialSolution(n=3, R=1.0, r=r, u=(1 - r ** 2) / 6, du=-r / 3,
                          alpha=1 / 6)


@pytest.fixture(scope="session")
def analytic_const_pair():
    r = np.linspace(1e-6, 1.0, 2049)
    w = (1 - r ** 2) / 6
    return RadialSolution(n=3, R=1.0, r=r, u=w, du=-r / 3, alpha=1 / 6,
                          v=w.copy(), dv=-r / 3, beta=1 / 6)


@pytest.fixture(scope="session")
def square_const():
    """f = 1 on the unit square at the default 257-node grid."""
    dom = RectDomain(0.5, 0.5)
    f = parse("1", [])
    sol = solve_scalar_grid(dom, f, NewtonConfig(N1=256, N2=256, method="direct"))
    return dom, f, sol
