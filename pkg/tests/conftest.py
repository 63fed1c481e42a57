import dataclasses
import math

import pytest

from sepsplit import dynsys, expr


def make_system(f_src, q_src, r=2.6, forcing=None):
    f = expr.parse(f_src, ("x",))
    q = expr.parse(q_src, ("xi", "v"))
    if forcing is None:
        forcing = dynsys.Periodic()
    return dynsys.SystemSpec(f=f, q=q, r=r, forcing=forcing)


def shift_time_origin(orbit, s):
    # same geometric orbit, clock moved by s
    return dataclasses.replace(
        orbit,
        t=orbit.t - s,
        c_plus=orbit.c_plus * math.exp(-orbit.lam * s),
        c_minus=orbit.c_minus * math.exp(orbit.lam * s),
        t_cut=orbit.t_cut - abs(s),
        t_origin_convention="shifted",
    )


def shift_x_period(orbit, n=1):
    d = 2.0 * math.pi * n
    return dataclasses.replace(
        orbit,
        x=orbit.x + d,
        x_limit_minus=orbit.x_limit_minus + d,
        x_limit_plus=orbit.x_limit_plus + d,
    )


@pytest.fixture(scope="session")
def pendulum_system():
    return make_system("sin(x)", "2*sin(xi)")


@pytest.fixture(scope="session")
def pendulum_orbit(pendulum_system):
    eq = dynsys.find_saddle(pendulum_system, 0.1)
    return dynsys.compute_separatrix(pendulum_system, eq)


@pytest.fixture(scope="session")
def cubic_system():
    # homoclinic loop of xdd = x - x^2, saddle at the origin
    return make_system("x - x^2", "sin(xi)", r=3.0)


@pytest.fixture(scope="session")
def cubic_orbit(cubic_system):
    eq = dynsys.find_saddle(cubic_system, -0.1)
    return dynsys.compute_separatrix(cubic_system, eq)
