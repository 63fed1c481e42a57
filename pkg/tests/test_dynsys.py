import math

import numpy as np
import pytest

from sepsplit import dynsys, expr
from sepsplit.errors import HypothesisError, NumericsError

from conftest import make_system


# --- equilibria ------------------------------------------------------------

def test_find_saddle_pendulum(pendulum_system):
    eq = dynsys.find_saddle(pendulum_system, 0.1)
    assert abs(eq.x) < 1e-12
    assert abs(eq.lam - 1.0) < 1e-12


def test_find_saddle_cubic(cubic_system):
    eq = dynsys.find_saddle(cubic_system, -0.1)
    assert abs(eq.x) < 1e-12
    assert abs(eq.lam - 1.0) < 1e-12


def test_find_saddle_rejects_center(pendulum_system):
    # Newton from 2.5 lands on x = pi where f'(pi) = -1 < 0
    with pytest.raises(HypothesisError):
        dynsys.find_saddle(pendulum_system, 2.5)


def test_saddle_rate_matches_difference_quotient(cubic_system):
    eq = dynsys.find_saddle(cubic_system, -0.1)
    h = 1e-6
    fp = (cubic_system.f_scalar(eq.x + h) - cubic_system.f_scalar(eq.x - h)) / (2 * h)
    assert abs(eq.lam**2 - fp) < 1e-8


def test_rejects_small_forcing_exponent():
    with pytest.raises(HypothesisError):
        make_system("sin(x)", "sin(xi)", r=2.5)


# --- pendulum closed form --------------------------------------------------

def test_pendulum_orbit_matches_closed_form(pendulum_orbit):
    # x0(t) = 4*atan(e^t), xd0(t) = 2/cosh(t)
    t = np.linspace(-15.0, 15.0, 1201)
    x, v, a = dynsys.orbit_eval(pendulum_orbit, t)
    assert np.max(np.abs(x - 4.0 * np.arctan(np.exp(t)))) < 1e-9
    assert np.max(np.abs(v - 2.0 / np.cosh(t))) < 1e-9
    assert np.max(np.abs(a - np.sin(x))) < 1e-8


def test_pendulum_time_origin_at_peak_speed(pendulum_orbit):
    x, v, a = dynsys.orbit_eval(pendulum_orbit, 0.0)
    assert abs(x - math.pi) < 1e-10
    assert abs(v - 2.0) < 1e-10
    assert abs(a) < 1e-8
    # sampled max sits up to half a step off the true peak
    assert abs(pendulum_orbit.max_speed - 2.0) < 1e-5


def test_pendulum_limits_and_rate(pendulum_orbit):
    assert abs(pendulum_orbit.x_limit_minus) < 1e-9
    assert abs(pendulum_orbit.x_limit_plus - 2.0 * math.pi) < 1e-9
    assert abs(pendulum_orbit.lam - 1.0) < 1e-12


def test_pendulum_tail_constants(pendulum_orbit):
    assert abs(pendulum_orbit.c_plus - 4.0) < 1e-4
    assert abs(pendulum_orbit.c_minus - 4.0) < 1e-4


def test_pendulum_deep_tail_value(pendulum_orbit):
    # far beyond the sampled window the tail model takes over
    x, v, a = dynsys.orbit_eval(pendulum_orbit, 40.0)
    assert abs(x - (2.0 * math.pi - 4.0 * math.exp(-40.0))) < 1e-20
    assert abs(v - 4.0 * math.exp(-40.0)) < 1e-20


# --- cubic closed form -----------------------------------------------------

def test_cubic_peak(cubic_orbit):
    x, v, a = dynsys.orbit_eval(cubic_orbit, 0.0)
    assert abs(x - 1.0) < 1e-9
    assert abs(v - 1.0 / math.sqrt(3.0)) < 1e-9
    assert abs(a) < 1e-9


def test_cubic_is_homoclinic(cubic_orbit):
    assert abs(cubic_orbit.x_limit_minus) < 1e-9
    assert abs(cubic_orbit.x_limit_plus) < 1e-9


def test_cubic_tail_product(cubic_orbit):
    # time reversal pairs the two tails: c_plus * c_minus = -36
    prod = cubic_orbit.c_plus * cubic_orbit.c_minus
    assert abs(prod + 36.0) < 36.0 * 1e-4


# --- orbit invariants ------------------------------------------------------

def _energy_spread(sys, orbit):
    E = 0.5 * orbit.v**2 + dynsys.potential_values(sys, orbit.x, orbit.x_limit_minus)
    scale = max(1.0, 0.5 * orbit.max_speed**2)
    return float(np.max(np.abs(E - E[0]))) / scale


def test_energy_conservation_pendulum(pendulum_system, pendulum_orbit):
    assert _energy_spread(pendulum_system, pendulum_orbit) < 1e-9


def test_energy_conservation_cubic(cubic_system, cubic_orbit):
    assert _energy_spread(cubic_system, cubic_orbit) < 1e-9


def test_speed_cut_reached(pendulum_orbit, cubic_orbit):
    for orb in (pendulum_orbit, cubic_orbit):
        for s in (-1.0, 1.0):
            _, v, _ = dynsys.orbit_eval(orb, s * orb.t_cut)
            assert abs(v) <= 2e-12
        assert orb.t[0] <= -orb.t_cut and orb.t[-1] >= orb.t_cut


def test_dense_output_consistency(pendulum_orbit):
    # derivative of interpolated position vs interpolated velocity,
    # and of velocity vs stored acceleration, at off-sample points
    rng = np.random.default_rng(7)
    t = rng.uniform(-pendulum_orbit.t_cut, pendulum_orbit.t_cut, 400)
    h = 1e-6
    xp, vp, ap = dynsys.orbit_eval(pendulum_orbit, t + h)
    xm, vm, am = dynsys.orbit_eval(pendulum_orbit, t - h)
    _, v0, a0 = dynsys.orbit_eval(pendulum_orbit, t)
    assert np.max(np.abs((xp - xm) / (2 * h) - v0)) < 1e-8
    assert np.max(np.abs((vp - vm) / (2 * h) - a0)) < 1e-8


def test_acceleration_equals_force(cubic_system, cubic_orbit):
    t = np.linspace(-cubic_orbit.t_cut, cubic_orbit.t_cut, 4001)
    x, v, a = dynsys.orbit_eval(cubic_orbit, t)
    assert np.max(np.abs(a - cubic_system.f_num(x))) < 1e-8


def test_tail_fidelity(pendulum_orbit, cubic_orbit):
    # sampled orbit vs fitted exponential over the outer half-window
    for orb, tol in ((pendulum_orbit, 1e-8), (cubic_orbit, 1e-4)):
        t = np.linspace(orb.t_cut / 2, orb.t_cut, 300)
        _, v, _ = dynsys.orbit_eval(orb, t)
        model = orb.lam * orb.c_plus * np.exp(-orb.lam * t)
        assert np.max(np.abs(v - model) / np.abs(model)) < tol
        _, v, _ = dynsys.orbit_eval(orb, -t)
        model = orb.lam * orb.c_minus * np.exp(-orb.lam * t)
        assert np.max(np.abs(v - model) / np.abs(model)) < tol


def test_step_policy_invariance(pendulum_system, pendulum_orbit):
    eq = dynsys.find_saddle(pendulum_system, 0.1)
    alt = dynsys.compute_separatrix(pendulum_system, eq, max_step=0.003)
    t = np.linspace(-10.0, 10.0, 501)
    x1, v1, _ = dynsys.orbit_eval(pendulum_orbit, t)
    x2, v2, _ = dynsys.orbit_eval(alt, t)
    assert np.max(np.abs(x1 - x2)) < 1e-8
    assert np.max(np.abs(v1 - v2)) < 1e-8


def test_heteroclinic_spacing_enforced():
    # saddles of sin(2x) sit pi apart, incompatible with 2pi-periodic q
    sys = make_system("sin(2*x)", "sin(xi)")
    eq = dynsys.find_saddle(sys, 0.1)
    with pytest.raises(HypothesisError):
        dynsys.compute_separatrix(sys, eq)


def test_tail_fit_rejects_wrong_rate(pendulum_orbit):
    with pytest.raises(NumericsError):
        dynsys.fit_tail_constants(pendulum_orbit.t, pendulum_orbit.v, 1.05)


# --- forcing models --------------------------------------------------------

def test_quasiperiodic_validation():
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    ok = dynsys.QuasiPeriodic(
        omega=(1.0, golden),
        harmonics=(((1, 0), 0.5), ((-1, 0), 0.5), ((0, 1), 0.5), ((0, -1), 0.5)),
    )
    assert ok.omega == (1.0, golden)

    with pytest.raises(HypothesisError):
        # (2, -1) . (1, 2) = 0: resonant combination
        dynsys.QuasiPeriodic(omega=(1.0, 2.0), harmonics=(((2, -1), 0.5), ((-2, 1), 0.5)))
    with pytest.raises(HypothesisError):
        # zero multi-index belongs to the mean, not the oscillation
        dynsys.QuasiPeriodic(omega=(1.0, golden), harmonics=(((0, 0), 1.0),))
    with pytest.raises(HypothesisError):
        # missing conjugate partner
        dynsys.QuasiPeriodic(omega=(1.0, golden), harmonics=(((1, 0), 0.5),))


def test_cosine_forcing_builds_conjugate_pairs():
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    fc = dynsys.cosine_forcing((1.0, golden), (((1, 0), 1.0), ((0, 1), 1.0)))
    amps = dict(fc.harmonics)
    assert amps[(1, 0)] == pytest.approx(0.5)
    assert amps[(-1, 0)] == pytest.approx(0.5)
    assert amps[(0, 1)] == pytest.approx(0.5)
    assert amps[(0, -1)] == pytest.approx(0.5)


def test_potential_values_pendulum(pendulum_system):
    xs = np.array([0.0, math.pi / 2, math.pi])
    V = dynsys.potential_values(pendulum_system, xs, 0.0)
    # V(x) = cos(x) - 1 for f = sin
    assert np.max(np.abs(V - (np.cos(xs) - 1.0))) < 1e-12
