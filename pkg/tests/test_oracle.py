import math

import numpy as np
import pytest

from sepsplit import dynsys, oracle, stphase
from sepsplit.errors import ConfigError
from conftest import make_system

EPS = 0.02
PERIOD = 2.0 * math.pi * EPS


@pytest.fixture(scope="module")
def pendulum_scan(pendulum_system, pendulum_orbit):
    return oracle.melnikov_scan(pendulum_system, pendulum_orbit, EPS, n_t0=16)


@pytest.fixture(scope="module")
def pendulum_resolved(pendulum_system, pendulum_orbit):
    return stphase.splitting_coefficients(
        pendulum_system, pendulum_orbit, epsilon=EPS, phase="resolved")


@pytest.fixture(scope="module")
def displacement_pair(pendulum_system, pendulum_orbit):
    # two full manifold computations, reused by several tests below
    t0 = 0.3 * PERIOD
    one = oracle.displacement_direct(pendulum_system, EPS, t0,
                                     orbit=pendulum_orbit)
    two = oracle.displacement_direct(pendulum_system, EPS, t0 + PERIOD,
                                     orbit=pendulum_orbit)
    return one, two


# ---------------------------------------------------------------------------
# direct quadrature


def test_direct_matches_prediction(pendulum_system, pendulum_orbit,
                                   pendulum_resolved):
    # two independent routes: resolved quadrature vs stationary phase
    for t0 in (0.0, 0.3 * PERIOD, 0.71 * PERIOD):
        m = oracle.melnikov_direct(pendulum_system, pendulum_orbit, EPS, t0)
        p = stphase.predict(pendulum_resolved, EPS, t0)
        scale = stphase.amplitude(pendulum_resolved) * EPS ** 3.1
        assert abs(m - p) <= 5e-3 * scale


def test_direct_epsilon_window(pendulum_system, pendulum_orbit):
    with pytest.raises(ConfigError):
        oracle.melnikov_direct(pendulum_system, pendulum_orbit, 0.2, 0.0)
    with pytest.raises(ConfigError):
        oracle.melnikov_direct(pendulum_system, pendulum_orbit, -0.01, 0.0)


def test_direct_zero_profile():
    sys = make_system("sin(x)", "0")
    orb = dynsys.compute_separatrix(sys, dynsys.find_saddle(sys, 0.1))
    assert oracle.melnikov_direct(sys, orb, EPS, 0.1) == 0.0


def test_direct_suppressed_without_angle_dependence():
    # q independent of the fast angle: the oscillatory integral averages
    # out far below the leading scale
    sys = make_system("sin(x)", "cos(v)")
    orb = dynsys.compute_separatrix(sys, dynsys.find_saddle(sys, 0.1))
    scan = oracle.melnikov_scan(sys, orb, EPS, n_t0=16)
    amp, _ = scan.fitted[None]
    assert amp <= 1e-4 * EPS ** 3.1


# ---------------------------------------------------------------------------
# t0 scan and harmonic fit


def test_scan_fit_against_prediction(pendulum_scan, pendulum_resolved):
    amp_fit, phase_fit = pendulum_scan.fitted[None]
    amp_pred = stphase.amplitude(pendulum_resolved) * EPS ** 3.1
    assert abs(amp_fit - amp_pred) <= 5e-3 * amp_pred
    # the fitted harmonic reproduces the prediction at fresh offsets
    for t0 in (0.013, 0.047):
        fit_val = amp_fit * math.cos(t0 / EPS - phase_fit)
        pred = stphase.predict(pendulum_resolved, EPS, t0)
        assert abs(fit_val - pred) <= 5e-3 * amp_pred


def test_scan_residual_is_tiny(pendulum_scan):
    # a single forcing harmonic: the least-squares fit is essentially exact
    amp_fit, _ = pendulum_scan.fitted[None]
    assert pendulum_scan.residual <= 1e-12 * amp_fit


def test_scan_values_match_direct(pendulum_system, pendulum_orbit,
                                  pendulum_scan):
    for t0, val in zip(pendulum_scan.t0_samples[:3], pendulum_scan.values[:3]):
        m = oracle.melnikov_direct(pendulum_system, pendulum_orbit, EPS, t0)
        assert abs(val - m) <= 1e-12 * (abs(m) + 1e-30)


def test_scan_needs_enough_samples(pendulum_system, pendulum_orbit):
    with pytest.raises(ConfigError):
        oracle.melnikov_scan(pendulum_system, pendulum_orbit, EPS, n_t0=7)


def test_scan_two_frequency_fit():
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    forcing = dynsys.cosine_forcing(
        (1.0, golden), (((1, 0), 1.0), ((0, 1), 1.0)))
    sys = make_system("sin(x)", "2*sin(xi)", forcing=forcing)
    orb = dynsys.compute_separatrix(sys, dynsys.find_saddle(sys, 0.1))
    scan = oracle.melnikov_scan(sys, orb, EPS, n_t0=24)
    co = stphase.splitting_coefficients_qp(sys, orb, epsilon=EPS,
                                           phase="resolved")
    scale = EPS ** 3.1
    assert set(scan.fitted) == {(1, 0), (0, 1)}
    for m_key, (amp, _) in scan.fitted.items():
        a_m, b_m = co.per_m[m_key]
        pred = math.hypot(a_m, b_m) * scale
        # the slower harmonic carries a larger subleading correction
        tol = 5e-3 if m_key == (1, 0) else 5e-2
        assert abs(amp - pred) <= tol * pred
    amp_max = max(a for a, _ in scan.fitted.values())
    assert scan.residual <= 1e-12 * amp_max

    with pytest.raises(ConfigError):
        oracle.melnikov_scan(sys, orb, EPS, n_t0=15)


# ---------------------------------------------------------------------------
# manifold displacement


def test_displacement_matches_direct(pendulum_system, pendulum_orbit,
                                     displacement_pair):
    one, _ = displacement_pair
    m = oracle.melnikov_direct(pendulum_system, pendulum_orbit, EPS, one.t0)
    assert abs(one.D_value - m) <= 1e-8
    assert abs(one.D_value - m) <= 5e-4 * abs(m)


def test_displacement_forcing_periodicity(displacement_pair):
    one, two = displacement_pair
    assert abs(one.D_value - two.D_value) <= 1e-11


def test_displacement_bookkeeping(pendulum_orbit, displacement_pair):
    one, _ = displacement_pair
    assert one.newton_residual <= 1e-11
    assert one.crossing_residual <= 1e-10
    x0, v0, a0 = dynsys.orbit_eval(pendulum_orbit, 0.0)
    assert one.section_point == pytest.approx((float(x0), float(v0)))
    assert one.alpha == pytest.approx(math.hypot(float(v0), float(a0)))
    # perturbed fixed points sit within O(eps^r) of the saddles
    assert abs(one.fixed_point_unstable[0] - 0.0) <= EPS ** 2.6 * 10
    assert abs(one.fixed_point_stable[0] - 2.0 * math.pi) <= EPS ** 2.6 * 10


def test_displacement_zero_profile():
    sys = make_system("sin(x)", "0")
    orb = dynsys.compute_separatrix(sys, dynsys.find_saddle(sys, 0.1))
    res = oracle.displacement_direct(sys, 0.05, 0.2, orbit=orb)
    assert abs(res.D_value) <= 1e-10


def test_displacement_preconditions(pendulum_system, pendulum_orbit):
    with pytest.raises(ConfigError):
        oracle.displacement_direct(pendulum_system, 2e-3, 0.0,
                                   orbit=pendulum_orbit)
    with pytest.raises(ConfigError):
        oracle.displacement_direct(pendulum_system, EPS, 0.0)
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    forcing = dynsys.cosine_forcing(
        (1.0, golden), (((1, 0), 1.0), ((0, 1), 1.0)))
    sys_qp = make_system("sin(x)", "2*sin(xi)", forcing=forcing)
    with pytest.raises(ConfigError):
        oracle.displacement_direct(sys_qp, EPS, 0.0, orbit=pendulum_orbit)


# ---------------------------------------------------------------------------
# scaling fits


def test_scaling_fit_recovers_synthetic_law():
    eps = np.array([0.05, 0.02, 0.01, 0.005])
    vals = 7.0 * eps ** 3.1
    fit = oracle.epsilon_scaling_fit(list(zip(eps, vals)))
    assert abs(fit.slope - 3.1) <= 1e-12
    assert abs(fit.intercept - math.log(7.0)) <= 1e-12
    assert np.max(np.abs(fit.residuals)) <= 1e-12


def test_scaling_fit_preconditions():
    with pytest.raises(ConfigError):
        oracle.epsilon_scaling_fit([(0.05, 1.0), (0.02, 0.5)])
    with pytest.raises(ConfigError):
        oracle.epsilon_scaling_fit([(0.05, 1.0), (0.03, 0.5), (0.02, 0.2)])
    with pytest.raises(ConfigError):
        oracle.epsilon_scaling_fit([(0.05, 1.0), (0.02, -0.5), (0.01, 0.2)])
