"""Acceptance gate: one test per shipped claim, at the stated tolerance.

Each test prints a single [criterion N] PASS/FAIL line with the measured
numbers; the pytest -v status of the test is the criterion's verdict.
Criterion 2 is expected to fail honestly: the measured amplitude
carries a physical epsilon-dependent modulation (confirmed by the
quadrature oracle to 1e-4 relative), so a pure power-law fit over the
fixed epsilon grid cannot land within +-0.05 of the ideal slope. The
companion envelope diagnostic quantifies exactly that.
"""

import math

import numpy as np
import pytest

from sepsplit import catalog, dynsys, fourier, oracle, stphase
from conftest import make_system, shift_time_origin, shift_x_period


def _verdict(n, ok, detail):
    print(f"[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


def _entry_orbit(name, r=None):
    e = catalog.get_entry(name, r=r)
    eq = dynsys.find_saddle(e.system, e.reference["saddle_x"] + 0.1)
    return e, dynsys.compute_separatrix(e.system, eq)


@pytest.fixture(scope="module")
def pendulum_entry():
    return _entry_orbit("pendulum-em")


def test_criterion_1_worked_example_amplitude(pendulum_entry):
    e, orb = pendulum_entry
    results = []
    for eps, tol in ((1e-3, 0.15), (2.5e-4, 0.08)):
        scan = oracle.melnikov_scan(e.system, orb, eps, n_t0=16)
        measured = scan.fitted[None][0] / eps ** 3.1
        co = stphase.splitting_coefficients(e.system, orb, epsilon=eps,
                                            phase="resolved")
        predicted = stphase.amplitude(co)
        # arbitration record: the epsilon-resolved closed form is the
        # oracle-confirmed one; the epsilon-free printed-style constant
        # misses the measured amplitude by the modulation factor
        resolved_cf = e.reference["amplitude_factor"] * abs(
            math.cos(e.reference["phase_delta"] / eps - math.pi / 4.0))
        flat_cf = abs(e.reference["flat_b"])
        results.append((eps, tol, measured, predicted, resolved_cf, flat_cf))
    ok = all(abs(m - p) <= tol * p for _, tol, m, p, _, _ in results)
    ok = ok and all(abs(m - rcf) <= 0.01 * rcf
                    for _, _, m, _, rcf, _ in results)
    detail = "; ".join(
        f"eps={eps}: oracle {m:.4f} vs stphase {p:.4f} "
        f"(tol {tol:.0%}), resolved closed form {rcf:.4f}, "
        f"flat constant {fcf:.4f}"
        for eps, tol, m, p, rcf, fcf in results)
    assert _verdict(1, ok, detail)


_SCALING_EPS = (2e-2, 1e-2, 5e-3, 2.5e-3)


def _scaling_slopes(r):
    e, orb = _entry_orbit("pendulum-em", r=r)
    amps = []
    for eps in _SCALING_EPS:
        scan = oracle.melnikov_scan(e.system, orb, eps, n_t0=16)
        amps.append(scan.fitted[None][0])
    raw = oracle.epsilon_scaling_fit(list(zip(_SCALING_EPS, amps))).slope
    env = [abs(math.cos(e.reference["phase_delta"] / eps - math.pi / 4.0))
           for eps in _SCALING_EPS]
    corrected = oracle.epsilon_scaling_fit(
        [(eps, a / v) for eps, a, v in zip(_SCALING_EPS, amps, env)]).slope
    return raw, corrected, amps, env


def test_criterion_2_scaling_law_slope():
    # honest red: the measured amplitude is modulated by
    # |cos(delta/eps - pi/4)|, which at eps = 1e-2 sits at 0.011 (a near
    # zero), so the power-law fit over this grid is off by ~0.45
    rows = []
    for r in (2.6, 3.0):
        raw, corrected, amps, env = _scaling_slopes(r)
        rows.append((r, raw, corrected))
    ok = all(abs(raw - (r + 0.5)) <= 0.05 for r, raw, _ in rows)
    detail = "; ".join(
        f"r={r}: slope {raw:.3f} vs {r + 0.5}+-0.05 "
        f"(envelope-corrected {corrected:.3f})"
        for r, raw, corrected in rows)
    assert _verdict(2, ok, detail)


def test_scaling_envelope_diagnostic():
    # companion analysis for the criterion-2 red: dividing out the
    # modulation factor recovers the ideal exponent on the same data
    for r in (2.6, 3.0):
        raw, corrected, amps, env = _scaling_slopes(r)
        assert abs(corrected - (r + 0.5)) <= 0.05
        assert min(env) < 0.02  # the grid really does straddle a near zero
        assert abs(raw - (r + 0.5)) > 0.3  # and the raw fit really is off


def test_criterion_3_displacement_vs_quadrature():
    e, orb = _entry_orbit("pendulum-em", r=3.0)
    gaps = []
    for eps in (0.05, 0.02, 0.01):
        t0 = 0.3 * 2.0 * math.pi * eps
        m_val = oracle.melnikov_direct(e.system, orb, eps, t0)
        d_res = oracle.displacement_direct(e.system, eps, t0, orbit=orb)
        gaps.append((eps, abs(d_res.D_value - m_val)))
    slope = oracle.epsilon_scaling_fit(gaps).slope
    ok = slope >= 3.6
    detail = (f"|D-M| slope {slope:.3f} >= 3.6 over eps={[g[0] for g in gaps]}, "
              f"gaps={['%.2e' % g[1] for g in gaps]}")
    assert _verdict(3, ok, detail)


def test_criterion_4_null_profile(pendulum_entry):
    e, orb = pendulum_entry
    silent = make_system("sin(x)", "cos(v)")
    co = stphase.splitting_coefficients(silent, orb, 8, phase="flat")
    exact_zero = co.A == 0.0 and co.B == 0.0
    amps = []
    for eps in (2e-2, 1e-2, 5e-3):
        scan = oracle.melnikov_scan(silent, orb, eps, n_t0=16)
        amps.append((eps, scan.fitted[None][0]))
    slope = oracle.epsilon_scaling_fit(amps).slope
    ok = exact_zero and slope >= 2.6 + 1.0 - 0.1
    detail = (f"A={co.A!r} B={co.B!r} (exact zeros: {exact_zero}); "
              f"oracle amplitude slope {slope:.3f} >= 3.5")
    assert _verdict(4, ok, detail)


def test_criterion_5_quasi_periodic():
    e, orb = _entry_orbit("pendulum-qp")
    eps = 1e-3
    scan = oracle.melnikov_scan(e.system, orb, eps, n_t0=24)
    co = stphase.splitting_coefficients_qp(e.system, orb, epsilon=eps,
                                           phase="resolved")
    rels = {}
    for m_key, (amp, _) in scan.fitted.items():
        a_m, b_m = co.per_m[m_key]
        pred = math.hypot(a_m, b_m) * eps ** 3.1
        rels[m_key] = abs(amp - pred) / pred
    per_harmonic_ok = rels and all(v <= 0.20 for v in rels.values())

    # single-harmonic configuration against the periodic route
    single = catalog.build_pendulum_qp(omega=(1.0,), harmonics=(((1,), 1.0),))
    per_entry, per_orb = _entry_orbit("pendulum-em")
    qp_co = stphase.splitting_coefficients_qp(single.system, per_orb, 8,
                                              phase="flat")
    per_co = stphase.splitting_coefficients(per_entry.system, per_orb, 8,
                                            phase="flat")
    (a_m, b_m), = qp_co.per_m.values()
    coeff_rel = abs(b_m - per_co.B) / abs(per_co.B)
    qp_scan = oracle.melnikov_scan(single.system, per_orb, eps, n_t0=16)
    per_scan = oracle.melnikov_scan(per_entry.system, per_orb, eps, n_t0=16)
    amp_qp = next(iter(qp_scan.fitted.values()))[0]
    amp_per = per_scan.fitted[None][0]
    oracle_rel = abs(amp_qp - amp_per) / amp_per
    reduction_ok = (a_m == per_co.A and coeff_rel <= 1e-9
                    and oracle_rel <= 1e-9)

    ok = per_harmonic_ok and reduction_ok
    detail = (f"per-harmonic rel errors {{"
              + ", ".join(f"{k}: {v:.4f}" for k, v in sorted(rels.items()))
              + f"}} (tol 0.20); single-harmonic reduction: coefficients "
              f"{coeff_rel:.2e}, oracle {oracle_rel:.2e} (tol 1e-9)")
    assert _verdict(5, ok, detail)


def test_criterion_6_property_suite(pendulum_entry):
    e, orb = pendulum_entry
    sys = e.system
    checks = {}

    E = 0.5 * orb.v**2 + dynsys.potential_values(sys, orb.x, orb.x_limit_minus)
    checks["energy"] = float(np.max(np.abs(E - E[0]))) / max(
        1.0, 0.5 * orb.max_speed**2) <= 1e-9

    worst_res, worst_count = 0.0, 0
    for k in (1, 2, 3, 5, 8, 13, 20):
        pts = stphase.critical_points(orb, 1.0 / k, k)
        worst_count = max(worst_count, len(pts))
        for t in pts:
            _, v, _ = dynsys.orbit_eval(orb, t)
            worst_res = max(worst_res, abs(float(v) - 1.0 / k))
    checks["stationary residual"] = worst_res <= 1e-10
    checks["stationary count"] = worst_count <= 2

    tail_ok = True
    for k in (16, 32, 64):
        t_far = max(stphase.critical_points(orb, 1.0 / k, k))
        model = math.log(orb.c_plus * orb.lam * k) / orb.lam
        tail_ok = tail_ok and abs(t_far - model) <= 5.0 / math.log(k)
    checks["tail trend"] = tail_ok

    conj_ok = True
    for k in (1, 2, 5, 9):
        a = fourier.fourier_coefficient(sys.q, k, 1.3)
        b = fourier.fourier_coefficient(sys.q, -k, 1.3)
        conj_ok = conj_ok and abs(a - b.conjugate()) <= 1e-12
    checks["conjugate symmetry"] = conj_ok

    base = stphase.splitting_coefficients(sys, orb, 8, phase="flat")
    moved = stphase.splitting_coefficients(
        sys, shift_time_origin(orb, 0.37), 8, phase="flat")
    lifted = stphase.splitting_coefficients(
        sys, shift_x_period(orb), 8, phase="flat")
    scale = math.hypot(base.A, base.B)
    checks["shift invariance"] = (
        math.hypot(moved.A - base.A, moved.B - base.B) <= 1e-9 * scale
        and math.hypot(lifted.A - base.A, lifted.B - base.B) <= 1e-9 * scale)

    eps, c = 1e-4, 1.0
    tau = np.linspace(-c, c, 2**22 + 1)
    numeric = np.trapezoid(np.exp(1j * tau**2 / eps), tau)
    closed = math.sqrt(math.pi * eps) * complex(math.cos(math.pi / 4),
                                                math.sin(math.pi / 4))
    fres_err = abs(numeric - closed)
    checks["fresnel factor"] = fres_err <= 3.0 * eps / c

    ok = all(checks.values())
    detail = ", ".join(f"{name}: {'ok' if good else 'BAD'}"
                       for name, good in checks.items())
    assert _verdict(6, ok, detail + f" (fresnel err {fres_err:.2e})")


def test_criterion_7_invariant_set():
    rep = catalog.verify_invariant_set(1e-2, horizon=50.0)
    ok = (rep.passed and rep.max_offplane <= 1e-10
          and rep.reduced_mismatch <= 1e-10 and rep.wave_residual <= 1e-12)
    detail = (f"off-plane {rep.max_offplane:.2e} <= 1e-10, reduced mismatch "
              f"{rep.reduced_mismatch:.2e} <= 1e-10, wave residual "
              f"{rep.wave_residual:.2e} <= 1e-12")
    assert _verdict(7, ok, detail)
