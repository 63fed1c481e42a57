"""Splitting coefficients by stationary phase.

The separatrix displacement induced by the fast forcing concentrates, to
leading order, on the times where the forcing phase along the orbit is
stationary: k*xd0(t) equals the (signed) forcing frequency. This module
finds those times, evaluates the closed-form contribution of each one,
and reduces them to the pair of splitting coefficients (A, B) whose
quadrature sum gives the splitting amplitude.

Phase conventions. Each contribution carries the oscillation
e^{i(k x0(t*) - t*)} (periodic forcing; the quasi-periodic analogue uses
k x0(t*) + (m.w) t*) plus a sigma*pi/4 corner from the local quadratic
approximation. Two evaluation modes are provided:

- "resolved": the geometric part of the angle is divided by epsilon,
  which is the scale on which the forcing actually oscillates. This is
  the mode that matches direct quadrature of the displacement integral,
  and it makes the coefficients epsilon-dependent.
- "flat": the angle is evaluated verbatim with no epsilon. The
  coefficients are then epsilon-free, which is convenient for symmetry
  and invariance checks, but they do not track the true displacement.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import dynsys, fourier
from .errors import ConfigError, HypothesisError, NumericsError

__all__ = [
    "CriticalPoint", "SplittingCoefficients", "PredictionReport",
    "critical_points", "classify", "contribution",
    "splitting_coefficients", "splitting_coefficients_qp",
    "predict", "amplitude", "prediction_report",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# below this, |f| at a critical time counts as a degeneracy: the
# contribution scales like |f|^(-1/2) and the leading-order formula
# stops being trustworthy
HYPOTHESIS_FLOOR = 1e-6


@dataclass(frozen=True)
class CriticalPoint:
    """One stationary time of the forcing phase along the orbit."""

    k: int
    t_star: float
    x_star: float
    f_star: float
    sigma: int
    origin: str  # "interior" (sampled window) or "tail" (fitted tail)
    m: tuple | None = None


@dataclass(frozen=True)
class SplittingCoefficients:
    mode: str  # "periodic" or "quasiperiodic"
    A: float | None
    B: float | None
    per_m: dict | None
    k_max_used: int
    truncation_estimate: float
    critical_points: tuple
    phase: str  # "resolved" or "flat"
    epsilon: float | None
    r: float
    omega: tuple | None = None


@dataclass(frozen=True)
class PredictionReport:
    epsilon: float
    leading: object  # t0 -> leading-order displacement
    error_order: tuple  # exponents of the two next corrections
    splitting_verdict: bool
    amplitude: object  # float, or dict m -> float
    truncation_estimate: float


# ---------------------------------------------------------------------------
# critical points


def _newton_polish(orbit, target, lo, hi, t0):
    # Newton on xd0(t) - target with the bracket as a safeguard: any
    # step leaving [lo, hi] is replaced by bisection
    g_lo = float(dynsys.orbit_eval(orbit, lo)[1]) - target
    t = t0
    for _ in range(80):
        _, v, a = dynsys.orbit_eval(orbit, t)
        g = float(v) - target
        if abs(g) <= 1e-13:
            return t
        tn = t - g / a if a != 0.0 else lo - 1.0
        if not (lo < tn < hi):
            tn = 0.5 * (lo + hi)
        g_n = float(dynsys.orbit_eval(orbit, tn)[1]) - target
        if g_n * g_lo <= 0.0:
            hi = tn
        else:
            lo, g_lo = tn, g_n
        if abs(tn - t) <= 1e-15 * max(1.0, abs(tn)):
            t = tn
            break
        t = tn
    if abs(float(dynsys.orbit_eval(orbit, t)[1]) - target) > 1e-11:
        raise NumericsError(
            f"root polish stalled at t = {t!r} for target {target!r}"
        )
    return t


def critical_points(orbit, target, k_abs=None, hypothesis_floor=HYPOTHESIS_FLOOR):
    """All t with xd0(t) = target, sorted ascending.

    Interior roots come from a sign-change scan over the sampled window
    with step min(0.01, 1/(4|k|)) followed by safeguarded Newton; roots
    beyond the sampled window are solved on the fitted exponential tails
    in closed form and polished. Raises when a root is degenerate
    (|f(x0(t))| below the floor), since the quadratic-phase reduction
    needs curvature there.
    """
    if target == 0.0:
        raise HypothesisError("target speed 0 has no finite stationary time")
    vmax = orbit.max_speed
    if abs(target) > vmax:
        return []
    if vmax - abs(target) <= 1e-9 * vmax:
        raise HypothesisError(
            f"target speed {target!r} is tangential to the orbit "
            f"(max speed {vmax!r}): degenerate stationary point"
        )
    if k_abs is None:
        k_abs = max(1, round(1.0 / abs(target)))
    step = min(0.01, 1.0 / (4.0 * abs(k_abs)))
    n = int(math.ceil(2.0 * orbit.t_cut / step)) + 1
    grid = np.linspace(-orbit.t_cut, orbit.t_cut, n)
    _, v, _ = dynsys.orbit_eval(orbit, grid)
    g = v - target

    roots = []
    hit = np.nonzero(g[:-1] * g[1:] <= 0.0)[0]
    for i in hit:
        if g[i] == 0.0 and i > 0 and g[i - 1] * g[i + 1] > 0.0:
            continue  # grazing sample, no crossing
        lo, hi = float(grid[i]), float(grid[i + 1])
        if g[i] == 0.0:
            roots.append(lo)
        elif g[i + 1] == 0.0:
            continue  # owned by the next bracket
        else:
            roots.append(_newton_polish(orbit, target, lo, hi, 0.5 * (lo + hi)))

    # tails: lam c_pm e^(-+lam t) = target in closed form
    lam = orbit.lam
    for c, sign in ((orbit.c_plus, +1.0), (orbit.c_minus, -1.0)):
        ratio = target / (lam * c)
        if ratio <= 0.0:
            continue
        t_t = -sign * math.log(ratio) / lam
        if sign * t_t > orbit.t_cut:
            roots.append(_newton_polish(orbit, target, t_t - 1.0, t_t + 1.0, t_t))

    roots.sort()
    merged = []
    for t in roots:
        if merged and abs(t - merged[-1]) <= 1e-8:
            continue
        merged.append(t)

    for t in merged:
        _, v_t, a_t = dynsys.orbit_eval(orbit, t)
        if abs(v_t - target) > 1e-10:
            raise NumericsError(
                f"stationary time t = {t!r} has speed residual {abs(v_t - target):.3e}"
            )
        if abs(a_t) < hypothesis_floor:
            raise HypothesisError(
                f"degenerate stationary point at t = {t!r}: |f(x0(t))| = "
                f"{abs(a_t):.3e} violates the non-vanishing-force requirement"
            )
    return merged


def classify(k, t_star, orbit, sys, m=None, hypothesis_floor=HYPOTHESIS_FLOOR):
    """Attach position, force, and corner sign to a stationary time."""
    k = int(k)
    if k == 0:
        raise HypothesisError("harmonic index 0 has no stationary-phase time")
    x_star, v_star, _ = dynsys.orbit_eval(orbit, t_star)
    x_star = float(x_star)
    f_star = float(sys.f_scalar(x_star))
    if m is None:
        target = 1.0 / k
    else:
        omega = sys.forcing.omega
        target = -sum(mi * wi for mi, wi in zip(m, omega)) / k
    if abs(float(v_star) - target) > 1e-10:
        raise NumericsError(
            f"t = {t_star!r} is not stationary for k = {k}: speed residual "
            f"{abs(float(v_star) - target):.3e}"
        )
    if abs(f_star) < hypothesis_floor:
        raise HypothesisError(
            f"|f(x0(t*))| = {abs(f_star):.3e} at t* = {t_star!r}: the "
            "non-vanishing-force requirement fails"
        )
    sigma = 1 if k * f_star > 0.0 else -1
    origin = "interior" if abs(t_star) <= orbit.t_cut else "tail"
    return CriticalPoint(
        k=k, t_star=float(t_star), x_star=x_star, f_star=f_star,
        sigma=sigma, origin=origin, m=None if m is None else tuple(m),
    )


# ---------------------------------------------------------------------------
# per-point summand


def contribution(cp, q_k_value, omega=None, epsilon=None, phase="resolved"):
    """Complex summand of one stationary point.

    Magnitude |q_k(target)| |target| / (|k|^(1/2) |f*|^(1/2)); angle is
    the geometric part (resolved by epsilon or flat, see module
    docstring) plus the sigma*pi/4 corner.
    """
    if q_k_value == 0:
        return 0.0 + 0.0j
    if cp.m is None:
        target = 1.0 / cp.k
        geo = cp.k * cp.x_star - cp.t_star
    else:
        if omega is None:
            raise ConfigError("quasi-periodic contribution needs the frequency vector")
        nu = sum(mi * wi for mi, wi in zip(cp.m, omega))
        target = -nu / cp.k
        geo = cp.k * cp.x_star + nu * cp.t_star
    if phase == "resolved":
        if epsilon is None or not epsilon > 0.0:
            raise ConfigError("resolved phase mode needs a positive epsilon")
        angle = geo / epsilon + cp.sigma * math.pi / 4.0
    elif phase == "flat":
        angle = geo + cp.sigma * math.pi / 4.0
    else:
        raise ConfigError(f"unknown phase mode {phase!r}")
    mag = target / (math.sqrt(abs(cp.k)) * math.sqrt(abs(cp.f_star)))
    return q_k_value * mag * cmath.exp(1j * angle)


# ---------------------------------------------------------------------------
# reduction to coefficients


def _probe_speeds(targets):
    ts = sorted({abs(t) for t in targets})
    if not ts:
        return (1.0,)
    if len(ts) <= 8:
        return tuple(ts)
    idx = np.linspace(0, len(ts) - 1, 8).round().astype(int)
    return tuple(ts[i] for i in idx)


def _tail_bound(weight, n_cp, f_min, k_beyond):
    # sum_{|k| > K} of the summand majorant W (1+k)^-3 |k|^-3/2, both
    # signs, n_cp points per k, in coefficient units (sqrt(2pi) factor)
    if n_cp == 0 or weight == 0.0:
        return 0.0
    coeff = _SQRT_2PI * 2.0 * n_cp * weight / math.sqrt(max(f_min, HYPOTHESIS_FLOOR))
    return coeff * (2.0 / 7.0) * float(k_beyond) ** (-3.5)


def _floored(q_val, m_est):
    # trapezoid coefficients below the quadrature rounding floor are
    # treated as exact zeros so harmonic-free profiles reduce to 0.0
    if abs(q_val) <= 1e-13 * max(m_est, 1.0):
        return 0.0
    return q_val


def _gather_k(sys, orbit, table, k_signed, target, epsilon, phase, floor):
    pts = critical_points(orbit, target, abs(k_signed), floor)
    out = []
    for t in pts:
        cp = classify(k_signed, t, orbit, sys,
                      m=None, hypothesis_floor=floor)
        q_val = _floored(table.coefficient(k_signed, target), table.M_estimate)
        out.append((cp, contribution(cp, q_val, epsilon=epsilon, phase=phase)))
    return out


def splitting_coefficients(
    sys, orbit, k_max=None, *, epsilon=None, phase="resolved",
    hypothesis_floor=HYPOTHESIS_FLOOR,
):
    """Reduce all stationary-point contributions with |k| <= k_max to
    the coefficient pair (A, B).

    With k_max = None the harmonic range grows until the decay-based
    tail bound falls below 1e-3 of the accumulated amplitude (capped at
    64). The reduction order is fixed (ascending |k|, negative sign
    first, ascending stationary time) so the floating-point result is
    reproducible; the per-k searches are mutually independent.
    """
    if phase == "resolved" and (epsilon is None or not epsilon > 0.0):
        raise ConfigError("resolved phase mode needs a positive epsilon")
    if not isinstance(sys.forcing, dynsys.Periodic):
        raise ConfigError("periodic reduction called with non-periodic forcing")
    vmax = orbit.max_speed
    k_min = int(math.ceil(1.0 / vmax))
    while vmax - 1.0 / k_min <= 1e-9 * vmax:
        k_min += 1  # skip tangential harmonics
    cap = 64
    k_cap = cap if k_max is None else int(k_max)
    if k_cap < k_min:
        warnings.warn("harmonic cutoff below the smallest contributing index")

    targets = [1.0 / k for k in range(k_min, max(k_min + 1, k_cap + 1))]
    table = fourier.FourierTable(sys.q, k_max=k_cap, v_probe=_probe_speeds(targets))
    decay = fourier.decay_check(sys.q, _probe_speeds(targets), k_max=24)
    if not decay.passed:
        warnings.warn(decay.message)
    weight = decay.constant

    S = 0.0 + 0.0j
    cps = []
    f_min = math.inf
    n_cp = 0
    k_used = k_min - 1
    for k in range(k_min, k_cap + 1):
        for k_signed in (-k, k):
            for cp, term in _gather_k(
                sys, orbit, table, k_signed, 1.0 / k_signed, epsilon, phase,
                hypothesis_floor,
            ):
                S += term
                cps.append(cp)
                f_min = min(f_min, abs(cp.f_star))
        n_cp = max(n_cp, sum(1 for c in cps if abs(c.k) == k))
        k_used = k
        if k_max is None and k >= k_min + 3:
            amp = _SQRT_2PI * abs(S)
            if weight * float(k) ** (-3.5) < 1e-3 * amp:
                break

    if not math.isfinite(f_min):
        f_min = 1.0
    trunc = _tail_bound(weight, n_cp, f_min, k_used)
    return SplittingCoefficients(
        mode="periodic",
        A=_SQRT_2PI * S.real, B=_SQRT_2PI * S.imag, per_m=None,
        k_max_used=k_used, truncation_estimate=trunc,
        critical_points=tuple(cps), phase=phase, epsilon=epsilon, r=sys.r,
    )


def splitting_coefficients_qp(
    sys, orbit, k_max=None, *, epsilon=None, phase="resolved",
    hypothesis_floor=HYPOTHESIS_FLOOR,
):
    """Per-harmonic coefficient pairs for quasi-periodic forcing.

    Harmonics are reduced in canonical form (m with m.w > 0, absorbing
    the conjugate partner, hence the factor 2); for each m the harmonic
    index k runs over |k| >= (m.w)/max|xd0| up to the cutoff.
    """
    if phase == "resolved" and (epsilon is None or not epsilon > 0.0):
        raise ConfigError("resolved phase mode needs a positive epsilon")
    forcing = sys.forcing
    if not isinstance(forcing, dynsys.QuasiPeriodic):
        raise ConfigError("quasi-periodic reduction needs QuasiPeriodic forcing")
    omega = forcing.omega
    amps = dict(forcing.harmonics)
    nus = {m: sum(mi * wi for mi, wi in zip(m, omega)) for m in amps}
    for m, nu in nus.items():
        if abs(nu) <= 1e-9:
            raise HypothesisError(f"harmonic {m} is resonant: |m.w| = {abs(nu):.3e}")
    keys = list(nus)
    for i, m1 in enumerate(keys):
        for m2 in keys[i + 1:]:
            if m1 == tuple(-c for c in m2):
                continue  # conjugate pair, same oscillation
            if abs(nus[m1] - nus[m2]) <= 1e-9:
                raise HypothesisError(
                    f"harmonics {m1} and {m2} are mutually resonant: "
                    "their frequencies coincide"
                )

    canonical = sorted(m for m in amps if nus[m] > 0.0)
    vmax = orbit.max_speed
    cap = 64
    k_cap = cap if k_max is None else int(k_max)

    per_m = {}
    cps = []
    trunc = 0.0
    k_used = 0
    for m in canonical:
        nu = nus[m]
        F_m = amps[m]
        k_lo = max(1, int(math.ceil(nu / vmax)))
        while vmax - nu / k_lo <= 1e-9 * vmax:
            k_lo += 1
        targets = [nu / k for k in range(k_lo, max(k_lo + 1, k_cap + 1))]
        table = fourier.FourierTable(sys.q, k_max=k_cap, v_probe=_probe_speeds(targets))
        decay = fourier.decay_check(sys.q, _probe_speeds(targets), k_max=24)
        if not decay.passed:
            warnings.warn(decay.message)
        weight = decay.constant

        S_m = 0.0 + 0.0j
        f_min = math.inf
        n_cp = 0
        k_here = k_lo - 1
        for k in range(k_lo, k_cap + 1):
            added = 0
            for k_signed in (-k, k):
                target = -nu / k_signed
                pts = critical_points(orbit, target, k, hypothesis_floor)
                for t in pts:
                    cp = classify(k_signed, t, orbit, sys, m=m,
                                  hypothesis_floor=hypothesis_floor)
                    q_val = _floored(table.coefficient(k_signed, target),
                                     table.M_estimate)
                    S_m += contribution(cp, q_val, omega=omega,
                                        epsilon=epsilon, phase=phase)
                    cps.append(cp)
                    f_min = min(f_min, abs(cp.f_star))
                    added += 1
            n_cp = max(n_cp, added)
            k_here = k
            if k_max is None and k >= k_lo + 3:
                amp = 2.0 * _SQRT_2PI * abs(F_m) * abs(S_m)
                if abs(F_m) * weight * float(k) ** (-3.5) < 1e-3 * amp:
                    break

        if not math.isfinite(f_min):
            f_min = 1.0
        per_m[m] = (
            2.0 * _SQRT_2PI * (F_m * S_m).real,
            -2.0 * _SQRT_2PI * (F_m * S_m).imag,
        )
        trunc += 2.0 * abs(F_m) * _tail_bound(weight, n_cp, f_min, k_here)
        k_used = max(k_used, k_here)

    return SplittingCoefficients(
        mode="quasiperiodic", A=None, B=None, per_m=per_m,
        k_max_used=k_used, truncation_estimate=trunc,
        critical_points=tuple(cps), phase=phase, epsilon=epsilon, r=sys.r,
        omega=tuple(omega),
    )


# ---------------------------------------------------------------------------
# prediction


def _check_epsilon(coeffs, epsilon):
    if not epsilon > 0.0:
        raise ConfigError("epsilon must be positive")
    if coeffs.phase == "resolved" and coeffs.epsilon is not None:
        if not math.isclose(coeffs.epsilon, epsilon, rel_tol=1e-12):
            raise ConfigError(
                "resolved-mode coefficients are specific to the epsilon they "
                f"were built with ({coeffs.epsilon!r}); rebuild for {epsilon!r}"
            )


def predict(coeffs, epsilon, t0):
    """Leading-order displacement at section phase t0."""
    _check_epsilon(coeffs, epsilon)
    scale = epsilon ** (coeffs.r + 0.5)
    if coeffs.mode == "periodic":
        return scale * (coeffs.A * math.cos(t0 / epsilon)
                        + coeffs.B * math.sin(t0 / epsilon))
    total = 0.0
    for m, (A_m, B_m) in coeffs.per_m.items():
        nu = sum(mi * wi for mi, wi in zip(m, coeffs.omega))
        total += A_m * math.cos(nu * t0 / epsilon) + B_m * math.sin(nu * t0 / epsilon)
    return scale * total


def amplitude(coeffs):
    """Quadrature size of the oscillation: sqrt(A^2 + B^2), per harmonic
    in the quasi-periodic case."""
    if coeffs.mode == "periodic":
        return math.hypot(coeffs.A, coeffs.B)
    return {m: math.hypot(A_m, B_m) for m, (A_m, B_m) in coeffs.per_m.items()}


def prediction_report(coeffs, epsilon, verdict_floor=1e-8):
    """Bundle the leading-order prediction with its error exponents and
    the transversality verdict."""
    _check_epsilon(coeffs, epsilon)
    amp = amplitude(coeffs)
    peak = amp if coeffs.mode == "periodic" else (max(amp.values()) if amp else 0.0)
    verdict = peak > verdict_floor + coeffs.truncation_estimate

    def leading(t0):
        return predict(coeffs, epsilon, t0)

    return PredictionReport(
        epsilon=epsilon, leading=leading,
        error_order=(coeffs.r + 1.0, 2.0 * coeffs.r - 2.0),
        splitting_verdict=verdict, amplitude=amp,
        truncation_estimate=coeffs.truncation_estimate,
    )
