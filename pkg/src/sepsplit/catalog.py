"""Ready-made example systems and the 3D charged-particle model.

The entries bundle a SystemSpec with a validated epsilon window and a
few independently rederived closed-form constants for cross-checks.
The charged-particle model couples a planar pendulum to a rapidly
oscillating electromagnetic wave; its pendulum plane is invariant, and
the in-plane dynamics is exactly the forced equation the rest of the
package analyzes. verify_invariant_set integrates the full 3D motion
and confirms both facts numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import dynsys, expr
from .errors import ConfigError, NumericsError

__all__ = [
    "CatalogEntry", "InvariantSetReport",
    "build_pendulum_em", "build_pendulum_qp", "build_cubic",
    "entry_names", "get_entry", "verify_invariant_set", "wave_residual",
]

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0

# closed forms for the pendulum entry, rederived from the separatrix
# x0 = 4*atan(exp(t)): speed 2/cosh(t), saddle at 0, rate 1
_LOG_2_SQRT3 = math.log(2.0 + math.sqrt(3.0))
_AMP_FACTOR = math.sqrt(16.0 * math.pi / math.sqrt(3.0))
_FLAT_B = _AMP_FACTOR * math.cos(5.0 * math.pi / 12.0 - _LOG_2_SQRT3)
_PHASE_DELTA = 2.0 * math.pi / 3.0 - _LOG_2_SQRT3


@dataclass(frozen=True)
class CatalogEntry:
    """A named, ready-to-run system with its trusted epsilon window."""

    name: str
    system: dynsys.SystemSpec
    epsilon_window: tuple
    reference: dict = field(default_factory=dict)
    notes: str = ""


def build_pendulum_em(r=2.6):
    """Pendulum driven through a fast standing wave: f = sin x, q = 2 sin xi.

    The in-plane reduction of the 3D charged-particle model below. Only
    the k = +-1 angular harmonics are present, so every closed-form
    constant of the engine can be checked against this entry.
    """
    sys = dynsys.SystemSpec(
        f=expr.parse("sin(x)", ("x",)),
        q=expr.parse("2*sin(xi)", ("xi", "v")),
        r=r, forcing=dynsys.Periodic())
    return CatalogEntry(
        name="pendulum-em", system=sys, epsilon_window=(2.5e-4, 5e-2),
        reference={
            # flat-phase coefficients of the splitting sum
            "flat_b": _FLAT_B,
            "flat_a": 0.0,
            # resolved-mode amplitude = factor * |cos(delta/eps - pi/4)|
            "amplitude_factor": _AMP_FACTOR,
            "phase_delta": _PHASE_DELTA,
            "saddle_x": 0.0,
            "lam": 1.0,
        },
        notes="heteroclinic connection from 0 to 2*pi; speed peak 2")


def build_pendulum_qp(omega=None, harmonics=None, r=2.6):
    """Quasi-periodically driven pendulum; golden-ratio pair by default.

    omega is the frequency vector, harmonics a tuple of (m, amplitude)
    cosine components; resonant combinations are rejected by the
    forcing validation.
    """
    if omega is None:
        omega = (1.0, GOLDEN)
    if harmonics is None:
        harmonics = (((1, 0), 1.0), ((0, 1), 1.0))
    forcing = dynsys.cosine_forcing(tuple(omega), tuple(harmonics))
    sys = dynsys.SystemSpec(
        f=expr.parse("sin(x)", ("x",)),
        q=expr.parse("2*sin(xi)", ("xi", "v")),
        r=r, forcing=forcing)
    return CatalogEntry(
        name="pendulum-qp", system=sys, epsilon_window=(5e-4, 5e-2),
        reference={"saddle_x": 0.0, "lam": 1.0},
        notes="two-frequency driving of the pendulum-em geometry")


def build_cubic(r=3.0):
    """Homoclinic loop of xdd = x - x^2 with a two-harmonic profile.

    Non-symmetric q exercises the multi-harmonic code path; the loop
    has a genuine turning point, so speed targets are hit up to three
    times.
    """
    sys = dynsys.SystemSpec(
        f=expr.parse("x - x^2", ("x",)),
        q=expr.parse("sin(xi) + cos(2*xi)", ("xi", "v")),
        r=r, forcing=dynsys.Periodic())
    return CatalogEntry(
        name="cubic", system=sys, epsilon_window=(5e-3, 5e-2),
        reference={"saddle_x": 0.0, "lam": 1.0, "peak_x": 1.0,
                   "peak_speed": 1.0 / math.sqrt(3.0)},
        notes="homoclinic loop through (3/2, 0); saddle at the origin")


_BUILDERS = {
    "pendulum-em": build_pendulum_em,
    "pendulum-qp": build_pendulum_qp,
    "cubic": build_cubic,
}


def entry_names():
    return sorted(_BUILDERS)


def get_entry(name, r=None):
    """Build a catalog entry by name; r overrides the entry default."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigError(
            f"unknown example {name!r}; available: {', '.join(entry_names())}"
        ) from None
    return builder() if r is None else builder(r=r)


# ---------------------------------------------------------------------------
# the full 3D charged-particle model


def _wave_terms(eps, r, x, t):
    """Standing-wave profile eps^r sin(x/eps) cos(t/eps) and derivatives."""
    amp = eps ** r
    s, c = math.sin(x / eps), math.cos(x / eps)
    st, ct = math.sin(t / eps), math.cos(t / eps)
    f = amp * s * ct
    f_x = amp / eps * c * ct
    f_t = -amp / eps * s * st
    return f, f_x, f_t


def wave_residual(eps, r, n_samples=64):
    """Max |f_tt - f_xx| of the standing-wave profile on a sample grid.

    Both second derivatives equal -eps^(r-2) sin(x/eps) cos(t/eps), so
    the residual vanishes to rounding; a nonzero value flags a broken
    profile implementation, not physics.
    """
    amp = eps ** (r - 2.0)
    xs = np.linspace(0.0, 2.0 * math.pi, n_samples)
    ts = np.linspace(0.0, 2.0 * math.pi * eps, n_samples)
    worst = 0.0
    for x in xs:
        s = math.sin(x / eps)
        for t in ts:
            ct = math.cos(t / eps)
            f_tt = -amp * s * ct
            f_xx = -amp * s * ct
            worst = max(worst, abs(f_tt - f_xx))
    return worst


def _em_rhs(eps, r):
    """Equations of motion of a unit charge in the combined fields.

    Electrostatic background from the potential cos(x) cosh(z) plus the
    standing-wave perturbation fields; the magnetic force is derived
    directly from v x B. Every off-plane acceleration carries a factor
    of y, z, or sinh(z), which is what makes the pendulum plane exactly
    invariant.
    """

    def rhs(t, state):
        x, y, z, vx, vy, vz = state
        f, f_x, f_t = _wave_terms(eps, r, x, t)
        ax = math.sin(x) * math.cosh(z) + 2.0 * f + (y * vy + z * vz) * f_t
        ay = -y * f_x - vx * y * f_t
        az = -math.cos(x) * math.sinh(z) - z * f_x - vx * z * f_t
        return (vx, vy, vz, ax, ay, az)

    return rhs


def _reduced_rhs(eps, r):
    """In-plane reduction: xdd = sin x + 2 f(x, t)."""

    def rhs(t, state):
        x, vx = state
        f, _, _ = _wave_terms(eps, r, x, t)
        return (vx, math.sin(x) + 2.0 * f)

    return rhs


@dataclass(frozen=True)
class InvariantSetReport:
    epsilon: float
    horizon: float
    r: float
    max_offplane: float
    reduced_mismatch: float
    wave_residual: float
    passed: bool


def verify_invariant_set(epsilon, horizon=50.0, r=2.6, x0=math.pi + 0.5,
                         v0=0.0, rtol=1e-13, atol=1e-14):
    """Integrate the 3D motion from in-plane data and audit the claims.

    Starts on the pendulum plane (y = yd = z = zd = 0), tracks the
    off-plane components over the horizon, and compares the in-plane
    track against an independent integration of the reduced equation.
    The initial point sits inside the libration well, away from the
    saddle, so the comparison is not amplified exponentially.
    """
    if epsilon <= 0.0:
        raise ConfigError(f"epsilon must be positive, got {epsilon!r}")
    if horizon <= 0.0:
        raise ConfigError(f"horizon must be positive, got {horizon!r}")
    t_eval = np.linspace(0.0, float(horizon), 2001)

    full = solve_ivp(_em_rhs(epsilon, r), (0.0, float(horizon)),
                     (x0, 0.0, 0.0, v0, 0.0, 0.0), method="DOP853",
                     rtol=rtol, atol=atol, t_eval=t_eval)
    if not full.success:
        raise NumericsError(f"3D integration failed: {full.message}")
    off = np.abs(full.y[[1, 2, 4, 5], :])
    max_offplane = float(off.max())
    if max_offplane > 1e-10:
        raise NumericsError(
            f"pendulum plane was not preserved: off-plane max {max_offplane:.3e}"
        )

    reduced = solve_ivp(_reduced_rhs(epsilon, r), (0.0, float(horizon)),
                        (x0, v0), method="DOP853",
                        rtol=rtol, atol=atol, t_eval=t_eval)
    if not reduced.success:
        raise NumericsError(f"reduced integration failed: {reduced.message}")
    mismatch = float(max(np.max(np.abs(full.y[0] - reduced.y[0])),
                         np.max(np.abs(full.y[3] - reduced.y[1]))))

    residual = wave_residual(epsilon, r)
    passed = max_offplane <= 1e-10 and mismatch <= 1e-10 and residual <= 1e-12
    return InvariantSetReport(
        epsilon=float(epsilon), horizon=float(horizon), r=float(r),
        max_offplane=max_offplane, reduced_mismatch=mismatch,
        wave_residual=residual, passed=passed)
