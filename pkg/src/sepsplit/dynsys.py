"""Unperturbed dynamics: saddle location, separatrix computation, dense
output, and exponential tail constants.

The central object is the saddle connection x0(t) of the one-degree-of-
freedom system  xdd = f(x).  It is computed once, to tolerances far below
anything the asymptotic machinery will resolve, and then evaluated many
millions of times through a vectorized cubic-Hermite dense output with
exponential tail formulas beyond the sampled window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import expr
from .errors import HypothesisError, NumericsError, SepsplitError

__all__ = [
    "Periodic", "QuasiPeriodic", "cosine_forcing", "SystemSpec",
    "Equilibrium", "SeparatrixOrbit", "find_saddle", "compute_separatrix",
    "orbit_eval", "fit_tail_constants", "potential_values",
]


# ---------------------------------------------------------------------------
# forcing and system definition

@dataclass(frozen=True)
class Periodic:
    """Forcing profile cos(t/eps): a single fast harmonic."""


@dataclass(frozen=True)
class QuasiPeriodic:
    """Forcing profile F(omega_1 t/eps, ..., omega_d t/eps) with F given by
    a finite, conjugate-symmetric harmonic list, so F is real-valued."""

    omega: tuple
    harmonics: tuple  # ((m_1..m_d), F_m) pairs, F_m complex

    def __post_init__(self):
        if len(self.omega) == 0:
            raise HypothesisError("frequency vector is empty")
        if not all(math.isfinite(w) for w in self.omega):
            raise HypothesisError("frequency vector has non-finite entries")
        d = len(self.omega)
        table = {}
        for m, coeff in self.harmonics:
            if len(m) != d:
                raise HypothesisError(
                    f"harmonic label {m} does not match frequency dimension {d}"
                )
            if not any(m):
                raise HypothesisError("zero harmonic label breaks the zero-mean requirement")
            dot = sum(mi * wi for mi, wi in zip(m, self.omega))
            if dot == 0.0:
                raise HypothesisError(
                    f"resonant frequency combination: m·omega = 0 for m = {m}"
                )
            table[tuple(m)] = complex(coeff)
        for m, coeff in table.items():
            neg = tuple(-mi for mi in m)
            if neg not in table or table[neg] != coeff.conjugate():
                raise HypothesisError(
                    f"harmonic set is not conjugate-symmetric at m = {m}"
                )


def cosine_forcing(omega, terms):
    """Build a QuasiPeriodic profile sum_j amp_j cos(m_j·theta) from real
    amplitudes by splitting each cosine into its conjugate pair."""
    harmonics = []
    for m, amp in terms:
        m = tuple(int(v) for v in m)
        harmonics.append((m, complex(amp / 2.0, 0.0)))
        harmonics.append((tuple(-v for v in m), complex(amp / 2.0, 0.0)))
    return QuasiPeriodic(tuple(float(w) for w in omega), tuple(harmonics))


@dataclass(frozen=True)
class SystemSpec:
    """Definition of  xdd = f(x) + eps^r q(x/eps, xd) * (forcing profile).

    f is an expression in x; q an expression in (xi, v). f_prime is derived
    automatically. Compiled scalar and vectorized callables are attached at
    construction; the dataclass stays frozen.
    """

    f: object
    q: object
    r: float
    forcing: object = field(default_factory=Periodic)

    def __post_init__(self):
        if not self.r > 2.5:
            raise HypothesisError(
                f"forcing exponent r = {self.r} violates the hypothesis r > 5/2"
            )
        bad_f = expr.free_variables(self.f) - {"x"}
        if bad_f:
            raise SepsplitError(f"f may only depend on x, found {sorted(bad_f)}")
        bad_q = expr.free_variables(self.q) - {"xi", "v"}
        if bad_q:
            raise SepsplitError(f"q may only depend on (xi, v), found {sorted(bad_q)}")
        if not isinstance(self.forcing, (Periodic, QuasiPeriodic)):
            raise SepsplitError(f"unsupported forcing {self.forcing!r}")
        fp = expr.differentiate(self.f, "x")
        object.__setattr__(self, "f_prime", fp)
        object.__setattr__(self, "f_prime2", expr.differentiate(fp, "x"))
        object.__setattr__(self, "f_num", expr.compile_fn(self.f, ["x"]))
        object.__setattr__(self, "fp_num", expr.compile_fn(fp, ["x"]))
        object.__setattr__(self, "f_scalar", expr.compile_fn(self.f, ["x"], vectorized=False))
        object.__setattr__(self, "fp_scalar", expr.compile_fn(fp, ["x"], vectorized=False))
        object.__setattr__(
            self, "fpp_scalar", expr.compile_fn(self.f_prime2, ["x"], vectorized=False)
        )
        object.__setattr__(self, "q_num", expr.compile_fn(self.q, ["xi", "v"]))
        object.__setattr__(self, "q_scalar", expr.compile_fn(self.q, ["xi", "v"], vectorized=False))


# ---------------------------------------------------------------------------
# equilibrium

@dataclass(frozen=True)
class Equilibrium:
    x: float
    lam: float  # positive eigenvalue sqrt(f'(x)) of the saddle


def find_saddle(sys, guess, tol=1e-12, max_iter=50):
    """Newton-refine a zero of f from ``guess`` and classify it.

    Raises NumericsError if Newton does not reach |f| <= tol in max_iter
    steps, HypothesisError if the zero is not a saddle (f'(x) <= 0).
    """
    x = float(guess)
    for _ in range(max_iter):
        fx = sys.f_scalar(x)
        if abs(fx) <= tol:
            break
        dfx = sys.fp_scalar(x)
        if dfx == 0.0:
            raise NumericsError(f"Newton stalled at x = {x!r}: f'(x) = 0")
        x -= fx / dfx
    else:
        raise NumericsError(
            f"Newton did not reach |f| <= {tol:g} within {max_iter} iterations "
            f"from guess {guess!r}"
        )
    dfx = sys.fp_scalar(x)
    if dfx <= 0.0:
        raise HypothesisError(
            f"equilibrium at x = {x!r} is not a saddle: f'(x) = {dfx!r} <= 0"
        )
    return Equilibrium(x=x, lam=math.sqrt(dfx))


# ---------------------------------------------------------------------------
# separatrix orbit

@dataclass(frozen=True)
class SeparatrixOrbit:
    """Saddle connection with dense output.

    Samples cover at least [-T_cut, T_cut] with |xd0(+-T_cut)| <= 1e-12;
    t = 0 sits at the earliest global maximum of |xd0|. Beyond the sampled
    window orbit_eval switches to the fitted exponential tails
    xd0 ~ lam c_pm e^(-+lam t). Arrays are frozen after construction.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray  # f(x) at the samples, for Hermite dense output
    lam: float
    c_plus: float
    c_minus: float
    x_limit_minus: float
    x_limit_plus: float
    t_cut: float
    branch: int
    t_origin_convention: str = "earliest-peak-speed"

    def __post_init__(self):
        for arr in (self.t, self.x, self.v, self.a):
            arr.setflags(write=False)

    @property
    def max_speed(self):
        return float(np.max(np.abs(self.v)))


def _solve(rhs, t0, z0, t1, rtol, atol, max_step, events=None):
    sol = solve_ivp(
        rhs, (t0, t1), z0, method="DOP853", rtol=rtol, atol=atol,
        max_step=max_step, events=events, dense_output=False,
    )
    if not sol.success:
        raise NumericsError(f"integration failed: {sol.message}")
    return sol


def _local_field(sys, x_s, u_switch=1e-3):
    """Scalar f(x_s + u) that stays well-conditioned as u -> 0.

    Forming x_s + u directly loses all relative precision once |u| falls
    near ulp(x_s), which wrecks the deep-tail integrations (the solver
    chases rounding noise with collapsing steps). Below ``u_switch`` a
    quartic Taylor expansion around the saddle is used instead; its
    truncation error at the switch point is ~1e-14 relative, far below
    the integration tolerance. The constant term is dropped (|f(x_s)| <=
    1e-12 after Newton), which pins the numerical saddle exactly at u=0.
    """
    d1 = sys.fp_scalar(x_s)
    d2 = sys.fpp_scalar(x_s)
    f3e = expr.differentiate(sys.f_prime2, "x")
    f4e = expr.differentiate(f3e, "x")
    d3 = expr.compile_fn(f3e, ["x"], vectorized=False)(x_s)
    d4 = expr.compile_fn(f4e, ["x"], vectorized=False)(x_s)
    f_abs = sys.f_scalar

    def f_local(u):
        if abs(u) <= u_switch:
            return u * (d1 + u * (d2 / 2 + u * (d3 / 6 + u * (d4 / 24))))
        return f_abs(x_s + u)

    return f_local


def _manifold_seed(sys, x_s, lam, side, delta, stable):
    # quadratic local-manifold correction: with the manifold written as
    # v = W(u), u = x - x_s, invariance W W' = f(x_s + u) gives
    # W(u) = s*lam*u + f''(x_s)/(6*s*lam) u^2 + O(u^3), s = -+1.
    # The O(delta^2) residual of a bare eigenvector seed is not good
    # enough here: it amplifies by delta/d on the way down to the
    # 1e-12-speed tail cut and would wreck the deep-tail fidelity.
    s = -1.0 if stable else 1.0
    u = side * delta / math.sqrt(1.0 + lam * lam)
    w2 = sys.fpp_scalar(x_s) / (6.0 * s * lam)
    return u, s * lam * u + w2 * u * u


def compute_separatrix(
    sys, eq, branch=1, tol=1e-12,
    delta=1e-8, max_step=None, box=50.0, t_max=300.0,
):
    """Compute the saddle connection leaving ``eq`` along the unstable
    eigenvector direction ``branch``.

    The orbit is assembled from two manifold casts: one launched from the
    departure saddle along the unstable direction and one from the arrival
    saddle along the stable direction, matched in time where they overlap.
    Near each saddle the integration runs in saddle-centered coordinates
    with a purely relative error control, which is what lets the sampled
    tails reach the 1e-12 speed cut with honest accuracy.
    """
    lam = eq.lam
    x_e = eq.x
    rtol = tol
    atol = 1e-14
    if max_step is None:
        # bounds the O(h^3) error of the dense-output acceleration, which
        # must sit below the 1e-8 consistency budget with margin
        max_step = 0.004 / max(1.0, lam)
    branch = 1 if branch >= 0 else -1
    v_deep = 5e-13  # below the 1e-12 T_cut threshold, with margin

    def rhs_abs(t, y):
        return (y[1], sys.f_scalar(y[0]))

    # --- outgoing cast: launch point on the local unstable manifold
    u0, w0 = _manifold_seed(sys, x_e, lam, branch, delta, stable=False)
    z_launch = (x_e + u0, w0)

    # deep piece toward the departure saddle (backward time, shifted coords)
    f_src = _local_field(sys, x_e)

    def rhs_shift_src(t, y):
        return (y[1], f_src(y[0]))

    def ev_deep(t, y):
        return abs(y[1]) - v_deep
    ev_deep.terminal = True

    sol = _solve(rhs_shift_src, 0.0, (u0, w0), -60.0 / lam, rtol, 0.0,
                 max_step, events=[ev_deep])
    if abs(sol.y[1, -1]) > v_deep * 1.01:
        raise NumericsError("left tail never reached the 1e-12 speed cut")
    tL = sol.t[::-1]
    xL = x_e + sol.y[0, ::-1]
    vL = sol.y[1, ::-1]
    aL = np.array([f_src(u) for u in sol.y[0, ::-1]])

    # core: forward in absolute coordinates until a saddle approach
    t_parts, x_parts, v_parts, a_parts = [], [], [], []
    t_cur, z_cur = 0.0, z_launch
    vmax = abs(w0)
    fmax = 0.0
    hit = None
    while t_cur < t_max and hit is None:
        sol = _solve(rhs_abs, t_cur, z_cur, t_cur + 1.0, rtol, atol, max_step)
        ts, xs, vs = sol.t, sol.y[0], sol.y[1]
        if np.any(np.abs(xs - x_e) > box) or np.any(np.abs(vs) > box):
            raise NumericsError(
                "orbit escaped the bounding box: no saddle connection on this branch"
            )
        fs = sys.f_num(xs)
        for j in range(1, len(ts)):
            vmax = max(vmax, abs(vs[j]))
            fmax = max(fmax, abs(fs[j]))
            far_from_start = abs(xs[j] - x_e) > 0.1 or vmax > 1e5 * delta * lam
            if (
                far_from_start
                and vmax > 1e3 * delta * lam
                and abs(vs[j]) <= 3e-3 * vmax
                and abs(fs[j]) <= 3e-3 * max(fmax, 1e-6)
            ):
                hit = j
                break
        sl = slice(1 if t_parts else 0, hit + 1 if hit is not None else len(ts))
        t_parts.append(ts[sl])
        x_parts.append(xs[sl])
        v_parts.append(vs[sl])
        a_parts.append(fs[sl])
        t_cur, z_cur = ts[-1], (xs[-1], vs[-1])
    if hit is None:
        raise NumericsError(
            f"no saddle re-approach detected within the time budget t_max = {t_max}"
        )
    tU = np.concatenate(t_parts)
    xU = np.concatenate(x_parts)
    vU = np.concatenate(v_parts)
    aU = np.concatenate(a_parts)

    # identify the arrival saddle from the approach point
    tgt = find_saddle(sys, xU[-1])
    if abs(tgt.lam - lam) > 1e-8 * max(1.0, lam):
        raise HypothesisError(
            "arrival saddle has a different exponent than the departure saddle "
            f"({tgt.lam!r} vs {lam!r}); unequal-exponent connections are unsupported"
        )
    x_t = tgt.x
    side = 1 if xU[-1] > x_t else -1

    # incoming cast: seed on the local stable manifold of the arrival saddle
    u1, w1 = _manifold_seed(sys, x_t, lam, side, delta, stable=True)
    f_tgt = _local_field(sys, x_t)

    def rhs_shift_tgt(t, y):
        return (y[1], f_tgt(y[0]))

    # outer piece: backward in time until it overlaps the core's endpoint
    dist_u = abs(xU[-1] - x_t)

    def ev_out(t, y):
        return math.hypot(y[0], y[1]) - 3.0 * dist_u
    ev_out.terminal = True

    sol = _solve(rhs_shift_tgt, 0.0, (u1, w1), -60.0 / lam, rtol, 0.0,
                 max_step, events=[ev_out])
    sS = sol.t[::-1]          # increasing, ending at 0
    xS = x_t + sol.y[0, ::-1]
    vS = sol.y[1, ::-1]
    aS = np.array([f_tgt(u) for u in sol.y[0, ::-1]])

    # deep piece: forward to the speed cut
    sol = _solve(rhs_shift_tgt, 0.0, (u1, w1), 60.0 / lam, rtol, 0.0,
                 max_step, events=[ev_deep])
    if abs(sol.y[1, -1]) > v_deep * 1.01:
        raise NumericsError("right tail never reached the 1e-12 speed cut")
    sD = sol.t
    xD = x_t + sol.y[0]
    vD = sol.y[1]
    aD = np.array([f_tgt(u) for u in sol.y[0]])

    # --- match the incoming cast's clock against the core's endpoint
    x_ref = xU[-1]
    dxS = xS - x_ref
    cross = np.nonzero(dxS[:-1] * dxS[1:] <= 0.0)[0]
    if len(cross) == 0:
        raise NumericsError("incoming cast never crossed the core endpoint")
    j = cross[-1]  # crossing closest to the saddle approach

    def xs_eval(s):
        return _hermite(sS, xS, vS, aS, np.array([s]))[0][0] - x_ref

    s_star = brentq(xs_eval, sS[j], sS[j + 1], xtol=1e-14, rtol=8.9e-16)
    shift = tU[-1] - s_star
    v_gap = abs(_hermite(sS, xS, vS, aS, np.array([s_star]))[1][0] - vU[-1])
    if v_gap > 1e-9:
        raise NumericsError(
            f"cast matching gap {v_gap:.3e} exceeds 1e-9: energy drift too large"
        )

    keepS = sS > s_star + 1e-13
    t_all = np.concatenate([tL[:-1], tU, sS[keepS] + shift, sD[1:] + shift])
    x_all = np.concatenate([xL[:-1], xU, xS[keepS], xD[1:]])
    v_all = np.concatenate([vL[:-1], vU, vS[keepS], vD[1:]])
    a_all = np.concatenate([aL[:-1], aU, aS[keepS], aD[1:]])
    if np.any(np.diff(t_all) <= 0.0):
        raise NumericsError("assembled sample times are not strictly increasing")

    # --- re-center time at the earliest global maximum of |xd0|
    speed2 = v_all * v_all
    smax = speed2.max()
    big = np.nonzero(speed2 >= (1.0 - 1e-3) * smax)[0]
    clusters = np.split(big, np.nonzero(np.diff(t_all[big]) > 10 * max_step)[0] + 1)
    idx = clusters[0][np.argmax(speed2[clusters[0]])]

    def f_of_x(tq):
        return sys.f_scalar(float(_hermite(t_all, x_all, v_all, a_all, np.array([tq]))[0][0]))

    t_peak = None
    for width in range(1, 8):
        a_i, b_i = max(idx - width, 0), min(idx + width, len(t_all) - 1)
        fa, fb = a_all[a_i], a_all[b_i]
        if fa * fb < 0:
            t_peak = brentq(f_of_x, t_all[a_i], t_all[b_i], xtol=1e-13, rtol=8.9e-16)
            break
    if t_peak is None:
        raise NumericsError("failed to localize the speed maximum")
    t_all = t_all - t_peak

    # --- T_cut and coverage
    vabs = np.abs(v_all)
    right = np.nonzero((t_all > 0) & (vabs <= 1e-12))[0]
    left = np.nonzero((t_all < 0) & (vabs <= 1e-12))[0]
    if len(right) == 0 or len(left) == 0:
        raise NumericsError("speed cut 1e-12 not reached on both sides")
    t_cut = max(t_all[right[0]], -t_all[left[-1]])

    def extend(side_sign, t_end_have, state, f_loc):
        need = t_cut - abs(t_end_have)
        if need <= 0:
            return None

        def rhs(t, y):
            return (y[1], f_loc(y[0]))
        sol = _solve(rhs, 0.0, state, side_sign * (need + 2 * max_step),
                     rtol, 0.0, max_step)
        return sol

    ext = extend(1.0, t_all[-1], (x_all[-1] - x_t, v_all[-1]), f_tgt)
    if ext is not None:
        t_all = np.concatenate([t_all, t_all[-1] + ext.t[1:]])
        x_all = np.concatenate([x_all, x_t + ext.y[0, 1:]])
        v_all = np.concatenate([v_all, ext.y[1, 1:]])
        a_all = np.concatenate([a_all, [f_tgt(u) for u in ext.y[0, 1:]]])
    ext = extend(-1.0, t_all[0], (x_all[0] - x_e, v_all[0]), f_src)
    if ext is not None:
        t_all = np.concatenate([t_all[0] + ext.t[:0:-1], t_all])
        x_all = np.concatenate([x_e + ext.y[0, :0:-1], x_all])
        v_all = np.concatenate([ext.y[1, :0:-1], v_all])
        a_all = np.concatenate([[f_src(u) for u in ext.y[0, :0:-1]], a_all])

    c_plus, c_minus = fit_tail_constants(t_all, v_all, lam)

    dx_lim = x_t - x_e
    if isinstance(sys.forcing, (Periodic, QuasiPeriodic)) and abs(dx_lim) > 1e-9:
        k = round(dx_lim / (2.0 * math.pi))
        if abs(dx_lim - 2.0 * math.pi * k) > 1e-6:
            raise HypothesisError(
                "heteroclinic x-limits differ by "
                f"{dx_lim!r}, not a multiple of the 2*pi period of q in xi"
            )

    return SeparatrixOrbit(
        t=t_all, x=x_all, v=v_all, a=a_all, lam=lam,
        c_plus=c_plus, c_minus=c_minus,
        x_limit_minus=x_e, x_limit_plus=x_t,
        t_cut=float(t_cut), branch=branch,
    )


# ---------------------------------------------------------------------------
# dense output

def _hermite(tg, xg, vg, ag, tq):
    """Vectorized cubic Hermite evaluation of (x, v, a) on the sample grid.
    Position uses (x, v) data; velocity uses (v, a); acceleration is the
    derivative of the velocity interpolant."""
    i = np.clip(np.searchsorted(tg, tq, side="right") - 1, 0, len(tg) - 2)
    h = tg[i + 1] - tg[i]
    s = (tq - tg[i]) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    x = h00 * xg[i] + h10 * h * vg[i] + h01 * xg[i + 1] + h11 * h * vg[i + 1]
    v = h00 * vg[i] + h10 * h * ag[i] + h01 * vg[i + 1] + h11 * h * ag[i + 1]
    d00 = 6 * s2 - 6 * s
    d10 = 3 * s2 - 4 * s + 1
    d01 = -6 * s2 + 6 * s
    d11 = 3 * s2 - 2 * s
    a = (d00 * vg[i] + d01 * vg[i + 1]) / h + d10 * ag[i] + d11 * ag[i + 1]
    return x, v, a


def orbit_eval(orbit, t):
    """Evaluate (x0, xd0, xdd0) at ``t`` (scalar or array).

    Inside the sampled window: cubic Hermite dense output. Outside: the
    exponential tail x0 = x_limit -+ c_pm e^(-+lam t), which is what the
    quadrature and root-finding layers rely on at large |t|.
    """
    tq = np.asarray(t, dtype=float)
    scalar = tq.ndim == 0
    tq = np.atleast_1d(tq)
    x = np.empty_like(tq)
    v = np.empty_like(tq)
    a = np.empty_like(tq)

    lo, hi = orbit.t[0], orbit.t[-1]
    mid = (tq >= lo) & (tq <= hi)
    if np.any(mid):
        xm, vm, am = _hermite(orbit.t, orbit.x, orbit.v, orbit.a, tq[mid])
        x[mid], v[mid], a[mid] = xm, vm, am
    plus = tq > hi
    if np.any(plus):
        e = np.exp(-orbit.lam * tq[plus])
        x[plus] = orbit.x_limit_plus - orbit.c_plus * e
        v[plus] = orbit.lam * orbit.c_plus * e
        a[plus] = -orbit.lam**2 * orbit.c_plus * e
    minus = tq < lo
    if np.any(minus):
        e = np.exp(orbit.lam * tq[minus])
        x[minus] = orbit.x_limit_minus + orbit.c_minus * e
        v[minus] = orbit.lam * orbit.c_minus * e
        a[minus] = orbit.lam**2 * orbit.c_minus * e
    if scalar:
        return float(x[0]), float(v[0]), float(a[0])
    return x, v, a


# ---------------------------------------------------------------------------
# tail constants

def fit_tail_constants(t, v, lam, window=(1e-10, 1e-4), residual_tol=1e-3):
    """Fit the signed tail constants c_pm of xd0 ~ lam c_pm e^(-+lam t).

    Intercept-only least squares of log|xd0| against -+lam t over the
    window where |xd0| lies in ``window``, restricted to the final
    approach on each side (interior speed dips, e.g. at a homoclinic
    apex, are excluded). Raises NumericsError if either window is empty
    or the fit residual exceeds ``residual_tol``.
    """
    t = np.asarray(t, float)
    v = np.asarray(v, float)
    vabs = np.abs(v)
    big = np.nonzero(vabs >= 1e-3 * vabs.max())[0]
    t_first_big, t_last_big = t[big[0]], t[big[-1]]

    out = []
    for sgn, region in ((+1, t > t_last_big), (-1, t < t_first_big)):
        mask = region & (vabs >= window[0]) & (vabs <= window[1])
        if not np.any(mask):
            raise NumericsError(
                "tail window is empty: samples do not reach the fit range "
                f"on the {'+' if sgn > 0 else '-'} side"
            )
        y = np.log(vabs[mask]) + sgn * lam * t[mask]
        const = float(np.mean(y))
        res = float(np.max(np.abs(y - const)))
        if res > residual_tol:
            raise NumericsError(
                f"tail fit residual {res:.3e} exceeds {residual_tol:g}: "
                "decay is not exponential with the given exponent"
            )
        sign = 1.0 if np.all(v[mask] > 0) else -1.0 if np.all(v[mask] < 0) else None
        if sign is None:
            raise NumericsError("tail speed changes sign inside the fit window")
        out.append(sign * math.exp(const) / lam)
    return out[0], out[1]


# ---------------------------------------------------------------------------
# potential

def potential_values(sys, xs, x_ref, order=96):
    """V(x) = -integral of f from x_ref to x, one Gauss-Legendre panel per
    target point (the integrand is smooth; a single high-order panel is
    exact to machine precision for the catalog systems)."""
    xs = np.atleast_1d(np.asarray(xs, float))
    nodes, weights = np.polynomial.legendre.leggauss(order)
    half = (xs - x_ref) / 2.0
    mid = (xs + x_ref) / 2.0
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    vals = sys.f_num(pts)
    return -(half * (vals @ weights))
