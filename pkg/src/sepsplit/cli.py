"""Batch front-end: JSON config in, machine-readable reports out.

Commands:

- analyze: compute the connection, the stationary points, and the
  splitting coefficients; write orbit.csv, critical_points.csv and
  coefficients.json.
- scan: sweep the epsilon list, comparing the quadrature oracle
  against the predicted amplitude (and optionally the manifold
  displacement); write scan.csv and scaling.json.
- oracle: dump the raw quadrature values over one forcing period plus
  the fitted harmonics; write oracle.csv and oracle.json.

All numeric output uses 17 significant digits with '.' decimals, and
repeated runs with the same configuration are byte-identical. Exit
codes: 0 success, 2 violated mathematical hypothesis, 3 bad
configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import catalog, dynsys, expr, oracle, stphase
from .errors import ConfigError, HypothesisError, ParseError

__all__ = ["main", "load_config", "run"]

_COMMANDS = ("analyze", "scan", "oracle")

_DEFAULTS = {
    "system": "pendulum-em",
    "r": None,
    "forcing": None,
    "overrides": {},
    "saddle_guess": None,
    "epsilon": [0.02],
    "k_max": None,
    "phase": "flat",
    "commands": [],
    "out": "sepsplit-out",
    "threads": 1,
    "tolerances": {},
}

_TOLERANCE_DEFAULTS = {
    "hypothesis_floor": stphase.HYPOTHESIS_FLOOR,
    "n_t0": 16,
    "displacement": False,
    "t0_factor": 0.3,
    "verdict_floor": 1e-8,
}


# ---------------------------------------------------------------------------
# configuration


def _reject_unknown(mapping, allowed, where):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")


def _validate(cfg):
    _reject_unknown(cfg, _DEFAULTS, "config")
    sysval = cfg["system"]
    if isinstance(sysval, dict):
        _reject_unknown(sysval, ("f", "q"), "system")
        for key in ("f", "q"):
            if not isinstance(sysval.get(key), str):
                raise ConfigError(f"system.{key} must be an expression string")
    elif not isinstance(sysval, str):
        raise ConfigError("system must be a catalog name or an {f, q} table")
    if cfg["r"] is not None and not isinstance(cfg["r"], (int, float)):
        raise ConfigError("r must be a number")
    forcing = cfg["forcing"]
    if forcing is not None:
        if not isinstance(forcing, dict):
            raise ConfigError("forcing must be a descriptor table")
        kind = forcing.get("type")
        if kind == "periodic":
            _reject_unknown(forcing, ("type",), "forcing")
        elif kind == "quasiperiodic":
            _reject_unknown(forcing, ("type", "omega", "harmonics"), "forcing")
            if "omega" not in forcing or "harmonics" not in forcing:
                raise ConfigError("quasiperiodic forcing needs omega and harmonics")
        else:
            raise ConfigError(f"unknown forcing type {kind!r}")
    _reject_unknown(cfg["overrides"], ("f", "q"), "overrides")
    eps = cfg["epsilon"]
    if (not isinstance(eps, list) or not eps
            or not all(isinstance(e, (int, float)) and e > 0.0 for e in eps)):
        raise ConfigError("epsilon must be a non-empty list of positive numbers")
    if cfg["k_max"] is not None:
        if not isinstance(cfg["k_max"], int) or cfg["k_max"] < 1:
            raise ConfigError("k_max must be a positive integer")
    if cfg["phase"] not in ("flat", "resolved"):
        raise ConfigError(f"phase must be 'flat' or 'resolved', got {cfg['phase']!r}")
    if (not isinstance(cfg["commands"], list)
            or any(c not in _COMMANDS for c in cfg["commands"])):
        raise ConfigError(f"commands must be a list drawn from {_COMMANDS}")
    if not isinstance(cfg["threads"], int) or cfg["threads"] < 1:
        raise ConfigError("threads must be a positive integer")
    if not isinstance(cfg["out"], str) or not cfg["out"]:
        raise ConfigError("out must be a directory path")
    tol = dict(_TOLERANCE_DEFAULTS)
    _reject_unknown(cfg["tolerances"], tol, "tolerances")
    tol.update(cfg["tolerances"])
    if not isinstance(tol["n_t0"], int) or tol["n_t0"] < 1:
        raise ConfigError("tolerances.n_t0 must be a positive integer")
    if not isinstance(tol["displacement"], bool):
        raise ConfigError("tolerances.displacement must be a boolean")
    cfg["tolerances"] = tol
    if cfg["saddle_guess"] is not None and not isinstance(
            cfg["saddle_guess"], (int, float)):
        raise ConfigError("saddle_guess must be a number")
    return cfg


def load_config(path):
    """Read and validate a JSON run configuration."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"malformed JSON in {path}: {err.msg} at line {err.lineno} "
            f"column {err.colno}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    cfg = dict(_DEFAULTS)
    cfg["overrides"] = dict(_DEFAULTS["overrides"])
    cfg.update(raw)
    return _validate(cfg)


def _parse_set(cfg, assignment):
    key, sep, value = assignment.partition("=")
    if not sep:
        raise ConfigError(f"--set needs key=value, got {assignment!r}")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value  # bare strings are fine unquoted
    if key in ("f", "q"):
        cfg["overrides"] = dict(cfg["overrides"], **{key: parsed})
    elif key.startswith("tolerances."):
        sub = key[len("tolerances."):]
        cfg["tolerances"] = dict(cfg["tolerances"], **{sub: parsed})
    elif key in _DEFAULTS:
        cfg[key] = parsed
    else:
        raise ConfigError(f"--set references unknown config key {key!r}")


# ---------------------------------------------------------------------------
# pipeline assembly


def _build_forcing(desc):
    if desc["type"] == "periodic":
        return dynsys.Periodic()
    omega = tuple(float(w) for w in desc["omega"])
    try:
        harmonics = tuple((tuple(int(c) for c in m), float(amp))
                          for m, amp in desc["harmonics"])
    except (TypeError, ValueError):
        raise ConfigError(
            "harmonics must be [[m-vector, amplitude], ...] entries") from None
    return dynsys.cosine_forcing(omega, harmonics)


def _build_system(cfg):
    """SystemSpec plus a saddle guess, from catalog name or expressions."""
    sysval = cfg["system"]
    if isinstance(sysval, str):
        entry = catalog.get_entry(sysval, r=cfg["r"])
        spec = entry.system
        guess = entry.reference.get("saddle_x", 0.0) + 0.1
    else:
        spec = dynsys.SystemSpec(
            f=expr.parse(sysval["f"], ("x",)),
            q=expr.parse(sysval["q"], ("xi", "v")),
            r=2.6 if cfg["r"] is None else float(cfg["r"]),
            forcing=dynsys.Periodic())
        guess = 0.1
    rebuild = {}
    if cfg["overrides"].get("f") is not None:
        rebuild["f"] = expr.parse(str(cfg["overrides"]["f"]), ("x",))
    if cfg["overrides"].get("q") is not None:
        rebuild["q"] = expr.parse(str(cfg["overrides"]["q"]), ("xi", "v"))
    if cfg["forcing"] is not None:
        rebuild["forcing"] = _build_forcing(cfg["forcing"])
    if rebuild:
        spec = dynsys.SystemSpec(
            f=rebuild.get("f", spec.f), q=rebuild.get("q", spec.q),
            r=spec.r, forcing=rebuild.get("forcing", spec.forcing))
    if cfg["saddle_guess"] is not None:
        guess = float(cfg["saddle_guess"])
    return spec, guess


def _coefficients(sys, orbit, cfg, epsilon):
    kwargs = dict(k_max=cfg["k_max"], phase=cfg["phase"],
                  hypothesis_floor=cfg["tolerances"]["hypothesis_floor"])
    if cfg["phase"] == "resolved":
        kwargs["epsilon"] = epsilon
    if isinstance(sys.forcing, dynsys.QuasiPeriodic):
        return stphase.splitting_coefficients_qp(sys, orbit, **kwargs)
    return stphase.splitting_coefficients(sys, orbit, **kwargs)


# ---------------------------------------------------------------------------
# deterministic writers


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return "%.17g" % value


def _write_csv(out_dir, name, header, rows):
    path = out_dir / name
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_json(out_dir, name, payload):
    path = out_dir / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _m_key(m):
    return ";".join(str(int(c)) for c in m)


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(cfg, out_dir):
    sys_spec, guess = _build_system(cfg)
    eq = dynsys.find_saddle(sys_spec, guess)
    orbit = dynsys.compute_separatrix(sys_spec, eq)
    eps = float(cfg["epsilon"][0])
    coeffs = _coefficients(sys_spec, orbit, cfg, eps)
    report = stphase.prediction_report(
        coeffs, eps, verdict_floor=cfg["tolerances"]["verdict_floor"])

    written = [_write_csv(out_dir, "orbit.csv", ("t", "x", "v"),
                          zip(orbit.t, orbit.x, orbit.v))]
    cp_rows = [(cp.k, "" if cp.m is None else _m_key(cp.m),
                cp.t_star, cp.x_star, cp.f_star, cp.sigma)
               for cp in coeffs.critical_points]
    written.append(_write_csv(
        out_dir, "critical_points.csv",
        ("k", "m", "t_star", "x_star", "f_star", "sigma"), cp_rows))

    payload = {
        "mode": coeffs.mode,
        "phase": coeffs.phase,
        "epsilon": eps,
        "r": coeffs.r,
        "k_max_used": coeffs.k_max_used,
        "truncation_estimate": coeffs.truncation_estimate,
        "splitting_verdict": report.splitting_verdict,
        "error_order": list(report.error_order),
        "tolerances": cfg["tolerances"],
    }
    if coeffs.mode == "periodic":
        payload["A"] = coeffs.A
        payload["B"] = coeffs.B
    else:
        payload["omega"] = list(coeffs.omega)
        payload["per_m"] = {_m_key(m): [a, b]
                            for m, (a, b) in sorted(coeffs.per_m.items())}
    written.append(_write_json(out_dir, "coefficients.json", payload))
    return written


def _scan_amplitudes(scan_result):
    # single number per epsilon: quadrature sum over fitted harmonics
    return math.sqrt(sum(amp * amp for amp, _ in scan_result.fitted.values()))


def _predicted_amplitude(sys_spec, orbit, cfg, eps):
    cfg_resolved = dict(cfg, phase="resolved")
    coeffs = _coefficients(sys_spec, orbit, cfg_resolved, eps)
    scale = eps ** (sys_spec.r + 0.5)
    amp = stphase.amplitude(coeffs)
    if coeffs.mode == "periodic":
        return amp * scale
    return math.sqrt(sum((a * scale) ** 2 for a in amp.values()))


def cmd_scan(cfg, out_dir):
    if len(cfg["epsilon"]) < 3:
        raise ConfigError("scan needs at least 3 epsilon values")
    sys_spec, guess = _build_system(cfg)
    eq = dynsys.find_saddle(sys_spec, guess)
    orbit = dynsys.compute_separatrix(sys_spec, eq)
    tol = cfg["tolerances"]
    periodic = isinstance(sys_spec.forcing, dynsys.Periodic)

    def worker(eps):
        eps = float(eps)
        scan = oracle.melnikov_scan(sys_spec, orbit, eps, n_t0=tol["n_t0"])
        fitted_amp = _scan_amplitudes(scan)
        predicted = _predicted_amplitude(sys_spec, orbit, cfg, eps)
        gap = None
        if tol["displacement"] and periodic and 5e-3 <= eps <= 5e-2:
            t0 = tol["t0_factor"] * 2.0 * math.pi * eps
            m_val = oracle.melnikov_direct(sys_spec, orbit, eps, t0)
            d_res = oracle.displacement_direct(sys_spec, eps, t0, orbit=orbit)
            gap = abs(d_res.D_value - m_val)
        return eps, fitted_amp, predicted, gap

    eps_list = [float(e) for e in cfg["epsilon"]]
    if cfg["threads"] > 1:
        with ThreadPoolExecutor(max_workers=cfg["threads"]) as pool:
            rows = list(pool.map(worker, eps_list))
    else:
        rows = [worker(e) for e in eps_list]

    written = [_write_csv(
        out_dir, "scan.csv",
        ("epsilon", "oracle_amplitude", "predicted_amplitude",
         "displacement_gap"), rows)]

    amp_fit = oracle.epsilon_scaling_fit([(e, a) for e, a, _, _ in rows])
    payload = {
        "amplitude_slope": amp_fit.slope,
        "amplitude_intercept": amp_fit.intercept,
        "amplitude_target": sys_spec.r + 0.5,
        "difference_target": 2.0 * sys_spec.r - 2.0,
        "difference_slope": None,
        "epsilon": eps_list,
        "tolerances": tol,
    }
    gaps = [(e, g) for e, _, _, g in rows if g is not None and g > 0.0]
    if len(gaps) >= 3:
        payload["difference_slope"] = oracle.epsilon_scaling_fit(gaps).slope
    written.append(_write_json(out_dir, "scaling.json", payload))
    return written


def cmd_oracle(cfg, out_dir):
    sys_spec, guess = _build_system(cfg)
    eq = dynsys.find_saddle(sys_spec, guess)
    orbit = dynsys.compute_separatrix(sys_spec, eq)
    eps = float(cfg["epsilon"][0])
    scan = oracle.melnikov_scan(sys_spec, orbit, eps,
                                n_t0=cfg["tolerances"]["n_t0"])
    written = [_write_csv(out_dir, "oracle.csv", ("t0", "melnikov"),
                          zip(scan.t0_samples, scan.values))]
    harmonics = {
        ("fast" if m is None else _m_key(m)): [amp, phase]
        for m, (amp, phase) in sorted(
            scan.fitted.items(), key=lambda kv: str(kv[0]))
    }
    payload = {
        "epsilon": eps,
        "harmonics": harmonics,
        "residual": scan.residual,
        "n_t0": cfg["tolerances"]["n_t0"],
        "tolerances": cfg["tolerances"],
    }
    written.append(_write_json(out_dir, "oracle.json", payload))
    return written


_RUNNERS = {"analyze": cmd_analyze, "scan": cmd_scan, "oracle": cmd_oracle}


def run(cfg):
    """Execute the configured commands; returns the list of files written."""
    commands = cfg["commands"]
    if not commands:
        raise ConfigError("nothing to do: no command given")
    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in commands:
        written.extend(_RUNNERS[name](cfg, out_dir))
    return written


class _Parser(argparse.ArgumentParser):
    # argparse's default error path exits with status 2, which this
    # tool reserves for hypothesis violations; route to ConfigError
    def error(self, message):
        raise ConfigError(message)


def main(argv=None):
    parser = _Parser(prog="sepsplit", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("command", nargs="?", choices=_COMMANDS,
                        help="pipeline stage to run")
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--example", help="catalog entry name")
    parser.add_argument("--set", action="append", default=[], metavar="K=V",
                        help="override a config key (JSON-parsed value)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--threads", type=int, help="worker threads")
    try:
        args = parser.parse_args(argv)
        if args.config is not None:
            cfg = load_config(args.config)
        else:
            cfg = _validate(dict(_DEFAULTS, overrides={}, tolerances={}))
        if args.example is not None:
            cfg["system"] = args.example
        for assignment in args.set:
            _parse_set(cfg, assignment)
        if args.out is not None:
            cfg["out"] = args.out
        if args.threads is not None:
            cfg["threads"] = args.threads
        if args.command is not None:
            cfg["commands"] = [args.command]
        cfg = _validate(cfg)
        written = run(cfg)
    except (ConfigError, ParseError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 3
    except HypothesisError as err:
        print(f"hypothesis violation: {err}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
