"""Command-line entry point: ``ancient-fbmcf <command> ...``.

Every file written carries the effective configuration as ``# key=value``
lines ahead of a CSV header; numbers are written with 17 significant digits.
Exit status is 0 on success, 1 when a check fails and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import math
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import barriers as br
from . import diagnostics as dg
from . import heat_liouville as hl
from . import spectrum as sp
from .errors import ConfigError, InsufficientData, InvariantBreach, OutOfRangeError
from .flow_solver import TRACE_FIELDS, mean_curvature_profile, estimate_extinction, run as run_flow
from .suites import SUITES, RunCache, run_suite

CONFIG_ENV = "ANCIENT_FBMCF_CONFIG"
MAX_DIM = 10


@dataclass(frozen=True)
class RunConfig:
    dim: int = 2
    rho: float = 0.05
    grid: int = 400
    cfl: float = 0.2
    stop_sin_theta: float = 0.9
    record_every: int = 100
    snapshot_every: int = 0
    out: str | None = None
    snapshots: str | None = None
    crude_tol: float = dg.CRUDE_TOL
    asymptotic_tol: float = dg.ASYMPTOTIC_TOL
    drift_tol: float = dg.DRIFT_TOL
    uniqueness_tol: float = dg.UNIQUENESS_TOL
    containment_tol: float = dg.CONTAINMENT_TOL
    gradient_tol: float = dg.GRADIENT_TOL
    align_height: float = dg.ALIGN_HEIGHT
    shape_rho: float = 0.02

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}

# (lower, upper, lower inclusive)
_RANGES = {
    "dim": (1, MAX_DIM, True),
    "rho": (0.0, 0.5, False),
    "grid": (50, math.inf, True),
    "cfl": (0.0, 0.5, False),
    "stop_sin_theta": (0.0, 1.0 - 1e-12, False),
    "record_every": (1, math.inf, True),
    "snapshot_every": (0, math.inf, True),
    "align_height": (0.0, 1.0 - 1e-12, False),
    "shape_rho": (0.0, 0.5, False),
}


def _coerce(key: str, raw):
    kind = _FIELD_TYPES[key]
    if raw is None:
        return None
    try:
        if kind == "int":
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError
            return int(raw)
        if kind == "float":
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot read {raw!r} as {kind}") from None


def _validate(cfg: RunConfig) -> RunConfig:
    for key, (lo, hi, closed) in _RANGES.items():
        v = getattr(cfg, key)
        low_ok = v >= lo if closed else v > lo
        if not (low_ok and v <= hi):
            raise ConfigError(key, f"value {v!r} out of range")
    for key in ("crude_tol", "asymptotic_tol", "drift_tol", "uniqueness_tol",
                "containment_tol", "gradient_tol"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(key, f"value {getattr(cfg, key)!r} must be positive")
    return cfg


def read_config_file(path) -> dict:
    """``key = value`` lines (``#`` comments) as a dict of raw strings."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = lambda k: k.strip().replace("-", "_")
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc.message}") from None
    return dict(parser["run"])


def parse_config(args: dict | None = None, path=None, env=None) -> RunConfig:
    """Defaults, then the config file, then explicit flags.

    ``args`` maps field names to flag values; ``None`` means the flag was
    not given.  Without ``path`` the file named by ``ANCIENT_FBMCF_CONFIG``
    is used, if set.
    """
    env = os.environ if env is None else env
    path = path or env.get(CONFIG_ENV) or None
    merged = {}
    if path:
        for key, raw in read_config_file(path).items():
            if key not in _FIELD_TYPES:
                raise ConfigError(key, "unknown key")
            merged[key] = _coerce(key, raw)
    for key, value in (args or {}).items():
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown key")
        if value is not None:
            merged[key] = _coerce(key, value)
    return _validate(replace(RunConfig(), **merged))


# -- output --------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def _header_lines(settings) -> list[str]:
    return [f"# {k}={_fmt(v)}\n" for k, v in settings]


def write_csv(path, settings, header, rows) -> None:
    """Write ``rows`` under ``# key=value`` lines and a column header."""
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.writelines(_header_lines(settings))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _emit(out, settings, header, rows) -> None:
    if out:
        write_csv(out, settings, header, rows)
        return
    sys.stdout.writelines(_header_lines(settings))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])


def _settings(args, skip=("command", "func", "config")):
    return [(k, v) for k, v in sorted(vars(args).items()) if k not in skip]


def _check_dim(dim: int) -> int:
    if not 1 <= dim <= MAX_DIM:
        raise ConfigError("dim", f"value {dim} out of range")
    return dim


# -- commands --------------------------------------------------------------------

def cmd_lambda0(args) -> int:
    gs = sp.solve_lambda0(_check_dim(args.dim), tol=args.tol)
    print(f"{gs.lambda0:.15f}")
    print(f"{gs.mu0:.15f}")
    return 0


def cmd_phi0(args) -> int:
    n = _check_dim(args.dim)
    if not args.rho_max > 0 or args.samples < 2:
        raise ConfigError("rho_max", "need rho_max > 0 and samples >= 2")
    gs = sp.solve_lambda0(n, rho_max=max(sp.DEFAULT_RHO_MAX, args.rho_max))
    rho = np.linspace(0.0, args.rho_max, args.samples)
    phi, dphi = sp.phi0_eval(gs, rho)
    Phi, Phi2 = sp.phi_ratios(gs, rho)
    settings = _settings(args) + [("lambda0", gs.lambda0)]
    _emit(args.out, settings, ["rho", "phi", "phi_prime", "Phi", "Phi2"],
          zip(rho, phi, dphi, Phi, Phi2))
    return 0


def cmd_spectrum_scan(args) -> int:
    n = _check_dim(args.dim)
    if args.ell < 0:
        raise ConfigError("ell", "must be >= 0")
    modes = hl.find_eigenvalues(n, args.ell, args.mu_min, args.mu_max, args.scan_step)
    rows = [(m.ell, m.mu, hl.shoot_residual(n, m.ell, m.mu)) for m in modes]
    _emit(args.out, _settings(args), ["ell", "mu", "residual"], rows)
    return 0


def _read_profile(path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or not {"r", "v"} <= set(reader.fieldnames):
        raise ConfigError("init_file", "needs columns r and v")
    rows = [(float(d["r"]), float(d["v"])) for d in reader]
    r, v = np.array(rows).T
    order = np.argsort(r)
    return r[order], v[order]


def cmd_heat(args) -> int:
    n = _check_dim(args.dim)
    if not 0 < args.dr <= 0.1:
        raise ConfigError("dr", f"value {args.dr} out of range")
    if not args.t_end > 0:
        raise ConfigError("t_end", "must be positive")
    if args.init == "ground":
        init = hl.ground_mode(sp.solve_lambda0(n))
    elif args.init == "constant":
        init = np.ones_like
    else:
        if not args.init_file:
            raise ConfigError("init_file", "required with --init file")
        try:
            r0, v0 = _read_profile(args.init_file)
        except OSError as exc:
            raise ConfigError("init_file", f"cannot read {args.init_file}: {exc.strerror}") from None

        def init(r):
            return np.interp(r, r0, v0)
    times = np.linspace(0.0, args.t_end, args.frames)
    states = hl.evolve_heat(n, init, args.dr, args.t_end, times=list(times))
    rows = [(st.t, r, v) for st in states for r, v in zip(st.r, st.values)]
    _emit(args.out, _settings(args), ["t", "r", "v"], rows)
    return 0


def cmd_barriers(args) -> int:
    n = _check_dim(args.dim)
    if not 0 < args.lambda_frac or not args.t < 0 or args.samples < 2:
        raise ConfigError("lambda_frac", "need lambda_frac > 0, t < 0 and samples >= 2")
    gs = sp.solve_lambda0(n)
    s = br.SigmaSurface(gs, args.lambda_frac * gs.lambda0, args.t)
    try:
        x = np.linspace(0.0, br.ball_intersection(s), args.samples)
    except OutOfRangeError:
        x = br.sigma_grid(s, args.samples)
    y = br.sigma_height(s, x)
    g = br.sigma_geometry(s, x)
    rows = zip(x, y, g.theta, g.kappa, g.kappa_hat, g.H, g.speed, g.H - g.speed)
    settings = _settings(args) + [("lambda", s.lam)]
    _emit(args.out, settings, ["x", "y", "theta", "kappa", "kappa_hat", "H", "speed", "margin"],
          rows)
    return 0


def _theta_grid(text: str) -> np.ndarray:
    try:
        a, b, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise ConfigError("theta_grid", f"expected A:B:STEP, got {text!r}") from None
    if not (0 < a <= b < math.pi / 2 and step > 0):
        raise ConfigError("theta_grid", "need 0 < A <= B < pi/2 and STEP > 0")
    k = int(math.floor((b - a) / step + 1e-9))
    return a + step * np.arange(k + 1)


def cmd_lambda_theta(args) -> int:
    n = _check_dim(args.dim)
    thetas = _theta_grid(args.theta_grid)
    gs = sp.solve_lambda0(n)
    rows = [(th, br.solve_lambda_theta(n, th, gs)) for th in thetas]
    settings = _settings(args) + [("lambda0", gs.lambda0)]
    _emit(args.out, settings, ["theta", "lambda"], rows)
    return 0


_CONFIG_FLAGS = ("dim", "rho", "grid", "cfl", "stop_sin_theta", "out", "snapshots",
                 "snapshot_every", "record_every", "shape_rho")


def _config_from(args) -> RunConfig:
    flags = {k: getattr(args, k, None) for k in _CONFIG_FLAGS}
    return parse_config(flags, args.config)


def _write_snapshot(directory: Path, index: int, state, settings) -> None:
    H = mean_curvature_profile(state)
    extra = [("t", state.t), ("x_b", state.xb)]
    write_csv(directory / f"snapshot_{index:05d}.csv", settings + extra,
              ["xi", "x", "u", "H"], zip(state.xi, state.x, state.u, H))


def cmd_flow(args) -> int:
    cfg = _config_from(args)
    out = cfg.out or "trace.csv"
    settings = cfg.items()
    status = 0
    try:
        trace, snaps = run_flow(cfg.dim, cfg.rho, M=cfg.grid, cfl=cfg.cfl,
                                stop_sin_theta=cfg.stop_sin_theta,
                                record_every=cfg.record_every,
                                snapshot_every=cfg.snapshot_every or None)
    except InvariantBreach as exc:
        print(f"flow stopped: {exc}", file=sys.stderr)
        trace = exc.trace
        snaps = [exc.state] if exc.state is not None else []
        status = 1
    info = [("status", trace.status), ("steps", trace.steps)]
    if status == 0:
        try:
            info.append(("t_ext", estimate_extinction(trace)))
        except InsufficientData:
            pass
    write_csv(out, settings + info, list(TRACE_FIELDS), trace.rows)
    if cfg.snapshots:
        d = Path(cfg.snapshots)
        d.mkdir(parents=True, exist_ok=True)
        for i, s in enumerate(snaps):
            _write_snapshot(d, i, s, settings)
    print(f"{len(trace)} rows, status {trace.status}, t = {trace.t[-1]:.6f}")
    return status


def _print_table(reports) -> None:
    print(f"{'estimate':<38} {'worst_margin':>13} {'time':>11} {'tolerance':>10}  result")
    for r in reports:
        flag = "info" if r.informational else ("PASS" if r.passed else "FAIL")
        print(f"{r.name:<38} {r.worst_margin:>13.4e} {r.time:>11.5f} {r.tolerance:>10.1e}  {flag}")


def cmd_verify(args) -> int:
    cfg = _config_from(args)
    reports = run_suite(args.suite, cfg, RunCache())
    _print_table(reports)
    out = cfg.out or f"verify_{args.suite}_n{cfg.dim}.csv"
    rows = [(r.name, r.worst_margin, r.time, r.tolerance,
             "info" if r.informational else r.passed) for r in reports]
    write_csv(out, [("suite", args.suite)] + cfg.items(),
              ["estimate", "worst_margin", "time", "tolerance", "pass"], rows)
    failed = [r for r in reports if not r.informational and not r.passed]
    return 1 if failed else 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ancient-fbmcf",
                                description="Ancient free-boundary mean curvature flow in the unit ball.")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")
    p.commands = sub.choices

    c = sub.add_parser("lambda0", help="ground-state frequency and eigenvalue")
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--tol", type=float, default=1e-13)
    c.set_defaults(func=cmd_lambda0)

    c = sub.add_parser("phi0", help="tabulate the radial ground state")
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--rho-max", type=float, default=10.0)
    c.add_argument("--samples", type=int, default=201)
    c.add_argument("--out")
    c.set_defaults(func=cmd_phi0)

    c = sub.add_parser("spectrum-scan", help="Robin eigenvalues of one angular degree")
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--ell", type=int, default=0)
    c.add_argument("--mu-min", type=float, default=-25.0)
    c.add_argument("--mu-max", type=float, default=0.0)
    c.add_argument("--scan-step", type=float, default=hl.SCAN_STEP)
    c.add_argument("--out")
    c.set_defaults(func=cmd_spectrum_scan)

    c = sub.add_parser("heat", help="radial heat equation with the Robin condition")
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--init", choices=("ground", "constant", "file"), default="ground")
    c.add_argument("--init-file", help="CSV with columns r,v (for --init file)")
    c.add_argument("--dr", type=float, default=1 / 200)
    c.add_argument("--t-end", type=float, default=1.0)
    c.add_argument("--frames", type=int, default=5, help="number of output times")
    c.add_argument("--out")
    c.set_defaults(func=cmd_heat)

    c = sub.add_parser("barriers", help="sample a subsolution surface")
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--lambda-frac", type=float, default=0.9)
    c.add_argument("--t", type=float, default=-1.0)
    c.add_argument("--samples", type=int, default=201)
    c.add_argument("--out")
    c.set_defaults(func=cmd_barriers)

    c = sub.add_parser("lambda-theta", help="matching frequency against contact angle")
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--theta-grid", required=True, metavar="A:B:STEP")
    c.add_argument("--out")
    c.set_defaults(func=cmd_lambda_theta)

    def run_flags(c):
        c.add_argument("--dim", type=int)
        c.add_argument("--rho", type=float)
        c.add_argument("--grid", type=int)
        c.add_argument("--cfl", type=float)
        c.add_argument("--stop-sin-theta", type=float)
        c.add_argument("--record-every", type=int)
        c.add_argument("--snapshot-every", type=int)
        c.add_argument("--out")
        c.add_argument("--config", help=f"key=value file (default: ${CONFIG_ENV})")

    c = sub.add_parser("flow", help="run the flow from the constructed initial data")
    run_flags(c)
    c.add_argument("--snapshots", metavar="DIR")
    c.set_defaults(func=cmd_flow)

    c = sub.add_parser("verify", help="run a check suite and report margins")
    c.add_argument("--suite", choices=SUITES + ("all",), required=True)
    c.add_argument("--shape-rho", type=float, help="starting rho of the run used for shape checks")
    run_flags(c)
    c.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, OutOfRangeError) as exc:
        parser.commands[args.command].print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
