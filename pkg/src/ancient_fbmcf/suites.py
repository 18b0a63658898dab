"""Named groups of checks run by ``ancient-fbmcf verify``.

Each suite takes a :class:`~ancient_fbmcf.cli.RunConfig`-like object and a
:class:`RunCache` and returns a list of :class:`EstimateReport`.  Flow runs
are cached by their parameters so that ``all`` integrates each run once.
"""
from __future__ import annotations

import math

import numpy as np

from . import barriers as br
from . import diagnostics as dg
from . import heat_liouville as hl
from . import spectrum as sp
from .diagnostics import EstimateReport
from .errors import InsufficientData, NoOverlap, OutOfRangeError
from .flow_solver import run as run_flow

VERIFY_SNAPSHOT_EVERY = 10
SUITES = ("spectrum", "heat", "barriers", "flow", "asymptotics", "uniqueness")


def _static(name, margin, tol, informational=False, **detail) -> EstimateReport:
    return EstimateReport(name, float(margin), math.nan, float(tol), informational, detail)


def _interval_margin(value, lo, hi) -> float:
    return min(value - lo, hi - value)


class RunCache:
    """Flow runs and ground states keyed by their defining parameters."""

    def __init__(self):
        self._runs = {}
        self._gs = {}

    def ground_state(self, n: int) -> sp.GroundState:
        if n not in self._gs:
            self._gs[n] = sp.solve_lambda0(n)
        return self._gs[n]

    def flow(self, cfg, rho: float | None = None):
        rho = cfg.rho if rho is None else rho
        every = cfg.snapshot_every or VERIFY_SNAPSHOT_EVERY
        key = (cfg.dim, rho, cfg.grid, cfg.cfl, cfg.stop_sin_theta, cfg.record_every, every)
        if key not in self._runs:
            self._runs[key] = run_flow(cfg.dim, rho, M=cfg.grid, cfl=cfg.cfl,
                                       stop_sin_theta=cfg.stop_sin_theta,
                                       record_every=cfg.record_every, snapshot_every=every,
                                       gs=self.ground_state(cfg.dim))
        return self._runs[key]


def spectrum_suite(cfg, cache: RunCache) -> list[EstimateReport]:
    n = cfg.dim
    gs = cache.ground_state(n)
    lam = gs.lambda0
    val, der = sp.phi0_eval(gs, lam)
    rho = np.linspace(1e-3, 10.0, 2001)
    phi, _ = sp.phi0_eval(gs, rho)
    ode = float(np.max(np.abs(sp.ode_residual(gs, rho)) / phi))
    grid = np.linspace(0.0, 10.0, 2001)
    Phi, Phi2 = sp.phi_ratios(gs, grid)
    return [
        _static("robin_condition_at_lambda0", -abs(lam * der - val), 1e-10, lambda0=lam),
        _static("lambda0_above_one", lam - 1.0, 0.0),
        _static("ground_state_ode_residual", -ode, 1e-10),
        _static("log_derivative_increasing", float(np.min(np.diff(Phi))), 0.0),
        _static("log_derivative_limit", -abs(Phi[-1] - 1.0), 1e-4, informational=n != 1),
        _static("ratio_decreasing", float(np.min(-np.diff(Phi2[1:]))), 0.0),
        _static("ratio_axis_value", -abs(Phi2[0] - 1.0 / n), 1e-14),
    ]


def heat_suite(cfg, cache: RunCache) -> list[EstimateReport]:
    n = cfg.dim
    gs = cache.ground_state(n)
    out = []
    ground = hl.find_eigenvalues(n, 0, -25.0, 0.0)
    out.append(_static("negative_eigenvalues_degree_0", -abs(len(ground) - 1), 0.0))
    if ground:
        out.append(_static("ground_eigenvalue", -abs(ground[0].mu - gs.mu0), 1e-5,
                           mu=ground[0].mu))
    for ell in (1, 2, 3):
        found = hl.find_eigenvalues(n, ell, -25.0, 0.0)
        out.append(_static(f"negative_eigenvalues_degree_{ell}", -len(found), 0.0))
    out.append(_static("null_mode_degree_1", -abs(hl.shoot_residual(n, 1, 0.0)), 1e-8))
    coarse = hl.eigenmode_error(gs, 1 / 100)
    fine = hl.eigenmode_error(gs, 1 / 200)
    out.append(_static("heat_eigenmode_error", -fine, 1e-3))
    out.append(_static("heat_convergence_ratio", _interval_margin(coarse / fine, 3.4, 4.6), 0.0,
                       ratio=coarse / fine))
    out.append(_static("liouville_constant_data",
                       -hl.liouville_residual(gs, lambda r: np.ones_like(r)), 1e-3))
    return out


def barriers_suite(cfg, cache: RunCache) -> list[EstimateReport]:
    n = cfg.dim
    gs = cache.ground_state(n)
    out = []
    worst = math.inf
    for frac in (0.5, 0.9):
        for t in (-2.0, -1.0):
            s = br.SigmaSurface(gs, frac * gs.lambda0, t)
            worst = min(worst, br.verify_subsolution(s, br.sigma_grid(s, 201)))
    out.append(_static("subsolution_margin", worst, 1e-10))
    t_grid = np.linspace(-3.0, -0.05, 60)
    for kind in (br.LOWER, br.UPPER):
        rep = br.verify_sphere_schedule(n, kind, t_grid)
        out.append(EstimateReport(f"sphere_schedule_{kind}", rep.worst_margin, rep.t_worst, 1e-6))
    lam, t0 = br.initial_time(n, cfg.rho, gs)
    s = br.SigmaSurface(gs, lam, t0)
    x = np.linspace(0.0, br.ball_intersection(s), 401)
    dHX, glog = br.gradient_conditions(s, x)
    out.append(_static("initial_radial_curvature_gradient", dHX, 1e-12))
    out.append(_static("initial_log_curvature_gradient", 1.05 - glog, 0.0, value=glog))
    thetas = np.linspace(1e-3, math.pi / 2 - 1e-3, 50)
    lams = np.array([br.solve_lambda_theta(n, th, gs) for th in thetas])
    # the disc case overshoots lambda0 at small angles
    out.append(_static("matching_frequency_below_lambda0", float(np.min(gs.lambda0 - lams)), 0.0,
                       informational=n == 1))
    out.append(_static("matching_frequency_small_angle", -abs(lams[0] - gs.lambda0), 1e-3))
    out.append(_static("matching_frequency_right_angle", -abs(lams[-1] - math.pi / 2), 1e-3))
    return out


def flow_suite(cfg, cache: RunCache) -> list[EstimateReport]:
    trace, snaps = cache.flow(cfg)
    out = dg.check_crude_estimates(trace, tol=cfg.crude_tol)
    out.append(dg.check_extremal_nodes(trace))
    out.append(dg.check_radial_monotone_curvature(trace, tol=cfg.gradient_tol))
    out.append(dg.barrier_containment(snaps, cfg.dim, tol=cfg.containment_tol))
    y0, ys = trace.column("y_min"), trace.column("y_max")
    out.append(dg._report("heights_increasing", np.minimum(np.diff(y0), np.diff(ys)),
                          dg._clock(trace, None)[1:], 0.0))
    try:
        out.append(dg.check_gradient_bound(snaps, trace))
    except InsufficientData:
        pass
    return out


def asymptotics_suite(cfg, cache: RunCache) -> list[EstimateReport]:
    """Height asymptotics on the configured run; profile shape on the run
    started at ``cfg.shape_rho``, whose early window is flatter."""
    gs = cache.ground_state(cfg.dim)
    trace, _ = cache.flow(cfg)
    out = dg.check_height_asymptotics(trace, gs, tol=cfg.asymptotic_tol, drift=cfg.drift_tol)
    _, snaps = cache.flow(cfg, cfg.shape_rho)
    early = dg.early_snapshots(snaps)
    if early:
        errs = np.array([dg.shape_error(s, gs) for s in early])
        times = np.array([s.t for s in early])
        out.append(dg._report("shape_error_early", -errs, times, cfg.asymptotic_tol,
                              detail={"rho": cfg.shape_rho}))
        if len(errs) > 1:
            out.append(dg._report("shape_error_grows_forward", np.diff(errs), times[1:], 0.0))
    flat = [s for s in snaps if s.u[-1] <= dg.SHAPE_REGIME]
    if flat:
        errs = [dg.shape_error(s, gs) for s in flat]
        out.append(dg._report("shape_error_flat_regime", -np.array(errs), [s.t for s in flat],
                              cfg.asymptotic_tol, informational=True))
    return out


def uniqueness_suite(cfg, cache: RunCache) -> list[EstimateReport]:
    small = cfg.rho / 2
    ta, sa = cache.flow(cfg)
    tb, sb = cache.flow(cfg, small)
    try:
        near = dg.compare_runs(ta, sa, tb, sb, height=cfg.align_height, tol=cfg.uniqueness_tol)
    except NoOverlap as exc:
        return [_static("uniqueness_distance", -math.inf, cfg.uniqueness_tol, reason=str(exc))]
    out = [near]
    big = 2 * cfg.rho
    if big <= 0.5:
        tc, sc = cache.flow(cfg, big)
        try:
            far = dg.compare_runs(tc, sc, tb, sb, height=cfg.align_height, tol=cfg.uniqueness_tol)
        except (NoOverlap, OutOfRangeError):
            return out
        out.append(EstimateReport("uniqueness_distance_wide", far.worst_margin, far.time,
                                  far.tolerance, detail=far.detail))
        out.append(_static("uniqueness_improves_with_rho", near.worst_margin - far.worst_margin,
                           0.0))
    return out


RUNNERS = {
    "spectrum": spectrum_suite,
    "heat": heat_suite,
    "barriers": barriers_suite,
    "flow": flow_suite,
    "asymptotics": asymptotics_suite,
    "uniqueness": uniqueness_suite,
}


def run_suite(name: str, cfg, cache: RunCache | None = None) -> list[EstimateReport]:
    cache = cache or RunCache()
    names = SUITES if name == "all" else (name,)
    out = []
    for suite in names:
        out.extend(RUNNERS[suite](cfg, cache))
    return out
