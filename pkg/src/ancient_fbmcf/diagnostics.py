"""Pass/fail checks of curvature, height and comparison estimates on flow runs.

Every check returns an :class:`EstimateReport` whose ``worst_margin`` is the
slack of the underlying inequality (positive when it holds strictly) and
which passes when that slack is at least ``-tolerance``.  Checks on a trace
report times on the extinction-aligned clock, ``t - t_ext``; checks on
snapshots alone use the run clock.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barriers import SphereBarrier
from .errors import InsufficientData, NoOverlap, OutOfRangeError
from .flow_solver import FlowTrace, ProfileState, estimate_extinction, mean_curvature_profile
from .spectrum import GroundState, phi0_eval

CRUDE_TOL = 1e-3
ASYMPTOTIC_TOL = 5e-3
DRIFT_TOL = 1e-6
UNIQUENESS_TOL = 1e-2
CONTAINMENT_TOL = 1e-4
GRADIENT_TOL = 1e-6
SHAPE_REGIME = 0.1
ALIGN_HEIGHT = 0.01


@dataclass(frozen=True)
class EstimateReport:
    name: str
    worst_margin: float
    time: float
    tolerance: float
    informational: bool = False
    detail: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return bool(self.worst_margin >= -self.tolerance)

    def row(self) -> tuple:
        return (self.name, self.worst_margin, self.time, self.tolerance, self.passed)


def _report(name, margins, times, tol, **kw) -> EstimateReport:
    margins = np.asarray(margins, float)
    i = int(np.argmin(margins))
    return EstimateReport(name, float(margins[i]), float(times[i]), tol, **kw)


def _clock(trace: FlowTrace, t_ext: float | None) -> np.ndarray:
    if t_ext is None:
        t_ext = trace.t_ext if trace.t_ext is not None else estimate_extinction(trace)
    return trace.t - t_ext


def _need(trace: FlowTrace, rows: int = 3):
    if len(trace) < rows:
        raise InsufficientData(f"trace has {len(trace)} rows, need {rows}")


def aligned(trace: FlowTrace, t_ext: float | None = None) -> FlowTrace:
    """Copy of ``trace`` on the clock that puts extinction at zero."""
    shift = _clock(trace, t_ext)[0] - trace.t[0]
    out = FlowTrace(trace.n, dict(trace.config), [(r[0] + shift,) + tuple(r[1:]) for r in trace.rows],
                    list(trace.argmin_H), list(trace.argmax_H), list(trace.gradHX),
                    trace.status, trace.steps)
    return out


def check_crude_estimates(trace: FlowTrace, t_ext: float | None = None,
                          tol: float = CRUDE_TOL) -> list[EstimateReport]:
    """Curvature pinching around ``n tan theta_bar``, exponential boundary
    height bound and the two-sided axis height bound (relative margins)."""
    _need(trace)
    n = trace.n
    t = _clock(trace, t_ext)
    th = trace.column("theta_bar")
    s = trace.column("y_max")
    y = trace.column("y_min")
    sphere = n * np.tan(th)
    m_a = np.minimum((sphere - trace.column("H_min")) / sphere,
                     (trace.column("H_max") - sphere) / sphere)
    m_b = 1.0 - s * np.exp(-n * t)
    lower = s / (1 + np.cos(th))
    m_c = np.minimum((y - lower) / s, (s - y) / s)
    return [
        _report("curvature_pinching", m_a, t, tol),
        _report("boundary_height_bound", m_b, t, tol),
        _report("axis_height_bounds", m_c, t, tol),
    ]


def rescaled_height(trace: FlowTrace, gs: GroundState, t_ext: float | None = None) -> np.ndarray:
    """``exp(-lambda0^2 (t - t_ext)) * y_min``."""
    return np.exp(-gs.lambda0 ** 2 * _clock(trace, t_ext)) * trace.column("y_min")


def check_height_asymptotics(trace: FlowTrace, gs: GroundState, t_ext: float | None = None,
                             tol: float = ASYMPTOTIC_TOL,
                             drift: float = DRIFT_TOL) -> list[EstimateReport]:
    """Speed-to-height ratio, monotone and settling rescaled height, and the
    exponential bound on ``H_min/y_min - lambda0^2``.

    The bound ``H_min/y_min - lambda0^2 <= C e^{2n(t - t_ext)}`` is checked
    for uniformity: the constant needed on the later two thirds of the run
    must also cover the earliest third.  A least-squares value of ``C`` and
    its relative residual are reported for information only; the excess is
    bounded by, not proportional to, the exponential.
    """
    _need(trace, 6)
    t = _clock(trace, t_ext)
    l2 = gs.lambda0 ** 2
    y = trace.column("y_min")
    ratio = trace.column("H_min") / y
    A = rescaled_height(trace, gs, t_ext)
    reports = [_report("curvature_height_ratio", ratio / l2 - 1.0, t, tol)]
    dA = np.diff(A) / A[0]
    reports.append(_report("rescaled_height_monotone", dA, t[1:], drift))
    third = max(2, len(A) // 3)
    tv = float(np.sum(np.abs(np.diff(A[:third]))))
    reports.append(EstimateReport("rescaled_height_settled", -tv / A[0], float(t[0]), tol,
                                  detail={"A_first": float(A[0]),
                                          "A_end_of_first_third": float(A[third - 1])}))
    excess = ratio - l2
    basis = np.exp(2 * trace.n * t)
    C_late = float(np.max(excess[third:] / basis[third:]))
    if C_late > 0:
        early = 1.0 - excess[:third] / basis[:third] / C_late
    else:
        early = np.full(third, C_late)
    reports.append(_report("curvature_excess_bound", early, t[:third], tol, detail={"C": C_late}))
    C = float(np.dot(excess, basis) / np.dot(basis, basis))
    resid = float(np.sqrt(np.mean((excess - C * basis) ** 2)) / max(np.max(np.abs(excess)), 1e-300))
    reports.append(EstimateReport("curvature_excess_fit", -resid, float(t[-1]), tol,
                                  informational=True,
                                  detail={"C": C, "relative_residual": resid}))
    return reports


def check_extremal_nodes(trace: FlowTrace, t_ext: float | None = None) -> EstimateReport:
    """Minimum of H on the axis node and maximum on the boundary node."""
    M = trace.config.get("M")
    if M is None:
        raise InsufficientData("trace does not record its grid size")
    bad = [i for i, (a, b) in enumerate(zip(trace.argmin_H, trace.argmax_H)) if a != 0 or b != M]
    t = _clock(trace, t_ext)
    return EstimateReport("curvature_extremes_at_ends", -float(len(bad)),
                          float(t[bad[0]]) if bad else float(t[0]), 0.0)


def check_radial_monotone_curvature(trace: FlowTrace, t_ext: float | None = None,
                                    tol: float = GRADIENT_TOL) -> EstimateReport:
    """``grad H . X >= 0`` relative to ``max H`` at every recorded time."""
    return _report("curvature_increases_outward", trace.gradHX, _clock(trace, t_ext), tol)


def check_gradient_bound(snapshots, trace: FlowTrace, factor: float = 4.0) -> EstimateReport:
    """``|grad H| <= factor * H`` on snapshots from the first third of the run.

    Informational: the bound is only claimed for sufficiently early times.
    """
    t0, t1 = trace.t[0], trace.t[-1]
    cut = t0 + (t1 - t0) / 3
    margins, times = [], []
    for s in snapshots:
        if s.t > cut:
            continue
        H = mean_curvature_profile(s)
        ux = np.gradient(s.u, s.x, edge_order=2)
        Hs = np.gradient(H, s.x, edge_order=2) / np.sqrt(1 + ux * ux)
        margins.append(float(np.min(factor - np.abs(Hs) / H)))
        times.append(s.t)
    if not margins:
        raise InsufficientData("no snapshot in the first third of the run")
    return _report("gradient_bound_early", margins, times, 0.0, informational=True)


def shape_error(snapshot: ProfileState, gs: GroundState, regime: float = SHAPE_REGIME) -> float:
    """``max |u(x)/u(0) - phi0(lambda0 x)|`` over the grid of a nearly flat slice."""
    if snapshot.u[-1] > regime:
        raise OutOfRangeError(f"boundary height {snapshot.u[-1]:.3g} exceeds {regime}")
    ref, _ = phi0_eval(gs, gs.lambda0 * snapshot.x)
    return float(np.max(np.abs(snapshot.u / snapshot.u[0] - ref)))


def early_snapshots(snapshots, fraction: float = 1 / 3, regime: float = SHAPE_REGIME):
    """Snapshots in the first ``fraction`` of the run that are still nearly flat."""
    t0, t1 = snapshots[0].t, snapshots[-1].t
    cut = t0 + fraction * (t1 - t0)
    return [s for s in snapshots if s.t <= cut and s.u[-1] <= regime]


def _time_at_height(trace: FlowTrace, h: float) -> float:
    y = trace.column("y_min")
    if not y[0] <= h <= y[-1]:
        raise NoOverlap(f"height {h} outside the run's range [{y[0]:.4g}, {y[-1]:.4g}]")
    return float(np.interp(h, y, trace.t))


def _profile_at(snapshots, t: float):
    """``(x, u)`` at time ``t``, linear in time between bracketing snapshots.

    Snapshots of one run share the normalised grid, so heights and the disc
    radius are interpolated node by node.  Returns None outside the run.
    """
    times = np.array([s.t for s in snapshots])
    if not times[0] - 1e-12 <= t <= times[-1] + 1e-12:
        return None
    j = int(np.clip(np.searchsorted(times, t), 1, len(times) - 1))
    a, b = snapshots[j - 1], snapshots[j]
    w = min(max((t - a.t) / (b.t - a.t), 0.0), 1.0)
    xb = (1 - w) * a.xb + w * b.xb
    return a.xi * xb, (1 - w) * a.u + w * b.u


def compare_runs(trace_a: FlowTrace, snaps_a, trace_b: FlowTrace, snaps_b,
                 height: float = ALIGN_HEIGHT, tol: float = UNIQUENESS_TOL,
                 samples: int = 201) -> EstimateReport:
    """Sup distance between two runs after a time shift matching ``y_min``.

    The runs are aligned where both axis heights equal ``height``; if
    either run starts above it, the lowest common height is used instead
    and recorded in ``detail``.  Distances are taken at run A's snapshot
    times on ``samples`` points of the smaller disc.
    """
    if trace_a.n != trace_b.n:
        raise ValueError("runs have different dimensions")
    y0 = max(trace_a.column("y_min")[0], trace_b.column("y_min")[0])
    h = max(height, y0)
    shift = _time_at_height(trace_b, h) - _time_at_height(trace_a, h)
    dists, times = [], []
    for s in snaps_a:
        other = _profile_at(snaps_b, s.t + shift)
        if other is None:
            continue
        xo, uo = other
        x = np.linspace(0.0, min(s.xb, xo[-1]), samples)
        dists.append(float(np.max(np.abs(np.interp(x, s.x, s.u) - np.interp(x, xo, uo)))))
        times.append(s.t)
    if not dists:
        raise NoOverlap("aligned snapshot windows are disjoint")
    i = int(np.argmax(dists))
    return EstimateReport("uniqueness_distance", -dists[i], times[i], tol,
                          detail={"height": h, "shift": shift, "samples": len(dists)})


def barrier_containment(snapshots, n: int, tol: float = CONTAINMENT_TOL,
                        shift_upper: float = 0.0, shift_lower: float = 0.0) -> EstimateReport:
    """Vertical margins against the scheduled spheres anchored on the first slice.

    The upper sphere starts tangent to the horizontal plane through the
    first boundary point and rises on ``sin theta = sin theta_0 e^{2n(t-t_0)}``;
    the lower one starts through the boundary point and rises on
    ``sin theta = sin theta_0 e^{n(t-t_0)}``.  ``shift_*`` move the anchor
    times, for testing that a wrong anchor is caught.
    """
    first = snapshots[0]
    ub = first.u[-1]
    s_up = 2 * ub / (1 + ub * ub)
    s_lo = ub
    margins, times = [], []
    for s in snapshots:
        x, u = s.x, s.u
        dt = s.t - first.t
        m = math.inf
        a = s_up * math.exp(2 * n * (dt + shift_upper))
        if a < 1:
            sph = SphereBarrier(math.asin(a), n)
            inside = x <= sph.radius
            m = min(m, float(np.min(sph.cap_height(x[inside]) - u[inside])))
        b = s_lo * math.exp(n * (dt + shift_lower))
        if b < 1:
            sph = SphereBarrier(math.asin(b), n)
            inside = x <= sph.radius
            if np.any(inside):
                m = min(m, float(np.min(u[inside] - sph.cap_height(x[inside]))))
        if math.isfinite(m):
            margins.append(m)
            times.append(s.t)
    if not margins:
        raise InsufficientData("no snapshot while a scheduled sphere is defined")
    return _report("sphere_containment", margins, times, tol)
