"""Rotationally symmetric free-boundary mean curvature flow in the unit ball.

The hypersurface is a graph ``y = u(x, t)`` over the disc ``|x| < x_b(t)``,
where ``x_b^2 + u(x_b)^2 = 1`` and the graph meets the sphere orthogonally,
``u_x(x_b) = u(x_b) / x_b``.  The moving interval is mapped to ``xi = x/x_b``
on a uniform grid of ``M + 1`` nodes, so

    u_t|_xi = u_xx / (1 + u_x^2) + (n-1) u_x / x + xi x_b' u_x.

Interior nodes are advanced by Heun's method; the boundary node then follows
from the discrete orthogonality condition, which is linear in ``u_M`` once the
grid is normalised.  ``x_b'`` is evaluated from each stage's profile: lagging
it by a step feeds back through the boundary closure with gain about
``-tan^2(theta_bar)`` and blows up once the contact angle passes 45 degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .barriers import SigmaSurface, initial_time, sigma_height
from .errors import CFLViolation, InsufficientData, InvariantBreach, OutOfRangeError
from .spectrum import GroundState, solve_lambda0

DEFAULT_CFL = 0.2
DEFAULT_STOP = 0.9
MIN_RADIUS = 0.05
RECORD_EVERY = 100

_STATUS_TEXT = {
    kernels.RUNNING: "running",
    kernels.HIT_STOP_TIME: "stop time",
    kernels.HIT_STOP_HEIGHT: "stop height",
    kernels.HIT_MIN_RADIUS: "minimum radius",
    kernels.LOST_MONOTONICITY: "monotonicity lost",
    kernels.LEFT_BALL: "left the ball",
}


@dataclass
class ProfileState:
    """One time slice: heights ``u`` on ``xi_i = i/M`` scaled by ``x_b``.

    ``xbdot`` caches the boundary velocity implied by the profile.
    """

    n: int
    t: float
    xb: float
    u: np.ndarray
    xbdot: float = 0.0

    @property
    def M(self) -> int:
        return self.u.size - 1

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.M + 1)

    @property
    def x(self) -> np.ndarray:
        return self.xi * self.xb

    @property
    def dx(self) -> float:
        return self.xb / self.M

    def copy(self) -> "ProfileState":
        return ProfileState(self.n, self.t, self.xb, self.u.copy(), self.xbdot)


def state_residuals(state: ProfileState) -> dict:
    """Discrete residuals of the structural invariants of a profile."""
    u, h = state.u, state.dx
    slope_b = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
    slope_0 = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
    d2 = np.diff(u, 2)
    return {
        "sphere": abs(state.xb ** 2 + u[-1] ** 2 - 1.0),
        "orthogonality": abs(slope_b - u[-1] / state.xb),
        "axis_slope": abs(slope_0),
        "monotone": float(np.min(np.diff(u))),
        "convexity": float(np.min(d2)) / max(float(np.max(np.abs(u))), 1e-300),
        "heights": (float(u[0]), float(u[-1])),
    }


def check_state(state: ProfileState, sphere_tol: float = 1e-10,
                slope_tol: float | None = None, convex_tol: float = 1e-6) -> list[str]:
    """Names of violated invariants (empty when the state is valid).

    The slope conditions hold to O(dx^2); ``slope_tol`` defaults to
    ``50 dx^2 max|u_xx|`` with a floor so flat states are not penalised.
    """
    r = state_residuals(state)
    u = state.u
    if slope_tol is None:
        curv = float(np.max(np.abs(np.diff(u, 2)))) / state.dx ** 2
        slope_tol = max(50 * state.dx ** 2 * curv, 1e-12)
    bad = []
    if r["sphere"] > sphere_tol:
        bad.append("sphere")
    if r["orthogonality"] > slope_tol * max(1.0, u[-1] / state.xb):
        bad.append("orthogonality")
    if r["axis_slope"] > slope_tol:
        bad.append("axis_slope")
    if r["monotone"] < 0:
        bad.append("monotone")
    if r["convexity"] < -convex_tol:
        bad.append("convexity")
    if not 0 < u[0] <= u[-1] < 1:
        bad.append("heights")
    return bad


def tangency_angle(rho: float) -> float:
    """Angle of the orthogonal sphere whose cap bottoms out at height ``sin rho``."""
    s = math.sin(rho)
    return math.asin(2 * s / (1 + s * s))


def build_initial_profile(n: int, rho: float, M: int,
                          gs: GroundState | None = None) -> ProfileState:
    """Sample the subsolution surface meeting the sphere at height ``sin rho``.

    The clock starts at 0; ``x_b = cos rho`` and ``u_M = sin rho`` exactly.
    """
    if not 0 < rho <= 0.5:
        raise OutOfRangeError(f"rho={rho} outside (0, 0.5]")
    if M < 50:
        raise OutOfRangeError(f"grid M={M} must be at least 50")
    gs = gs or solve_lambda0(n)
    lam, t0 = initial_time(n, rho, gs)
    s = SigmaSurface(gs, lam, t0)
    xb = math.cos(rho)
    xi = np.linspace(0.0, 1.0, M + 1)
    u = np.empty(M + 1)
    u[:M] = sigma_height(s, xi[:M] * xb)
    u[M] = math.sin(rho)
    return ProfileState(int(n), 0.0, xb, u, kernels.boundary_velocity(u, xb, n))


def interior_velocity(state: ProfileState) -> np.ndarray:
    """``u_t`` at nodes ``0..M-1`` in the moving normalised frame."""
    out = np.empty(state.M)
    kernels.python_impl._flow_rhs(state.u, state.xb, state.n, out)
    return out


def boundary_solve(u_m1: float, u_m2: float, M: int) -> tuple[float, float]:
    """Boundary node from the discrete orthogonality condition.

    ``(3u_M - 4u_{M-1} + u_{M-2}) / (2 dx) = u_M / x_b`` with ``dx = x_b/M``
    is linear in ``u_M``; ``x_b`` then follows from the sphere.
    """
    ub = kernels.closure_height(u_m1, u_m2, M)
    if not u_m1 <= ub < 1.0:
        raise InvariantBreach(f"boundary height {ub} outside [{u_m1}, 1)")
    return ub, math.sqrt(1.0 - ub * ub)


def max_step(state: ProfileState, cfl: float = DEFAULT_CFL) -> float:
    return cfl * state.dx ** 2


def step(state: ProfileState, dt: float, cfl: float = DEFAULT_CFL) -> ProfileState:
    """One Heun step of size ``dt``; returns a new state."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt > max_step(state, cfl) * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.3e} exceeds {max_step(state, cfl):.3e}")
    new = state.copy()
    if dt == 0:
        return new
    t, xb, xbdot, _, status = kernels.flow_advance(
        new.u, new.xb, new.t, new.n, cfl, dt, math.inf, 2.0, 0.0, 1)
    if status in (kernels.LOST_MONOTONICITY, kernels.LEFT_BALL):
        raise InvariantBreach(_STATUS_TEXT[status], state)
    new.t, new.xb, new.xbdot = t, xb, xbdot
    return new


def mean_curvature_profile(state: ProfileState) -> np.ndarray:
    """Mean curvature at every node, positive for a convex cap.

    Interior: central differences.  Axis: ``n u_xx(0)`` from the even
    extension.  Boundary: ``u_x = u_M/x_b`` and a one-sided five-point
    ``u_xx``; the four-point version is too crude near the stop angle and
    makes the boundary node look like a dip in H.
    """
    u, h, n, M = state.u, state.dx, state.n, state.M
    x = state.x
    H = np.empty(M + 1)
    H[0] = n * 2.0 * (u[1] - u[0]) / h ** 2
    ux = (u[2:] - u[:-2]) / (2 * h)
    uxx = (u[2:] - 2 * u[1:-1] + u[:-2]) / h ** 2
    w = np.sqrt(1 + ux * ux)
    H[1:M] = uxx / w ** 3 + (n - 1) * ux / (x[1:M] * w)
    uxb = u[M] / state.xb
    uxxb = (35 * u[M] - 104 * u[M - 1] + 114 * u[M - 2] - 56 * u[M - 3]
            + 11 * u[M - 4]) / (12 * h ** 2)
    wb = math.sqrt(1 + uxb * uxb)
    H[M] = uxxb / wb ** 3 + (n - 1) * uxb / (state.xb * wb)
    return H


def grad_H_dot_X(state: ProfileState, H: np.ndarray | None = None) -> np.ndarray:
    """``grad H . X = H_x (x + u u_x) / (1 + u_x^2)`` along the profile."""
    H = mean_curvature_profile(state) if H is None else H
    x, u = state.x, state.u
    ux = np.gradient(u, x, edge_order=2)
    ux[0] = 0.0
    ux[-1] = u[-1] / state.xb
    Hx = np.gradient(H, x, edge_order=2)
    return Hx * (x + u * ux) / (1 + ux * ux)


TRACE_FIELDS = ("t", "y_min", "y_max", "theta_bar", "H_min", "H_max", "x_b")


@dataclass
class FlowTrace:
    """Per-output records of a run, on the internal clock (start at 0)."""

    n: int
    config: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    argmin_H: list = field(default_factory=list)
    argmax_H: list = field(default_factory=list)
    gradHX: list = field(default_factory=list)
    status: str = "running"
    steps: int = 0
    t_ext: float | None = None

    def append(self, state: ProfileState) -> None:
        H = mean_curvature_profile(state)
        u = state.u
        self.rows.append((state.t, float(u[0]), float(u[-1]), math.asin(u[-1]),
                          float(H.min()), float(H.max()), state.xb))
        self.argmin_H.append(int(np.argmin(H)))
        self.argmax_H.append(int(np.argmax(H)))
        self.gradHX.append(float(np.min(grad_H_dot_X(state, H)) / H.max()))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[TRACE_FIELDS.index(name)] for r in self.rows])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, len(TRACE_FIELDS))


def run(n: int, rho: float, M: int = 400, cfl: float = DEFAULT_CFL,
        stop_sin_theta: float = DEFAULT_STOP, record_every: int = RECORD_EVERY,
        snapshot_every: int | None = None, snapshot_times=(),
        t_end: float = math.inf, xb_min: float = MIN_RADIUS,
        max_steps: int = 10 ** 8, gs: GroundState | None = None,
        state: ProfileState | None = None, final_snapshot: bool = True):
    """Integrate from the initial profile until a stop rule fires.

    Stops when ``u_M >= stop_sin_theta``, ``x_b < xb_min``, ``t`` reaches
    ``t_end`` or ``max_steps`` is used up.  A trace row is written every
    ``record_every`` steps; a snapshot every ``snapshot_every`` rows and at
    each of ``snapshot_times`` (landed on exactly).  The initial state is
    always the first row and first snapshot, and the final state the last
    snapshot unless ``final_snapshot`` is false.  Returns ``(trace, snapshots)``.
    Raises InvariantBreach carrying the last recorded state if the profile
    stops being a monotone graph inside the ball.
    """
    if not 0 < cfl <= 0.5:
        raise OutOfRangeError(f"cfl={cfl} outside (0, 0.5]")
    if not 0 < stop_sin_theta < 1:
        raise OutOfRangeError(f"stop_sin_theta={stop_sin_theta} outside (0, 1)")
    if record_every < 1:
        raise OutOfRangeError("record_every must be positive")
    gs = gs or solve_lambda0(n)
    state = state.copy() if state is not None else build_initial_profile(n, rho, M, gs)
    trace = FlowTrace(int(n), config=dict(n=n, rho=rho, M=state.M, cfl=cfl,
                                          stop_sin_theta=stop_sin_theta,
                                          record_every=record_every,
                                          implementation=kernels.IMPLEMENTATION))
    trace.append(state)
    snapshots = [state.copy()]
    pending = sorted(s for s in snapshot_times if s > state.t)
    u = state.u
    t, xb = state.t, state.xb
    last = state.copy()
    total = 0
    while True:
        target = min(pending[0], t_end) if pending else t_end
        chunk = min(record_every, max_steps - total)
        if chunk <= 0:
            trace.status = "step budget"
            break
        t, xb, xbdot, k, status = kernels.flow_advance(
            u, xb, t, int(n), cfl, 0.0, target, stop_sin_theta, xb_min, chunk)
        total += k
        if status in (kernels.LOST_MONOTONICITY, kernels.LEFT_BALL):
            trace.status = _STATUS_TEXT[status]
            trace.steps = total
            err = InvariantBreach(f"{_STATUS_TEXT[status]} at t={t:.6g}", last)
            err.trace = trace
            raise err
        cur = ProfileState(int(n), t, xb, u, xbdot)
        if k > 0:
            trace.append(cur)
            last = cur.copy()
            if snapshot_every and (len(trace) - 1) % snapshot_every == 0:
                snapshots.append(last.copy())
        if status == kernels.HIT_STOP_TIME and pending and t >= pending[0]:
            if not snapshots or snapshots[-1].t != t:
                snapshots.append(cur.copy())
            pending.pop(0)
            if t < t_end:
                continue
        if status != kernels.RUNNING:
            trace.status = _STATUS_TEXT[status]
            break
    trace.steps = total
    if final_snapshot and snapshots[-1].t != last.t:
        snapshots.append(last)
    return trace, snapshots


def estimate_extinction(trace: FlowTrace, window: float = 0.1) -> float:
    """Time at which ``sin(theta_bar)`` would reach one.

    A line ``log sin(theta_bar) = a + k t`` is fitted by least squares to
    the last ``window`` fraction (in time) of the trace and extrapolated to
    zero.  The slope is left free: the boundary height grows at least like
    ``e^{nt}`` and faster near the end, so pinning ``k = n`` would place the
    extinction time too late.  A pure exponential ``e^{n(t-c)}`` returns ``c``.
    """
    if len(trace) < 3:
        raise InsufficientData("trace needs at least three rows")
    t = trace.t
    s = trace.column("y_max")
    if s[-1] < 0.5:
        raise InsufficientData(f"trace ends at sin(theta_bar)={s[-1]:.3g} < 0.5")
    sel = t >= t[-1] - window * (t[-1] - t[0])
    if np.count_nonzero(sel) < 3:
        sel = np.zeros(t.size, bool)
        sel[-3:] = True
    k, a = np.polyfit(t[sel], np.log(s[sel]), 1)
    t_ext = float(-a / k)
    trace.t_ext = t_ext
    return t_ext
