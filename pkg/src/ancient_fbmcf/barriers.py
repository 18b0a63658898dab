"""Barrier families for free-boundary mean curvature flow in the unit ball.

Two families are provided, both rotationally symmetric about the vertical
axis and described through their profile curves in the (x, y) half-plane:

* orthogonal spheres ``S_theta``: ``|x|^2 + (csc theta - y)^2 = cot^2 theta``,
  moved by the schedules ``arcsin e^{nt}`` (lower) and ``arcsin e^{2nt}``
  (upper);
* the subsolutions ``Sigma^lam_t``: ``sin(lam y) = e^{lam^2 t} phi0(lam |x|)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import NoConvergenceError, OutOfRangeError
from .spectrum import GroundState, phi0_eval, phi2_derivative, phi_ratios, solve_lambda0

LOWER = "lower"
UPPER = "upper"
_DELTA = 1e-8


# -- orthogonal spheres ------------------------------------------------------

@dataclass(frozen=True)
class SphereBarrier:
    theta: float
    n: int = 1

    def __post_init__(self):
        if not 0 < self.theta < math.pi / 2:
            raise OutOfRangeError(f"theta={self.theta} outside (0, pi/2)")

    @property
    def center_height(self) -> float:
        return 1.0 / math.sin(self.theta)

    @property
    def radius(self) -> float:
        return 1.0 / math.tan(self.theta)

    @property
    def mean_curvature(self) -> float:
        return self.n * math.tan(self.theta)

    @property
    def boundary_point(self) -> tuple[float, float]:
        return math.cos(self.theta), math.sin(self.theta)

    def cap_height(self, x):
        """Height of the lower cap over ``|x| <= cot theta``."""
        x = np.asarray(x, float)
        return self.center_height - np.sqrt(np.maximum(self.radius ** 2 - x * x, 0.0))

    def signed_distance(self, x, y):
        """Positive outside the sphere."""
        return np.hypot(x, self.center_height - np.asarray(y, float)) - self.radius

    def sample(self, k: int = 33):
        """``k`` points of the cap inside the unit ball, axis to boundary."""
        x = np.linspace(0.0, math.cos(self.theta), k)
        return x, self.cap_height(x)


def barrier_schedule(t, kind: str, n: int = 1) -> float:
    """``arcsin e^{nt}`` (lower) or ``arcsin e^{2nt}`` (upper), for ``t < 0``."""
    if not t < 0:
        raise OutOfRangeError(f"schedule needs t < 0, got {t}")
    if kind == LOWER:
        return math.asin(math.exp(n * t))
    if kind == UPPER:
        return math.asin(math.exp(2 * n * t))
    raise ValueError(f"kind must be 'lower' or 'upper', got {kind!r}")


class ScheduleReport(NamedTuple):
    worst_margin: float
    t_worst: float
    margins: list


def schedule_speed(n: int, kind: str, t: float, x) -> np.ndarray:
    """Rate of change of the signed distance to the scheduled sphere, at the
    cap points over ``x``.

    With ``theta' = k n tan theta`` (``k = 1`` lower, ``2`` upper) this is
    ``theta' (1 + x^2) / (1 + cos theta sqrt(1 - x^2 tan^2 theta))``, the
    cancellation-free form of ``theta' (1 + cos theta nu_y) / sin^2 theta``.
    """
    th = barrier_schedule(t, kind, n)
    x = np.asarray(x, float)
    k = 1 if kind == LOWER else 2
    tn = math.tan(th)
    root = np.sqrt(np.maximum(1.0 - (x * tn) ** 2, 0.0))
    return k * n * tn * (1.0 + x * x) / (1.0 + math.cos(th) * root)


def schedule_margins(n: int, kind: str, t: float, x) -> np.ndarray:
    """Comparison margins of the scheduled sphere at the cap points over ``x``.

    Lower spheres need ``H - speed >= 0``, upper spheres ``speed - H >= 0``,
    with the speed from :func:`schedule_speed`.
    """
    speed = schedule_speed(n, kind, t, x)
    H = SphereBarrier(barrier_schedule(t, kind, n), n).mean_curvature
    return H - speed if kind == LOWER else speed - H


def verify_sphere_schedule(n: int, kind: str, t_grid, samples: int = 33) -> ScheduleReport:
    worst, t_worst, margins = math.inf, math.nan, []
    for t in t_grid:
        th = barrier_schedule(t, kind, n)
        x = np.linspace(0.0, math.cos(th), samples)
        m = float(np.min(schedule_margins(n, kind, t, x)))
        margins.append(m)
        if m < worst:
            worst, t_worst = m, t
    return ScheduleReport(worst, t_worst, margins)


# -- Sigma^lambda_t ------------------------------------------------------------

@dataclass(frozen=True)
class SigmaSurface:
    gs: GroundState
    lam: float
    t: float

    @property
    def n(self) -> int:
        return self.gs.n

    def _arg(self, x):
        x = np.asarray(x, float)
        val, _ = phi0_eval(self.gs, self.lam * x)
        a = math.exp(self.lam ** 2 * self.t) * np.asarray(val)
        if np.any(a >= 1.0):
            raise OutOfRangeError("surface is vertical or absent at this x")
        return a


class SigmaGeometry(NamedTuple):
    theta: np.ndarray
    kappa: np.ndarray
    kappa_hat: np.ndarray
    H: np.ndarray
    speed: np.ndarray


def sigma_height(s: SigmaSurface, x):
    """``y = arcsin(e^{lam^2 t} phi0(lam x)) / lam``."""
    out = np.arcsin(s._arg(x)) / s.lam
    return float(out) if np.ndim(out) == 0 else out


def sigma_geometry(s: SigmaSurface, x) -> SigmaGeometry:
    """Turning angle, principal curvatures, mean curvature and normal speed.

    With ``T = tan(lam y)`` and ``Phi2 = phi0'/(rho phi0)`` at ``rho = lam x``:
    ``tan theta = T Phi``, ``kappa = lam T cos(theta)(1 - (n-1) Phi2 cos^2)``,
    ``kappa_hat = lam T cos(theta) Phi2`` and
    ``H = lam T cos(theta)(1 + (n-1) Phi2 sin^2)``.  The axis needs no special
    case because ``Phi2(0) = 1/n`` is summed directly.
    """
    lam, n = s.lam, s.n
    a = s._arg(x)
    T = a / np.sqrt(1.0 - a * a)
    Phi, Phi2 = phi_ratios(s.gs, lam * np.asarray(x, float))
    theta = np.arctan(T * Phi)
    c, sn = np.cos(theta), np.sin(theta)
    speed = lam * T * c
    kappa = speed * (1.0 - (n - 1) * Phi2 * c * c)
    kappa_hat = speed * Phi2
    H = speed * (1.0 + (n - 1) * sn * sn * Phi2)
    return SigmaGeometry(theta, kappa, kappa_hat, H, speed)


def verify_subsolution(s: SigmaSurface, x_grid) -> float:
    """Worst ``H - speed`` over the grid (non-negative for a subsolution)."""
    g = sigma_geometry(s, x_grid)
    return float(np.min(g.H - g.speed))


def sigma_arclength_derivatives(s: SigmaSurface, x):
    """``(kappa_s, kappa_hat_s, H_s)`` from the closed forms along the profile."""
    lam, n = s.lam, s.n
    x = np.asarray(x, float)
    g = sigma_geometry(s, x)
    a = s._arg(x)
    T = a / np.sqrt(1.0 - a * a)
    _, Phi2 = phi_ratios(s.gs, lam * x)
    dPhi2 = phi2_derivative(s.gs, lam * x)
    c, sn = np.cos(g.theta), np.sin(g.theta)
    B = 1.0 - (n - 1) * c * c * Phi2
    kappa_s = ((lam ** 2 * (1 + T * T) * c * sn - lam * T * sn * g.kappa) * B
               + (n - 1) * lam * T * c * (2 * c * sn * Phi2 * g.kappa - lam * c ** 3 * dPhi2))
    with np.errstate(divide="ignore", invalid="ignore"):
        khat_s = np.where(x > 0, c / np.where(x > 0, x, 1.0) * (g.kappa - g.kappa_hat), 0.0)
    H_s = kappa_s + (n - 1) * khat_s
    return kappa_s, khat_s, H_s


def gradient_conditions(s: SigmaSurface, x_grid):
    """``(min grad H . X, max |grad log H|)`` over the grid.

    On a rotation hypersurface ``|grad H| = |H_s|`` and
    ``grad H . X = H_s (x cos theta + y sin theta)``.
    """
    x = np.asarray(x_grid, float)
    g = sigma_geometry(s, x)
    y = sigma_height(s, x)
    _, _, H_s = sigma_arclength_derivatives(s, x)
    dHX = H_s * (x * np.cos(g.theta) + y * np.sin(g.theta))
    return float(np.min(dHX)), float(np.max(np.abs(H_s) / g.H))


def vertical_point(s: SigmaSurface, x_cap: float = 1.0) -> float:
    """x where the profile turns vertical, or ``x_cap`` if that lies beyond it."""
    def arg_minus_one(x):
        v, _ = phi0_eval(s.gs, s.lam * x)
        return math.exp(s.lam ** 2 * s.t) * v - 1.0
    if arg_minus_one(0.0) >= 0:
        raise OutOfRangeError("surface has no graphical part (t >= 0?)")
    if arg_minus_one(x_cap) < 0:
        return x_cap
    return brentq(arg_minus_one, 0.0, x_cap, xtol=1e-15)


def sigma_grid(s: SigmaSurface, k: int, x_cap: float = 1.0, margin: float = 1e-3):
    """``k`` points from the axis to just short of ``min(x_cap, vertical point)``."""
    return np.linspace(0.0, vertical_point(s, x_cap) * (1 - margin), k)


def ball_intersection(s: SigmaSurface) -> float:
    """x-coordinate where the profile meets the unit circle."""
    hi = vertical_point(s)
    if hi < 1.0:
        hi *= 1 - 1e-12

    def f(x):
        return x * x + sigma_height(s, x) ** 2 - 1.0
    if f(0.0) >= 0:
        raise OutOfRangeError("surface lies outside the unit ball on the axis")
    if f(hi) < 0:
        raise OutOfRangeError("surface turns vertical inside the ball")
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=1e-15)


# -- matching frequency and initial data -----------------------------------------

def _matching(gs: GroundState, theta: float):
    c, sn = math.cos(theta), math.sin(theta)

    def f(lam):
        Phi, _ = phi_ratios(gs, lam * c)
        return Phi * c - sn / math.tan(lam * sn)
    return f


def solve_lambda_theta(n: int, theta: float, gs: GroundState | None = None,
                       scan: int = 64) -> float:
    """Root ``lam`` of ``Phi(lam cos th) cos th = cot(lam sin th) sin th``.

    The matching function is negative near zero and positive at
    ``pi/(2 sin theta)``; a sampled scan confirms a single sign change before
    Brent refinement.
    """
    if not 0 < theta < math.pi / 2:
        raise OutOfRangeError(f"theta={theta} outside (0, pi/2)")
    gs = gs or solve_lambda0(n)
    f = _matching(gs, theta)
    lo = _DELTA
    hi = min(math.pi / (2 * math.sin(theta)) - _DELTA, gs.rho_max)
    lams = np.geomspace(lo, hi, scan)
    vals = np.array([f(v) for v in lams])
    changes = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if changes.size == 0:
        raise NoConvergenceError(f"no sign change of the matching function for theta={theta}")
    if changes.size > 1:
        warnings.warn(f"{changes.size} sign changes in the matching function at theta={theta}",
                      RuntimeWarning, stacklevel=2)
    k = changes[0]
    return brentq(f, lams[k], lams[k + 1], xtol=1e-15, rtol=1e-15)


def initial_time(n: int, rho: float, gs: GroundState | None = None):
    """``(lam_rho, t_rho)``: the Sigma surface meeting the sphere at height sin(rho).

    ``-t_rho = lam^-2 log(phi0(lam cos rho) / sin(lam sin rho))``.
    """
    gs = gs or solve_lambda0(n)
    lam = solve_lambda_theta(n, rho, gs)
    val, _ = phi0_eval(gs, lam * math.cos(rho))
    t = -math.log(val / math.sin(lam * math.sin(rho))) / lam ** 2
    return lam, t


def initial_time_residual(gs: GroundState, rho: float, lam: float, t: float) -> float:
    val, _ = phi0_eval(gs, lam * math.cos(rho))
    return math.sin(lam * math.sin(rho)) - math.exp(lam * lam * t) * val


def theta_for_lambda(n: int, lam: float, gs: GroundState | None = None) -> float:
    """Inverse of ``solve_lambda_theta`` on (0, pi/2), when ``lam`` is attained."""
    gs = gs or solve_lambda0(n)

    def g(th):
        return solve_lambda_theta(n, th, gs) - lam
    lo, hi = 1e-3, math.pi / 2 - 1e-3
    if g(lo) * g(hi) > 0:
        raise OutOfRangeError(f"lambda={lam} is not a matching frequency for n={n}")
    return brentq(g, lo, hi, xtol=1e-14)
