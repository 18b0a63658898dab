"""Radial critical-Robin eigenproblem and heat equation on the unit n-ball.

Separation of variables reduces both to the radial operator

    L_ell phi = phi_rr + (n-1)/r phi_r - ell(ell+n-2)/r^2 phi,

with the Robin condition ``phi_r(1) = phi(1)``.  Eigenvalues are located by
shooting from the regular branch ``phi ~ r^ell``; the heat equation is stepped
with an explicit monotone finite-difference scheme.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from . import kernels
from .errors import CFLViolation
from .spectrum import GroundState, phi0_eval

SHOOT_EPS = 1e-4
SHOOT_STEPS = 2000
SCAN_STEP = 0.25
SCAN_RANGE = (-25.0, 60.0)
HEAT_SAFETY = 0.25


@dataclass
class EigenMode:
    n: int
    ell: int
    mu: float
    r: np.ndarray
    profile: np.ndarray
    derivative: np.ndarray

    @property
    def boundary_residual(self) -> float:
        return float(self.derivative[-1] - self.profile[-1])


@dataclass
class RadialHeatState:
    n: int
    dr: float
    t: float
    values: np.ndarray

    @property
    def r(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.values.size)

    def robin_residual(self) -> float:
        v, h = self.values, self.dr
        return float((3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h) - v[-1])


def shoot_residual(n: int, ell: int, mu, eps: float = SHOOT_EPS,
                   nsteps: int = SHOOT_STEPS):
    """Return ``phi'(1) - phi(1)`` for the regular solution with ``phi ~ r^ell``.

    Integrates with fixed-step RK4 in ``s = log r``; ``mu`` may be an array.
    Zeros in ``mu`` are the Robin eigenvalues of angular degree ``ell``.
    """
    if n < 1 or ell < 0:
        raise ValueError("need n >= 1 and ell >= 0")
    out = kernels.shoot_residuals(int(n), int(ell), np.asarray(mu, dtype=float),
                                  float(eps), int(nsteps))
    return float(out) if np.ndim(out) == 0 else out


def eigen_profile(n: int, ell: int, mu: float, eps: float = SHOOT_EPS,
                  nsteps: int = SHOOT_STEPS) -> EigenMode:
    """Sample the shooting solution at ``mu`` on the integrator's radial nodes."""
    s, P, Q, L = kernels.rk4_log_radial(n, ell, np.array([mu], float), eps, nsteps,
                                        record=True)
    r = np.exp(s)
    scale = np.exp(L[:, 0])
    phi = P[:, 0] * scale
    dphi = Q[:, 0] * scale / r
    return EigenMode(int(n), int(ell), float(mu), r, phi, dphi)


def _bisect_all(n, ell, lo, hi, rlo, tol=1e-14, max_iter=200):
    lo, hi, rlo = lo.copy(), hi.copy(), rlo.copy()
    for _ in range(max_iter):
        if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(lo))):
            break
        mid = 0.5 * (lo + hi)
        rm = np.atleast_1d(shoot_residual(n, ell, mid))
        left = np.sign(rm) == np.sign(rlo)
        lo = np.where(left, mid, lo)
        rlo = np.where(left, rm, rlo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def find_eigenvalues(n: int, ell: int, mu_min: float = SCAN_RANGE[0],
                     mu_max: float = SCAN_RANGE[1], scan_step: float = SCAN_STEP,
                     endpoint_tol: float = 1e-9) -> list[EigenMode]:
    """Eigenvalues of degree ``ell`` in ``[mu_min, mu_max)``, sorted.

    The residual is sampled every ``scan_step``; each sign change is refined by
    bisection.  Local extrema of the sampled residual are re-sampled at a finer
    spacing and a warning is issued if a hidden pair of roots turns up there.
    A root within ``endpoint_tol`` of the excluded endpoint is dropped.
    """
    if not mu_min < mu_max:
        raise ValueError("need mu_min < mu_max")
    K = int(math.ceil((mu_max - mu_min) / scan_step - 1e-12))
    grid = mu_min + scan_step * np.arange(K + 1)
    grid[-1] = mu_max
    res = np.atleast_1d(shoot_residual(n, ell, grid))

    brackets = []
    exact = []
    for k in range(K):
        if res[k] == 0.0:
            exact.append(grid[k])
        elif res[k] * res[k + 1] < 0:
            brackets.append((grid[k], grid[k + 1], res[k]))

    for k in range(1, K):
        d1, d2 = res[k] - res[k - 1], res[k + 1] - res[k]
        if d1 * d2 < 0 and res[k - 1] * res[k] > 0 and res[k] * res[k + 1] > 0:
            fine = np.linspace(grid[k - 1], grid[k + 1], 17)
            rf = np.atleast_1d(shoot_residual(n, ell, fine))
            hits = [(fine[j], fine[j + 1], rf[j]) for j in range(16) if rf[j] * rf[j + 1] < 0]
            if hits:
                warnings.warn(
                    f"scan_step={scan_step} too coarse: two eigenvalues near mu={grid[k]:.4g}",
                    RuntimeWarning, stacklevel=2)
                brackets.extend(hits)

    roots = list(exact)
    if brackets:
        lo = np.array([b[0] for b in brackets])
        hi = np.array([b[1] for b in brackets])
        rlo = np.array([b[2] for b in brackets])
        roots.extend(_bisect_all(n, ell, lo, hi, rlo).tolist())
    roots = sorted(r for r in roots if mu_min <= r < mu_max - endpoint_tol)
    return [eigen_profile(n, ell, mu) for mu in roots]


def rayleigh_quotient(mode: EigenMode) -> float:
    """``(int phi_r^2 + c phi^2/r^2 - phi(1)^2) / int phi^2`` with weight r^(n-1)."""
    r, phi, dphi = mode.r, mode.profile, mode.derivative
    n, ell = mode.n, mode.ell
    s = np.log(r)
    w = r ** n  # r^(n-1) dr = r^n ds
    c = ell * (ell + n - 2)
    num = simpson((dphi ** 2 + c * phi ** 2 / r ** 2) * w, x=s) - phi[-1] ** 2
    den = simpson(phi ** 2 * w, x=s)
    return float(num / den)


def max_heat_ratio(n: int, dr: float) -> float:
    """Largest ``dt/dr^2`` keeping every row of the explicit stencil monotone."""
    wp1 = 1.5 ** (n - 1)
    wm1 = 0.5 ** (n - 1)
    return min(1.0 / (2 * n), 1.0 / (wp1 + wm1), 1.0 / (2 - 2 * dr - (n - 1) * dr * dr))


def evolve_heat(n: int, init, dr: float, T: float, dt: float | None = None,
                times: Sequence[float] | None = None,
                safety: float = HEAT_SAFETY) -> list[RadialHeatState]:
    """Explicit Euler for ``v_t = v_rr + (n-1)/r v_r`` with ``v_r(1) = v(1)``.

    ``init`` is a callable of r or an array on the grid ``r_i = i*dr``.
    Returns snapshots at ``times`` (default ``[0, T]``).  The axis uses the
    limit ``n v_rr(0)``, the interior a conservative flux stencil and the
    Robin end a reflected ghost node ``v_{N+1} = v_{N-1} + 2 dr v_N``.
    """
    N = int(round(1.0 / dr))
    if abs(N * dr - 1.0) > 1e-12:
        raise ValueError("1/dr must be an integer")
    dr = 1.0 / N
    limit = max_heat_ratio(n, dr)
    if dt is None:
        dt = min(safety, limit) * dr * dr
    elif dt > limit * dr * dr * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.3e} exceeds monotone limit {limit * dr * dr:.3e}")
    r = np.linspace(0.0, 1.0, N + 1)
    v = np.array(init(r) if callable(init) else init, dtype=float)
    if v.shape != (N + 1,):
        raise ValueError(f"initial data must have {N + 1} samples")
    if not np.all(np.isfinite(v)):
        raise ValueError("initial data must be finite")
    times = sorted(times) if times is not None else [0.0, T]
    out = []
    t = 0.0
    for target in times:
        if target < t - 1e-15:
            continue
        k = int(math.floor((target - t) / dt + 1e-9))
        if k > 0:
            kernels.heat_advance(v, int(n), dr, dt, k)
            t += k * dt
        rem = target - t
        if rem > 1e-15:
            kernels.heat_advance(v, int(n), dr, rem, 1)
        t = target
        out.append(RadialHeatState(int(n), dr, float(t), v.copy()))
    return out


def ground_mode(gs: GroundState) -> Callable:
    """``r -> phi0(lambda0 r)``."""
    def f(r):
        return phi0_eval(gs, gs.lambda0 * np.asarray(r, float))[0]
    return f


def project_ground(gs: GroundState, v) -> float:
    """L2(B^n) projection coefficient of ``v`` onto ``phi0(lambda0 r)``.

    ``v`` is sampled on the uniform grid ``r_i = i/N``; Simpson's rule with
    weight ``r^(n-1)``.
    """
    v = np.asarray(v, dtype=float)
    r = np.linspace(0.0, 1.0, v.size)
    g = ground_mode(gs)(r)
    w = r ** (gs.n - 1)
    return float(simpson(v * g * w, x=r) / simpson(g * g * w, x=r))


def eigenmode_error(gs: GroundState, dr: float, T: float = 1.0,
                    times: Sequence[float] | None = None) -> float:
    """Max relative sup-norm error of the evolved ground mode against
    ``exp(lambda0^2 t) phi0(lambda0 r)`` over the snapshot times."""
    times = times if times is not None else [0.25 * T, 0.5 * T, 0.75 * T, T]
    states = evolve_heat(gs.n, ground_mode(gs), dr, T, times=times)
    err = 0.0
    for st in states:
        exact = math.exp(gs.lambda0 ** 2 * st.t) * ground_mode(gs)(st.r)
        err = max(err, float(np.max(np.abs(st.values - exact)) / np.max(np.abs(exact))))
    return err


def liouville_residual(gs: GroundState, init, dr: float = 1 / 200, T: float = 3.0) -> float:
    """``sup |v(r,T)/v(0,T) - phi0(lambda0 r)|`` for the evolved ``init``."""
    st = evolve_heat(gs.n, init, dr, T, times=[T])[-1]
    return float(np.max(np.abs(st.values / st.values[0] - ground_mode(gs)(st.r))))
