"""Pure numpy implementations of the time-stepping and shooting kernels.

Every function here has a Cython twin in ``_kernels.pyx`` with the same
signature and the same floating point operation order; ``kernels.py`` picks
one at import time.
"""
import math

import numpy as np

IMPLEMENTATION = "python"

# flow_advance status codes
RUNNING = 0
HIT_STOP_TIME = 1
HIT_STOP_HEIGHT = 2
HIT_MIN_RADIUS = 3
LOST_MONOTONICITY = 4
LEFT_BALL = 5


def _start_values(n, ell, mus, eps):
    a = -mus / (2.0 * (2 * ell + n))
    phi = 1.0 + a * eps * eps
    psi = ell + (ell + 2) * a * eps * eps
    return phi, psi


def _rhs(n, ell, mus, s, phi, psi):
    # phi_ss + (n-2) phi_s - l(l+n-2) phi + mu e^{2s} phi = 0
    return psi, -(n - 2) * psi + (ell * (ell + n - 2) - mus * math.exp(2.0 * s)) * phi


def rk4_log_radial(n, ell, mus, eps, nsteps, record=False):
    """Integrate the radial eigen-ODE in ``s = log r`` from ``log eps`` to 0.

    ``mus`` is an array of trial eigenvalues integrated simultaneously.  The
    solution is normalised as ``phi ~ (r/eps)^ell`` at the start; the returned
    ``log_scale`` undoes that normalisation and any overflow rescaling.
    With ``record`` the node values are kept as ``(s, phi, psi)`` arrays.
    """
    mus = np.asarray(mus, dtype=float)
    s0 = math.log(eps)
    h = -s0 / nsteps
    phi, psi = _start_values(n, ell, mus, eps)
    log_scale = np.full(mus.shape, ell * s0)
    if record:
        S = [s0]
        P = [phi.copy()]
        Q = [psi.copy()]
        L = [log_scale.copy()]
    for k in range(nsteps):
        s = s0 + k * h
        k1p, k1q = _rhs(n, ell, mus, s, phi, psi)
        k2p, k2q = _rhs(n, ell, mus, s + 0.5 * h, phi + 0.5 * h * k1p, psi + 0.5 * h * k1q)
        k3p, k3q = _rhs(n, ell, mus, s + 0.5 * h, phi + 0.5 * h * k2p, psi + 0.5 * h * k2q)
        k4p, k4q = _rhs(n, ell, mus, s + h, phi + h * k3p, psi + h * k3q)
        phi = phi + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        psi = psi + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        big = np.abs(phi) > 1e150
        if np.any(big):
            phi = np.where(big, phi * 1e-150, phi)
            psi = np.where(big, psi * 1e-150, psi)
            log_scale = np.where(big, log_scale + 150.0 * math.log(10.0), log_scale)
        if record:
            S.append(s0 + (k + 1) * h)
            P.append(phi.copy())
            Q.append(psi.copy())
            L.append(log_scale.copy())
    if record:
        return np.array(S), np.array(P), np.array(Q), np.array(L)
    return phi, psi, log_scale


def shoot_residuals(n, ell, mus, eps, nsteps):
    """Robin residual ``phi_r(1) - phi(1)`` for each trial eigenvalue."""
    phi, psi, log_scale = rk4_log_radial(n, ell, mus, eps, nsteps)
    with np.errstate(over="ignore"):
        return (psi - phi) * np.exp(log_scale)


def heat_weights(n, N):
    """Conservative-stencil weights (r_{i+-1/2}/r_i)^(n-1) for 1 <= i < N."""
    i = np.arange(1, N, dtype=float)
    wp = ((i + 0.5) / i) ** (n - 1)
    wm = ((i - 0.5) / i) ** (n - 1)
    return wp, wm


def heat_advance(v, n, dr, dt, nsteps):
    """Advance the radial Robin heat equation in place by ``nsteps`` Euler steps."""
    N = v.shape[0] - 1
    wp, wm = heat_weights(n, N)
    c = dt / (dr * dr)
    for _ in range(nsteps):
        lap = np.empty_like(v)
        lap[0] = 2.0 * n * (v[1] - v[0])
        lap[1:N] = wp * (v[2:] - v[1:N]) - wm * (v[1:N] - v[:N - 1])
        lap[N] = 2.0 * (v[N - 1] - v[N]) + 2.0 * dr * v[N] + (n - 1) * dr * dr * v[N]
        v += c * lap
    return v


def boundary_velocity(u, xb, n):
    """``dx_b/dt`` implied by the current profile.

    Differentiating ``x_b^2 + u_M^2 = 1`` with ``u_x = u_M/x_b`` at the
    boundary gives ``x_b' = -p V / (1 + p^2)``, ``p = u_M/x_b``, where ``V`` is
    the fixed-frame graph velocity there.
    """
    M = u.shape[0] - 1
    dx = xb / M
    p = u[M] / xb
    uxx = (2.0 * u[M] - 5.0 * u[M - 1] + 4.0 * u[M - 2] - u[M - 3]) / (dx * dx)
    V = uxx / (1.0 + p * p) + (n - 1) * p / xb
    return -p * V / (1.0 + p * p)


def _flow_rhs(u, xb, n, out):
    M = u.shape[0] - 1
    dx = xb / M
    xbdot = boundary_velocity(u, xb, n)
    out[0] = 2.0 * n * (u[1] - u[0]) / (dx * dx)
    i = np.arange(1, M)
    ux = (u[2:] - u[:M - 1]) / (2.0 * dx)
    uxx = (u[2:] - 2.0 * u[1:M] + u[:M - 1]) / (dx * dx)
    out[1:M] = uxx / (1.0 + ux * ux) + (n - 1) * ux / (i * dx) + (i / M) * xbdot * ux
    return xbdot


def closure_height(u_m1, u_m2, M):
    """Boundary height from the discrete orthogonality condition."""
    return (4.0 * u_m1 - u_m2) / (3.0 - 2.0 / M)


def flow_advance(u, xb, t, n, cfl, dt_fixed, t_stop, stop_height, xb_min, max_steps):
    """Advance the normalised-graph free-boundary flow in place.

    Takes Heun steps of size ``cfl*(xb/M)**2`` (or ``dt_fixed`` if positive),
    shortening the last one to land on ``t_stop``.  The moving-frame term
    uses the boundary velocity of each stage.  Returns
    ``(t, xb, xbdot, steps, status)`` with ``xbdot`` evaluated at the final state.
    """
    M = u.shape[0] - 1
    k1 = np.empty(M)
    k2 = np.empty(M)
    u1 = np.empty(M + 1)
    steps = 0
    status = RUNNING
    while steps < max_steps:
        if u[M] >= stop_height:
            status = HIT_STOP_HEIGHT
            break
        if xb < xb_min:
            status = HIT_MIN_RADIUS
            break
        if t >= t_stop:
            status = HIT_STOP_TIME
            break
        dt = dt_fixed if dt_fixed > 0 else cfl * (xb / M) * (xb / M)
        if t + dt > t_stop:
            dt = t_stop - t
        _flow_rhs(u, xb, n, k1)
        u1[:M] = u[:M] + dt * k1
        u1[M] = closure_height(u1[M - 1], u1[M - 2], M)
        if not u1[M] < 1.0:
            status = LEFT_BALL
            break
        xb1 = math.sqrt(1.0 - u1[M] * u1[M])
        _flow_rhs(u1, xb1, n, k2)
        u[:M] = u[:M] + (0.5 * dt) * (k1 + k2)
        u[M] = closure_height(u[M - 1], u[M - 2], M)
        if not u[M] < 1.0:
            status = LEFT_BALL
            break
        xb = math.sqrt(1.0 - u[M] * u[M])
        t = t + dt
        steps += 1
        if np.any(u[1:] < u[:-1]):
            status = LOST_MONOTONICITY
            break
    return t, xb, boundary_velocity(u, xb, n), steps, status
