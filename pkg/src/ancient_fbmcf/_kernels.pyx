# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``.

Same signatures, same operation order; loops run without the GIL so sweeps
can use threads.
"""
import numpy as np
from libc.math cimport exp, log, sqrt, fabs

IMPLEMENTATION = "cython"

cdef enum Status:
    S_RUNNING = 0
    S_STOP_TIME = 1
    S_STOP_HEIGHT = 2
    S_MIN_RADIUS = 3
    S_NOT_MONOTONE = 4
    S_LEFT_BALL = 5

RUNNING = S_RUNNING
HIT_STOP_TIME = S_STOP_TIME
HIT_STOP_HEIGHT = S_STOP_HEIGHT
HIT_MIN_RADIUS = S_MIN_RADIUS
LOST_MONOTONICITY = S_NOT_MONOTONE
LEFT_BALL = S_LEFT_BALL


cdef inline void _shoot_one(int n, int ell, double mu, double eps, int nsteps,
                            double *phi_out, double *psi_out, double *logs_out) noexcept nogil:
    cdef double s0 = log(eps)
    cdef double h = -s0 / nsteps
    cdef double a = -mu / (2.0 * (2 * ell + n))
    cdef double phi = 1.0 + a * eps * eps
    cdef double psi = ell + (ell + 2) * a * eps * eps
    cdef double log_scale = ell * s0
    cdef double c = ell * (ell + n - 2)
    cdef double s, e1, e2, e3
    cdef double k1p, k1q, k2p, k2q, k3p, k3q, k4p, k4q, pp, qq
    cdef int k
    for k in range(nsteps):
        s = s0 + k * h
        e1 = exp(2.0 * s)
        e2 = exp(2.0 * (s + 0.5 * h))
        e3 = exp(2.0 * (s + h))
        k1p = psi
        k1q = -(n - 2) * psi + (c - mu * e1) * phi
        pp = phi + 0.5 * h * k1p
        qq = psi + 0.5 * h * k1q
        k2p = qq
        k2q = -(n - 2) * qq + (c - mu * e2) * pp
        pp = phi + 0.5 * h * k2p
        qq = psi + 0.5 * h * k2q
        k3p = qq
        k3q = -(n - 2) * qq + (c - mu * e2) * pp
        pp = phi + h * k3p
        qq = psi + h * k3q
        k4p = qq
        k4q = -(n - 2) * qq + (c - mu * e3) * pp
        phi = phi + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        psi = psi + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        if fabs(phi) > 1e150:
            phi = phi * 1e-150
            psi = psi * 1e-150
            log_scale = log_scale + 150.0 * log(10.0)
    phi_out[0] = phi
    psi_out[0] = psi
    logs_out[0] = log_scale


def shoot_residuals(int n, int ell, mus, double eps, int nsteps):
    cdef double[::1] m = np.ascontiguousarray(mus, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t K = m.shape[0]
    out = np.empty(K)
    cdef double[::1] o = out
    cdef double phi, psi, logs
    cdef Py_ssize_t i
    with nogil:
        for i in range(K):
            _shoot_one(n, ell, m[i], eps, nsteps, &phi, &psi, &logs)
            o[i] = (psi - phi) * exp(logs)
    return out.reshape(np.shape(mus))


def heat_advance(double[::1] v, int n, double dr, double dt, long nsteps):
    cdef Py_ssize_t N = v.shape[0] - 1
    cdef Py_ssize_t i
    cdef long k
    cdef double c = dt / (dr * dr)
    wp_arr = ((np.arange(1, N) + 0.5) / np.arange(1, N)) ** (n - 1)
    wm_arr = ((np.arange(1, N) - 0.5) / np.arange(1, N)) ** (n - 1)
    cdef double[::1] wp = np.ascontiguousarray(wp_arr, dtype=np.float64)
    cdef double[::1] wm = np.ascontiguousarray(wm_arr, dtype=np.float64)
    lap_arr = np.empty(N + 1)
    cdef double[::1] lap = lap_arr
    with nogil:
        for k in range(nsteps):
            lap[0] = 2.0 * n * (v[1] - v[0])
            for i in range(1, N):
                lap[i] = wp[i - 1] * (v[i + 1] - v[i]) - wm[i - 1] * (v[i] - v[i - 1])
            lap[N] = 2.0 * (v[N - 1] - v[N]) + 2.0 * dr * v[N] + (n - 1) * dr * dr * v[N]
            for i in range(N + 1):
                v[i] = v[i] + c * lap[i]
    return np.asarray(v)


cdef inline double _boundary_velocity(double[::1] u, double xb, int n) noexcept nogil:
    cdef Py_ssize_t M = u.shape[0] - 1
    cdef double dx = xb / M
    cdef double p = u[M] / xb
    cdef double uxx = (2.0 * u[M] - 5.0 * u[M - 1] + 4.0 * u[M - 2] - u[M - 3]) / (dx * dx)
    cdef double V = uxx / (1.0 + p * p) + (n - 1) * p / xb
    return -p * V / (1.0 + p * p)


def boundary_velocity(double[::1] u, double xb, int n):
    return _boundary_velocity(u, xb, n)


cdef inline double _flow_rhs(double[::1] u, double xb, int n, double[::1] out) noexcept nogil:
    cdef Py_ssize_t M = u.shape[0] - 1
    cdef double dx = xb / M
    cdef double xbdot = _boundary_velocity(u, xb, n)
    cdef double ux, uxx
    cdef Py_ssize_t i
    out[0] = 2.0 * n * (u[1] - u[0]) / (dx * dx)
    for i in range(1, M):
        ux = (u[i + 1] - u[i - 1]) / (2.0 * dx)
        uxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx)
        out[i] = uxx / (1.0 + ux * ux) + (n - 1) * ux / (i * dx) + (<double> i / M) * xbdot * ux
    return xbdot


cdef inline double _closure(double um1, double um2, Py_ssize_t M) noexcept nogil:
    return (4.0 * um1 - um2) / (3.0 - 2.0 / M)


def closure_height(double u_m1, double u_m2, Py_ssize_t M):
    return _closure(u_m1, u_m2, M)


def flow_advance(double[::1] u, double xb, double t, int n,
                 double cfl, double dt_fixed, double t_stop, double stop_height,
                 double xb_min, long max_steps):
    cdef Py_ssize_t M = u.shape[0] - 1
    k1_arr = np.empty(M)
    k2_arr = np.empty(M)
    u1_arr = np.empty(M + 1)
    cdef double[::1] k1 = k1_arr
    cdef double[::1] k2 = k2_arr
    cdef double[::1] u1 = u1_arr
    cdef long steps = 0
    cdef int status = S_RUNNING
    cdef double dt, xb1
    cdef Py_ssize_t i
    with nogil:
        while steps < max_steps:
            if u[M] >= stop_height:
                status = S_STOP_HEIGHT
                break
            if xb < xb_min:
                status = S_MIN_RADIUS
                break
            if t >= t_stop:
                status = S_STOP_TIME
                break
            if dt_fixed > 0:
                dt = dt_fixed
            else:
                dt = cfl * (xb / M) * (xb / M)
            if t + dt > t_stop:
                dt = t_stop - t
            _flow_rhs(u, xb, n, k1)
            for i in range(M):
                u1[i] = u[i] + dt * k1[i]
            u1[M] = _closure(u1[M - 1], u1[M - 2], M)
            if not u1[M] < 1.0:
                status = S_LEFT_BALL
                break
            xb1 = sqrt(1.0 - u1[M] * u1[M])
            _flow_rhs(u1, xb1, n, k2)
            for i in range(M):
                u[i] = u[i] + (0.5 * dt) * (k1[i] + k2[i])
            u[M] = _closure(u[M - 1], u[M - 2], M)
            if not u[M] < 1.0:
                status = S_LEFT_BALL
                break
            xb = sqrt(1.0 - u[M] * u[M])
            t = t + dt
            steps += 1
            for i in range(M):
                if u[i + 1] < u[i]:
                    status = S_NOT_MONOTONE
                    break
            if status != S_RUNNING:
                break
    return t, xb, _boundary_velocity(u, xb, n), steps, status
