"""Radial ground state of the critical-Robin Laplacian on the unit n-ball.

The ground state is the even entire function

    phi0(rho) = sum_j b_j rho^(2j),   b_0 = 1,   b_j = b_{j-1} / (2j (n + 2(j-1))),

which solves ``phi'' + (n-1)/rho phi' = phi``.  Its frequency ``lambda0`` is the
unique positive root of ``lambda phi0'(lambda) = phi0(lambda)``, and the lowest
eigenvalue of the Robin problem is ``mu0 = -lambda0**2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergenceError, OutOfRangeError

DEFAULT_RHO_MAX = 12.0
_TAIL_RTOL = 1e-16


@dataclass(frozen=True)
class GroundState:
    """Truncated series for phi0 together with its frequency.

    ``coeffs[j]`` multiplies ``rho**(2j)``; the truncation is certified for
    ``0 <= rho <= rho_max``.
    """

    n: int
    coeffs: tuple
    lambda0: float
    rho_max: float = DEFAULT_RHO_MAX

    @property
    def J(self) -> int:
        return len(self.coeffs) - 1

    @property
    def mu0(self) -> float:
        return -self.lambda0 ** 2


def ground_state_coefficients(n: int, J: int) -> list[float]:
    """Return ``b_0..b_J`` of the even series for phi0 in dimension ``n``."""
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {n!r}")
    if int(J) != J or J < 1:
        raise ValueError(f"truncation must be an integer >= 1, got {J!r}")
    b = [1.0]
    for j in range(1, int(J) + 1):
        b.append(b[-1] / (2 * j * (n + 2 * (j - 1))))
    return b


def truncation_order(n: int, rho_max: float = DEFAULT_RHO_MAX) -> int:
    """Smallest J whose next term at ``rho_max`` is negligible.

    Two guard terms are added so the derivative series (whose terms carry an
    extra factor 2j/rho) is converged as well.
    """
    r2 = rho_max * rho_max
    b, term, total, j = 1.0, 1.0, 1.0, 0
    while True:
        j += 1
        b /= 2 * j * (n + 2 * (j - 1))
        term = b * r2 ** j
        if term < _TAIL_RTOL * total and j > 2:
            return j + 2
        total += term


def _series(n: int, rho_max: float = DEFAULT_RHO_MAX) -> np.ndarray:
    return np.asarray(ground_state_coefficients(n, truncation_order(n, rho_max)))


def _check_rho(gs: GroundState, rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise OutOfRangeError("rho must be non-negative")
    if np.any(rho > gs.rho_max):
        raise OutOfRangeError(
            f"rho={float(np.max(rho))} exceeds certified rho_max={gs.rho_max}")
    return rho


def _horner(c, z):
    # sum_k c[k] z^k
    acc = np.zeros_like(z) + c[-1]
    for ck in c[-2::-1]:
        acc = acc * z + ck
    return acc


def _deriv_over_rho_coeffs(b):
    # phi0'(rho) / rho = sum_{j>=1} 2j b_j rho^(2j-2)
    j = np.arange(1, len(b))
    return 2 * j * b[1:]


def phi0_eval(gs: GroundState, rho):
    """Return ``(phi0(rho), phi0'(rho))``; works elementwise on arrays."""
    rho = _check_rho(gs, rho)
    b = np.asarray(gs.coeffs)
    z = rho * rho
    val = _horner(b, z)
    der = rho * _horner(_deriv_over_rho_coeffs(b), z)
    if val.ndim == 0:
        return float(val), float(der)
    return val, der


def phi0_second(gs: GroundState, rho):
    """Second derivative of phi0 by termwise differentiation."""
    rho = _check_rho(gs, rho)
    b = np.asarray(gs.coeffs)
    j = np.arange(1, len(b))
    out = _horner(2 * j * (2 * j - 1) * b[1:], rho * rho)
    return float(out) if out.ndim == 0 else out


def ode_residual(gs: GroundState, rho):
    """``phi0'' + (n-1)/rho phi0' - phi0``; only meaningful for rho > 0."""
    val, der = phi0_eval(gs, rho)
    return phi0_second(gs, rho) + (gs.n - 1) * np.asarray(der) / np.asarray(rho) - val


def boundary_functional(gs: GroundState, lam):
    """``G(lam) = sum_{j>=1} (2j-1) b_j lam^(2j)``, increasing from G(0) = 0.

    Equals ``lam phi0'(lam) - phi0(lam) + 1``; the Robin condition at the
    scaled boundary is ``G(lam) = 1``.
    """
    lam = _check_rho(gs, lam)
    b = np.asarray(gs.coeffs)
    j = np.arange(1, len(b))
    z = lam * lam
    out = z * _horner((2 * j - 1) * b[1:], z)
    return float(out) if out.ndim == 0 else out


def _boundary_functional_prime(gs: GroundState, lam: float) -> float:
    b = np.asarray(gs.coeffs)
    j = np.arange(1, len(b))
    return float(lam * _horner((2 * j - 1) * 2 * j * b[1:], lam * lam))


def solve_lambda0(n: int, tol: float = 1e-13, rho_max: float = DEFAULT_RHO_MAX,
                  max_newton: int = 30) -> GroundState:
    """Locate the unique root of ``G(lam) = 1`` and return the ground state.

    The bracket [1e-6, 2] is widened by doubling until G exceeds one, then
    narrowed by 60 bisections and polished with Newton.  Raises
    NoConvergenceError if ``|G - 1| <= tol`` is not reached.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {n!r}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    gs = GroundState(int(n), tuple(_series(int(n), rho_max)), float("nan"), rho_max)

    def g(lam):
        return boundary_functional(gs, lam) - 1.0

    lo, hi = 1e-6, 2.0
    while g(hi) <= 0:
        lo, hi = hi, 2 * hi
        if hi > rho_max:
            raise NoConvergenceError(
                f"root bracket exceeded rho_max={rho_max} for n={n}")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    lam = 0.5 * (lo + hi)
    for _ in range(max_newton):
        r = g(lam)
        if abs(r) <= tol:
            break
        step = r / _boundary_functional_prime(gs, lam)
        nxt = lam - step
        # keep the iterate inside the last bisection bracket
        lam = nxt if lo <= nxt <= hi else 0.5 * (lo + hi)
    else:
        if abs(g(lam)) > tol:
            raise NoConvergenceError(
                f"|G(lambda)-1|={abs(g(lam)):.3e} > tol={tol:.1e} for n={n}")
    return GroundState(gs.n, gs.coeffs, float(lam), rho_max)


def phi_ratios(gs: GroundState, rho):
    """Return ``(Phi, Phi2)`` with ``Phi = phi0'/phi0``, ``Phi2 = Phi/rho``.

    ``Phi2`` is summed as its own series, so ``rho = 0`` gives the limit 1/n
    without a 0/0.
    """
    rho = _check_rho(gs, rho)
    b = np.asarray(gs.coeffs)
    z = rho * rho
    val = _horner(b, z)
    d_over = _horner(_deriv_over_rho_coeffs(b), z)
    phi2 = d_over / val
    phi = rho * phi2
    if phi.ndim == 0:
        return float(phi), float(phi2)
    return phi, phi2


def phi2_derivative(gs: GroundState, rho):
    """Derivative of ``Phi2 = phi0'/(rho phi0)``; zero at the axis."""
    rho = _check_rho(gs, rho)
    b = np.asarray(gs.coeffs)
    z = rho * rho
    j = np.arange(1, len(b))
    num = _horner(2 * j * b[1:], z)
    # d/drho of num: sum_{j>=2} 2j (2j-2) b_j rho^(2j-3)
    jj = np.arange(2, len(b))
    dnum = rho * _horner(2 * jj * (2 * jj - 2) * b[2:], z)
    den = _horner(b, z)
    dden = rho * num
    out = (dnum * den - num * dden) / (den * den)
    return float(out) if out.ndim == 0 else out
