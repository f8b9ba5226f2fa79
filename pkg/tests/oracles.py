"""Independent reference computations used to pin golden values.

Nothing here imports the package.  The shooting oracle integrates the
eigenvalue ODE on the real line with a general-purpose Runge-Kutta solver,
the sum-over-states oracle evaluates second-order perturbation theory with
floating-point ladder matrices, and turning points come from the companion
matrix roots in :func:`numpy.roots`.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import newton


def _shoot_side(q, X, sign):
    """Log-derivative at 0 of the solution decaying towards ``sign * infinity``."""
    x0 = sign * X
    k = cmath.sqrt(q(x0))
    if k.real < 0:
        k = -k
    y0 = np.array([1.0 + 0j, -sign * k])

    def rhs(x, y):
        return [y[1], q(x) * y[0]]

    sol = solve_ivp(rhs, (x0, 0.0), y0, method="DOP853", rtol=1e-13, atol=1e-300)
    return sol.y[:, -1]


def shoot(c2: complex, c3: complex, E: complex, X: float = 7.0) -> complex:
    """Normalised Wronskian of the two decaying solutions of ``psi'' = (c2 x^2 + c3 x^3 - E) psi``.

    Valid when both ends of the real axis lie inside decay sectors, which is
    the case for ``c3 = i sqrt(beta)`` with ``arg beta`` near zero.
    """
    def q(x):
        return c2 * x * x + c3 * x ** 3 - E

    r = _shoot_side(q, X, +1)
    l = _shoot_side(q, X, -1)
    w = r[0] * l[1] - r[1] * l[0]
    return w / math.sqrt(abs(r[0]) ** 2 + abs(r[1]) ** 2) / math.sqrt(abs(l[0]) ** 2 + abs(l[1]) ** 2)


def shooting_eigenvalue(c2: complex, c3: complex, guess: complex, X: float = 7.0) -> complex:
    """Root of :func:`shoot` in ``E`` by the secant method."""
    return complex(newton(lambda E: shoot(c2, c3, E, X), guess, x1=guess * (1 + 1e-3), tol=1e-13,
                          maxiter=60))


def level_oracle(beta: float, n: int, guess: float) -> complex:
    """``E_n(beta)`` for real positive ``beta``."""
    return shooting_eigenvalue(1.0, 1j * math.sqrt(beta), guess)


def limit_oracle(n: int, guess: float) -> complex:
    """Eigenvalue of ``-d^2/dx^2 + i x^3``."""
    return shooting_eigenvalue(0.0, 1j, guess)


def ladder_x(N: int) -> np.ndarray:
    """Matrix of ``x`` in normalised Hermite functions for ``-d^2/dx^2 + x^2``."""
    off = np.sqrt(np.arange(1, N) / 2.0)
    return np.diag(off, 1) + np.diag(off, -1)


def second_order_coefficient(n: int, N: int = 60) -> float:
    """Coefficient of ``beta`` in ``E_n(beta)`` from second-order sum over states.

    With ``V = i sqrt(beta) x^3`` and ``E_m = 2m + 1`` the second-order term
    is ``beta * sum_m |<m|x^3|n>|^2 / (E_m - E_n)``.
    """
    x = ladder_x(N)
    x3 = x @ x @ x
    total = 0.0
    for m in range(N - 4):
        if m != n:
            total += x3[m, n] ** 2 / (2.0 * (m - n))
    return total


def rs_float_coefficients(n: int, K: int, N: int = 120) -> list:
    """``e_{n,1..K}`` from the matrix Rayleigh-Schroedinger recursion in floats.

    With ``g = i sqrt(beta)`` the energy is ``sum_j E_j g^j`` and
    ``e_{n,k} = (-1)^k E_{2k}``.  Intermediate normalisation, dense ``x^3``.
    """
    x = ladder_x(N)
    V = x @ x @ x
    En = 2.0 * n + 1
    denom = En - (2.0 * np.arange(N) + 1)
    denom[n] = np.inf
    states = [np.eye(N)[n]]
    E = [En]
    for j in range(1, 2 * K + 1):
        Ej = V[n] @ states[j - 1]
        E.append(Ej)
        rhs = V @ states[j - 1] - sum(E[i] * states[j - i] for i in range(1, j + 1))
        states.append(rhs / denom)
    return [(-1) ** k * E[2 * k] for k in range(1, K + 1)]


def turning_points_oracle(c3: complex, c2: complex, c1: complex, c0: complex) -> np.ndarray:
    """Roots of ``c3 y^3 + c2 y^2 + c1 y + c0`` from the companion matrix."""
    return np.roots([c3, c2, c1, c0])


def tunneling_action_oracle() -> float:
    """``2 int_0^1 sqrt(y^2 - y^3) dy`` by the substitution ``y = 1 - s^2``.

    The integrand becomes the polynomial ``4 s^2 (1 - s^2)``, integrated
    exactly by a three-point Gauss-Legendre rule.
    """
    s, w = np.polynomial.legendre.leggauss(3)
    s = 0.5 * (s + 1.0)
    return float(0.5 * np.sum(w * 4 * s ** 2 * (1 - s ** 2)))
