"""Diagonal Pade approximants of the perturbation series and Hankel checks.

The series ``E_n(beta) = 2n+1 + beta F(beta)`` with
``F(beta) = sum_k e_{n,k+1} beta^k`` is summed by the ``[j/j]`` approximant
``P_j / Q_j`` of ``F`` (``Q_j(0) = 1``), which matches ``F`` through
``beta^{2j}`` and so uses ``e_{n,1} .. e_{n,2j+1}``.  The linear system for
``Q`` is solved exactly with rationals up to ``j = 15`` and with
``mpmath`` at 256 bits or more above.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .model import CutParameter
from .rs_series import RationalSeries

__all__ = [
    "PadeApproximant",
    "HankelReport",
    "SingularHankelError",
    "PadeStructureError",
    "build_pade",
    "evaluate",
    "evaluate_complex",
    "hankel_report",
    "epsilon_value",
    "EXACT_MAX_J",
]

EXACT_MAX_J = 15


class SingularHankelError(ArithmeticError):
    """The linear system for the denominator is singular."""


class PadeStructureError(ArithmeticError):
    """Denominator roots leave the negative real axis."""


def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@dataclass
class PadeApproximant:
    """``[j/j]`` approximant of ``F`` for level ``n``.

    Attributes
    ----------
    p, q : list
        Coefficients in increasing degree; ``q[0] == 1``.  ``Fraction`` in
        exact mode, ``mpf`` otherwise.
    precision_bits : int
        Zero in exact mode.
    q_roots, p_roots : list of mpf
        Real parts of the polynomial roots (all negative when verified).
    degenerate : bool
        True when a lower-order approximant already matches through ``2j``.
    """

    n: int
    j: int
    p: list
    q: list
    precision_bits: int
    q_roots: list = field(default_factory=list)
    p_roots: list = field(default_factory=list)
    degenerate: bool = False

    @property
    def e0(self) -> int:
        return 2 * self.n + 1

    @property
    def exact(self) -> bool:
        return self.precision_bits == 0

    def to_dict(self) -> dict:
        def enc(c):
            if isinstance(c, Fraction):
                return f"{c.numerator}/{c.denominator}"
            return mpmath.nstr(c, 60)

        return {"n": self.n, "j": self.j, "precision_bits": self.precision_bits,
                "P": [enc(c) for c in self.p], "Q": [enc(c) for c in self.q],
                "Q_roots": [mpmath.nstr(r, 20) for r in self.q_roots],
                "degenerate": self.degenerate}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _solve_fraction(A, b):
    """Gaussian elimination over rationals; ``None`` when singular."""
    n = len(b)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        for r in range(col + 1, n):
            f = M[r][col]
            if f:
                f = f / pv
                row_c = M[col]
                M[r] = [x - f * y for x, y in zip(M[r], row_c)]
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = M[i][n] - sum(M[i][k] * x[k] for k in range(i + 1, n))
        x[i] = s / M[i][i]
    return x


def _denominator(c, j, exact, prec):
    """Solve ``sum_{i=1}^{j} q_i c_{m-i} = -c_m`` for ``m = j+1 .. 2j``."""
    A = [[c[m - i] for i in range(1, j + 1)] for m in range(j + 1, 2 * j + 1)]
    b = [-c[m] for m in range(j + 1, 2 * j + 1)]
    if exact:
        sol = _solve_fraction(A, b)
        return None if sol is None else [Fraction(1)] + sol
    with mpmath.workprec(prec):
        Am = mpmath.matrix([[_mpf(x) for x in row] for row in A])
        bm = mpmath.matrix([_mpf(x) for x in b])
        try:
            sol = mpmath.lu_solve(Am, bm)
        except ZeroDivisionError:
            return None
        res = mpmath.norm(Am * sol - bm) / max(mpmath.norm(bm), mpmath.mpf(1))
        if res > mpmath.mpf(2) ** (-prec // 2):
            raise SingularHankelError(f"residual {mpmath.nstr(res, 5)} at j = {j}; raise precision")
        return [mpmath.mpf(1)] + [sol[i] for i in range(j)]


def _numerator(c, q, j):
    return [sum(q[i] * c[m - i] for i in range(0, min(m, j) + 1)) for m in range(j + 1)]


def _matching_defect(c, p, q, order):
    """Coefficients of ``Q F - P`` through ``beta^order``."""
    out = []
    for m in range(order + 1):
        s = sum(q[i] * c[m - i] for i in range(0, min(m, len(q) - 1) + 1))
        if m < len(p):
            s -= p[m]
        out.append(s)
    return out


def _roots(coeffs, prec):
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) <= 1:
        return []
    with mpmath.workprec(max(prec, 256)):
        poly = [_mpf(x) for x in reversed(coeffs)]
        return mpmath.polyroots(poly, maxsteps=400, extraprec=4 * max(prec, 256))


def build_pade(series, j: int, n: int | None = None, precision_bits: int = 256,
               exact_max_j: int = EXACT_MAX_J, check_stieltjes: bool = True) -> PadeApproximant:
    """Diagonal approximant ``[j/j]`` of ``F(beta) = sum_k c_k beta^k``.

    Parameters
    ----------
    series : RationalSeries or sequence
        A :class:`RationalSeries` (then ``c_k = e_{n,k+1}``) or raw
        coefficients ``c_0, c_1, ...``.
    j : int
        Diagonal order; needs ``2j + 1`` coefficients.
    n : int, optional
        Level index recorded for raw coefficient input.
    precision_bits : int
        Working precision above ``exact_max_j`` (at least 256).
    check_stieltjes : bool
        Require every root of ``Q`` to be real and negative.

    Raises
    ------
    SingularHankelError
        If the system is singular and no lower-order approximant matches.
    PadeStructureError
        If a denominator root leaves ``(-inf, 0)``.
    """
    if isinstance(series, RationalSeries):
        c = list(series.coefficients)
        n = series.n
    else:
        c = [x if isinstance(x, Fraction) else Fraction(x) if isinstance(x, int) else x for x in series]
        n = 0 if n is None else n
    if j < 0:
        raise ValueError("j must be non-negative")
    if len(c) < 2 * j + 1:
        raise ValueError(f"[{j}/{j}] needs {2 * j + 1} coefficients, series has {len(c)}")
    exact = j <= exact_max_j and all(isinstance(x, Fraction) for x in c[: 2 * j + 1])
    prec = 0 if exact else max(256, int(precision_bits))
    q = _denominator(c, j, exact, prec) if j > 0 else [Fraction(1) if exact else mpmath.mpf(1)]
    degenerate = False
    if q is None:
        # a rational series of lower degree: accept the smallest order that matches through 2j
        for jj in range(j - 1, -1, -1):
            qq = _denominator(c, jj, exact, prec) if jj > 0 else [Fraction(1)]
            if qq is None:
                continue
            pp = _numerator(c, qq, jj)
            defect = _matching_defect(c, pp, qq, 2 * j)
            if all(d == 0 for d in defect):
                q = qq + [0] * (j - jj)
                degenerate = True
                break
        if q is None:
            raise SingularHankelError(f"singular Hankel system at j = {j}")
    if exact:
        p = _numerator(c, q, j)
        defect = _matching_defect(c, p, q, 2 * j)
    else:
        with mpmath.workprec(prec):
            cm = [_mpf(x) for x in c[: 2 * j + 1]]
            p = _numerator(cm, q, j)
            defect = _matching_defect(cm, p, q, 2 * j)
    if exact:
        if any(d != 0 for d in defect):
            raise ArithmeticError("matching condition violated in exact arithmetic")
    else:
        scale = max(abs(_mpf(x)) for x in c[: 2 * j + 1])
        with mpmath.workprec(prec):
            if max(abs(_mpf(d)) for d in defect) > scale * mpmath.mpf(2) ** (-prec // 2):
                raise SingularHankelError(f"matching residual too large at j = {j}")
    q_roots = _roots(q, prec or 256)
    p_roots = _roots(p, prec or 256)
    tol_im = mpmath.mpf(10) ** -20
    if check_stieltjes:
        for r in q_roots:
            if abs(mpmath.im(r)) > tol_im * max(1, abs(r)) or mpmath.re(r) >= 0:
                raise PadeStructureError(f"denominator root {mpmath.nstr(r, 10)} off the negative axis")
    return PadeApproximant(n, j, p, q, prec, sorted(mpmath.re(r) for r in q_roots),
                           sorted(mpmath.re(r) for r in p_roots), degenerate)


def evaluate(approx: PadeApproximant, beta: CutParameter, dps: int = 40):
    """``E_n(0) + beta P(beta) / Q(beta)`` as an ``mpc``.

    Raises
    ------
    ValueError
        On the cut, where the value depends on the side of approach.
    """
    if beta.on_cut:
        raise ValueError("Pade values are evaluated inside the cut plane only")
    with mpmath.workdps(dps):
        z = mpmath.mpf(beta.modulus) * mpmath.expj(mpmath.mpf(beta.argument))
        P = mpmath.polyval([_mpf(x) for x in reversed(approx.p)], z)
        Q = mpmath.polyval([_mpf(x) for x in reversed(approx.q)], z)
        return approx.e0 + z * P / Q


def evaluate_complex(approx: PadeApproximant, beta: CutParameter) -> complex:
    return complex(evaluate(approx, beta))


def epsilon_value(coefficients, beta: complex, j: int, dps: int = 60):
    """Wynn epsilon applied to the partial sums ``S_0..S_{2j}`` of ``sum c_k beta^k``.

    ``eps_{2j}^{(0)}`` equals the ``[j/j]`` approximant; used as a
    cross-check of the Hankel construction.
    """
    with mpmath.workdps(dps):
        z = mpmath.mpmathify(beta)
        S = []
        acc = mpmath.mpf(0)
        for k in range(2 * j + 1):
            acc += _mpf(coefficients[k]) * z ** k
            S.append(acc)
        prev = [mpmath.mpf(0)] * (len(S) + 1)
        cur = list(S)
        for _ in range(2 * j):
            nxt = [prev[i + 1] + 1 / (cur[i + 1] - cur[i]) for i in range(len(cur) - 1)]
            prev, cur = cur, nxt
        return cur[0]


@dataclass
class HankelReport:
    """Signs of ``H^(0)_j = det[a_{i+k}]`` and ``H^(1)_j = det[a_{i+k+1}]``, ``j = 1..J``."""

    dets0: list
    dets1: list
    signs0: list
    signs1: list

    @property
    def positive(self) -> bool:
        return all(s > 0 for s in self.signs0 + self.signs1)

    def first_failure(self):
        """``(order, family)`` of the first non-positive determinant, or ``None``."""
        for j, (s0, s1) in enumerate(zip(self.signs0, self.signs1), start=1):
            if s0 <= 0:
                return j, 0
            if s1 <= 0:
                return j, 1
        return None

    def to_dict(self) -> dict:
        return {"signs0": self.signs0, "signs1": self.signs1,
                "log10_abs_dets0": [_log10_abs(d) for d in self.dets0],
                "log10_abs_dets1": [_log10_abs(d) for d in self.dets1]}


def _log10_abs(x: Fraction):
    if x == 0:
        return None
    x = abs(x)
    return (math.log(x.numerator) - math.log(x.denominator)) / math.log(10)


def _bareiss(M):
    """Exact determinant by fraction-free elimination (entries rational)."""
    n = len(M)
    if n == 0:
        return Fraction(1)
    den = 1
    for row in M:
        for x in row:
            den = den * Fraction(x).denominator // math.gcd(den, Fraction(x).denominator)
    A = [[int(Fraction(x) * den) for x in row] for row in M]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if A[r][k] != 0), None)
            if swap is None:
                return Fraction(0)
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for jx in range(k + 1, n):
                A[i][jx] = (A[i][jx] * A[k][k] - A[i][k] * A[k][jx]) // prev
        prev = A[k][k]
    return Fraction(sign * A[n - 1][n - 1], den ** n)


def hankel_report(series, J: int) -> HankelReport:
    """Exact Hankel determinants of the moments ``a_j``.

    Parameters
    ----------
    series : RationalSeries or sequence
        For a :class:`RationalSeries` the moments are
        ``a_j = (-1)^j e_{n,j+1}`` (equal to ``|e_{n,j+1}|`` when the signs
        alternate; a broken sign pattern then shows up as a negative
        moment).  A plain sequence is taken as the moments themselves.
    J : int
        Highest order; needs ``2J`` moments.
    """
    a = series.moments() if isinstance(series, RationalSeries) else [Fraction(x) for x in series]
    if len(a) < 2 * J:
        raise ValueError(f"order {J} needs {2 * J} moments, got {len(a)}")
    d0, d1 = [], []
    for j in range(1, J + 1):
        d0.append(_bareiss([[a[i + k] for k in range(j)] for i in range(j)]))
        if 2 * j - 1 < len(a):
            d1.append(_bareiss([[a[i + k + 1] for k in range(j)] for i in range(j)]))
    def sgn(x):
        return (x > 0) - (x < 0)

    return HankelReport(d0, d1, [sgn(x) for x in d0], [sgn(x) for x in d1])
