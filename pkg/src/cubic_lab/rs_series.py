"""Exact Rayleigh-Schroedinger coefficients of the cubic oscillator.

The perturbation ``i sqrt(beta) x^3`` is written as ``lam * W`` with
``W = (a + a^+)^3`` and ``lam = i sqrt(beta) / 2^{3/2}``.  Working in the
unnormalised vectors ``e_m = (a^+)^m |0>`` removes every square root:

* ``a^+ e_m = e_{m+1}``, ``a e_m = m e_{m-1}``,
* ``H_0 e_m = (2m + 1) e_m``,

so the recursion runs on exact rationals.  With intermediate normalisation
``[phi_k]_n = 0`` the order-``k`` energy is ``eps_k = [W phi_{k-1}]_n`` and

    ``[phi_k]_m = (sum_{j<k} eps_j [phi_{k-j}]_m - [W phi_{k-1}]_m) / (2 (m - n))``.

Odd orders vanish by parity, and ``lam^{2m} = (-1)^m beta^m / 8^m`` gives the
coefficient of ``beta^m``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "RationalSeries",
    "GrowthFit",
    "rs_coefficients",
    "growth_fit",
    "carleman_partial_sums",
    "default_order",
]


def default_order(n: int) -> int:
    """Default number of orders: 40 for ``n <= 2`` and 25 above."""
    return 40 if n <= 2 else 25


@dataclass(frozen=True)
class RationalSeries:
    """Coefficients ``e_{n,k}``, ``k = 1..K``, of ``E_n(beta) ~ 2n+1 + sum e_{n,k} beta^k``."""

    n: int
    coefficients: tuple

    @property
    def K(self) -> int:
        return len(self.coefficients)

    @property
    def e0(self) -> int:
        return 2 * self.n + 1

    def __getitem__(self, k: int) -> Fraction:
        """``e_{n,k}`` with 1-based order ``k``; ``k = 0`` gives ``2n + 1``."""
        if k == 0:
            return Fraction(self.e0)
        if not 1 <= k <= self.K:
            raise IndexError(f"order {k} outside 0..{self.K}")
        return self.coefficients[k - 1]

    def moments(self) -> list:
        """Stieltjes moments ``a_j = (-1)^j e_{n,j+1}``; equal to ``|e_{n,j+1}|`` under the sign pattern."""
        return [(-1) ** j * c for j, c in enumerate(self.coefficients)]

    def alternates(self) -> bool:
        return all(((-1) ** (k - 1)) * c > 0 for k, c in enumerate(self.coefficients, start=1))

    def partial_sum(self, beta: complex, order: int | None = None) -> complex:
        order = self.K if order is None else order
        total = complex(self.e0)
        for k in range(1, order + 1):
            total += float(self.coefficients[k - 1]) * beta ** k
        return total

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "K": self.K,
            "e0": self.e0,
            "coefficients": [
                {"k": k, "numerator": str(c.numerator), "denominator": str(c.denominator),
                 "value": f"{c.numerator}/{c.denominator}"}
                for k, c in enumerate(self.coefficients, start=1)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "RationalSeries":
        coeffs = tuple(Fraction(int(c["numerator"]), int(c["denominator"])) for c in data["coefficients"])
        return cls(int(data["n"]), coeffs)

    @classmethod
    def from_json(cls, text: str) -> "RationalSeries":
        return cls.from_dict(json.loads(text))


def _apply_w(vec: dict) -> dict:
    """Apply ``(a + a^+)^3`` to a coefficient dictionary in the ``e_m`` basis."""
    for _ in range(3):
        out = {}
        for m, c in vec.items():
            out[m + 1] = out.get(m + 1, 0) + c
            if m > 0:
                out[m - 1] = out.get(m - 1, 0) + m * c
        vec = out
    return vec


def rs_coefficients(n: int, K: int | None = None) -> RationalSeries:
    """Exact coefficients ``e_{n,1..K}``.

    Parameters
    ----------
    n : int
        Level index.
    K : int, optional
        Number of orders in ``beta``; defaults to :func:`default_order`.

    Raises
    ------
    ArithmeticError
        If an odd order in ``lam`` fails to vanish (a bookkeeping error).
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    K = default_order(n) if K is None else int(K)
    if K < 1:
        raise ValueError("K must be at least 1")
    L = 2 * K
    phis = [{n: Fraction(1)}]
    eps = [Fraction(0)] * (L + 1)
    for k in range(1, L + 1):
        w = _apply_w(phis[k - 1])
        eps[k] = Fraction(w.get(n, 0))
        if k % 2 == 1 and eps[k] != 0:
            raise ArithmeticError(f"odd order {k} does not vanish")
        if k == L:
            break
        keys = set(w)
        for j in range(2, k, 2):
            keys.update(phis[k - j])
        new = {}
        for m in keys:
            if m == n:
                continue
            s = -w.get(m, 0)
            for j in range(2, k, 2):
                if eps[j]:
                    s += eps[j] * phis[k - j].get(m, 0)
            if s:
                new[m] = Fraction(s) / (2 * (m - n))
        phis.append(new)
    coeffs = tuple(eps[2 * m] * (-1) ** m / Fraction(8) ** m for m in range(1, K + 1))
    return RationalSeries(n, coeffs)


def _log_abs(x: Fraction) -> float:
    x = abs(x)
    return math.log(x.numerator) - math.log(x.denominator)


@dataclass(frozen=True)
class GrowthFit:
    """Factorial growth ``|e_{n,k}| <= D C^k k!``.

    Attributes
    ----------
    C, D : float
        Fitted constants; ``D`` is raised until the bound holds at every
        order used.
    orders : tuple of int
    residual : float
        RMS residual of the log-linear fit.
    q : float
        Offset of the ratio diagnostic.
    ratios : tuple of float
        ``|e_{k+1}| / ((k + q) |e_k|)`` for consecutive orders.
    ratio_limit : float
        Richardson estimate of the ratio limit (linear in ``1/k``).
    q_sensitivity : dict
        Last ratio for several offsets ``q``.
    """

    C: float
    D: float
    orders: tuple
    residual: float
    q: float
    ratios: tuple
    ratio_limit: float
    q_sensitivity: dict = field(default_factory=dict)

    def trend_monotone(self, last: int = 10) -> bool:
        r = np.asarray(self.ratios[-last:])
        d = np.diff(r)
        return bool(np.all(d <= 0) or np.all(d >= 0))

    def bound(self, k: int) -> float:
        return self.D * self.C ** k * math.factorial(k)


def growth_fit(series: RationalSeries, q: float = 0.5, start: int = 1) -> GrowthFit:
    """Fit ``log|e_k| - log k! = log D + k log C``.

    Raises
    ------
    ValueError
        With fewer than ten orders.
    """
    if series.K < 10:
        raise ValueError("growth fit needs at least 10 orders")
    ks = np.arange(start, series.K + 1)
    y = np.array([_log_abs(series[k]) - math.lgamma(k + 1) for k in ks])
    A = np.vstack([np.ones_like(ks, dtype=float), ks.astype(float)]).T
    (logD, logC), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (logD + logC * ks)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    logD_dom = logD + float(np.max(resid))

    def ratios_for(qq):
        return tuple(math.exp(_log_abs(series[k + 1]) - _log_abs(series[k])) / (k + qq)
                     for k in range(1, series.K))

    ratios = ratios_for(q)
    tail_k = np.arange(series.K - 10, series.K)
    tail_r = np.array(ratios[-10:])
    slope, intercept = np.polyfit(1.0 / tail_k, tail_r, 1)
    sens = {qq: ratios_for(qq)[-1] for qq in (0.0, 0.5, 1.0)}
    return GrowthFit(float(math.exp(logC)), float(math.exp(logD_dom)), tuple(int(k) for k in ks), rms,
                     float(q), ratios, float(intercept), sens)


def carleman_partial_sums(series: RationalSeries) -> np.ndarray:
    """Partial sums of ``a_j^{-1/(2j)}`` with ``a_j = |e_{n,j+1}|``, ``j = 1..K-1``."""
    terms = [math.exp(-_log_abs(series[j + 1]) / (2 * j)) for j in range(1, series.K)]
    return np.cumsum(terms)
