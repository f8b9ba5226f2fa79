"""Oscillator-basis matrices of the cubic operator and Hermite-function evaluation.

Basis functions are the omega-scaled Hermite functions
``h_k(x) = omega**0.25 * psi_k(sqrt(omega) * x)`` where ``psi_k`` are the
orthonormal eigenfunctions of ``-d^2/dx^2 + x^2``.  In this basis
``x = (a + a^+)/sqrt(2 omega)`` and ``d/dx = sqrt(omega/2) (a - a^+)``, so the
kinetic term and ``x^2`` are pentadiagonal and ``x^3`` has bandwidth three.
Every band entry below comes from a closed form, which keeps the diagonal of
``-d^2/dx^2 + x^2`` at ``omega = 1`` exactly equal to ``2k + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CutParameter

__all__ = [
    "BandedComplexMatrix",
    "BasisFunctionSet",
    "EvaluationRangeError",
    "kinetic_band",
    "x2_band",
    "x3_band",
    "assemble_cubic",
    "assemble_rotated",
    "assemble_limit",
    "eigenfunction_value",
    "evaluation_radius",
]


class EvaluationRangeError(ArithmeticError):
    """Raised when a Hermite expansion cannot be evaluated in floating point."""


@dataclass(frozen=True)
class BasisFunctionSet:
    """Truncated oscillator basis of size ``N`` and frequency ``omega``."""

    N: int
    omega: float = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("basis size must be positive")
        if not self.omega > 0:
            raise ValueError("omega must be positive")


class BandedComplexMatrix:
    """Complex-symmetric band matrix stored by its upper diagonals.

    ``bands[k, i]`` holds entry ``(i, i + k)``; the lower triangle mirrors it
    (transpose, not conjugate transpose).  Trailing slots of each band are
    zero.

    Parameters
    ----------
    bands : array_like, shape (bandwidth + 1, N)
    """

    def __init__(self, bands):
        bands = np.array(bands, dtype=complex)
        if bands.ndim != 2:
            raise ValueError("bands must be two-dimensional")
        self._bands = bands
        self._bands.setflags(write=False)

    @property
    def bands(self) -> np.ndarray:
        return self._bands

    @property
    def dimension(self) -> int:
        return self._bands.shape[1]

    @property
    def bandwidth(self) -> int:
        nz = [k for k in range(self._bands.shape[0]) if np.any(self._bands[k] != 0)]
        return max(nz) if nz else 0

    def diagonal(self, offset: int = 0) -> np.ndarray:
        k = abs(offset)
        if k >= self._bands.shape[0]:
            return np.zeros(self.dimension - k, dtype=complex)
        return self._bands[k, : self.dimension - k].copy()

    def entry(self, i: int, j: int) -> complex:
        k = abs(i - j)
        if k >= self._bands.shape[0]:
            return 0j
        return complex(self._bands[k, min(i, j)])

    def to_dense(self) -> np.ndarray:
        N = self.dimension
        out = np.zeros((N, N), dtype=complex)
        idx = np.arange(N)
        for k in range(self._bands.shape[0]):
            d = self._bands[k, : N - k]
            out[idx[: N - k], idx[k:]] = d
            out[idx[k:], idx[: N - k]] = d
        return out

    def to_lapack_banded(self) -> np.ndarray:
        """Full band storage ``ab`` for :func:`scipy.linalg.solve_banded` with ``(l, u) = (w, w)``."""
        w = self._bands.shape[0] - 1
        N = self.dimension
        ab = np.zeros((2 * w + 1, N), dtype=complex)
        for k in range(w + 1):
            d = self._bands[k, : N - k]
            ab[w - k, k:] = d
            ab[w + k, : N - k] = d
        return ab

    def transpose(self) -> "BandedComplexMatrix":
        return self

    @property
    def T(self) -> "BandedComplexMatrix":
        return self

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        N = self.dimension
        out = self._bands[0] * v
        for k in range(1, self._bands.shape[0]):
            d = self._bands[k, : N - k]
            out[: N - k] += d * v[k:]
            out[k:] += d * v[: N - k]
        return out

    def __matmul__(self, v):
        return self.matvec(v)

    def norm_inf(self) -> float:
        return float(np.max(np.sum(np.abs(self.to_dense()), axis=1)))

    def __add__(self, other: "BandedComplexMatrix") -> "BandedComplexMatrix":
        w = max(self._bands.shape[0], other._bands.shape[0])
        out = np.zeros((w, self.dimension), dtype=complex)
        out[: self._bands.shape[0]] += self._bands
        out[: other._bands.shape[0]] += other._bands
        return BandedComplexMatrix(out)

    def scaled(self, c: complex) -> "BandedComplexMatrix":
        return BandedComplexMatrix(c * self._bands)

    def __repr__(self) -> str:
        return f"BandedComplexMatrix(N={self.dimension}, bandwidth={self.bandwidth})"


def _empty(N: int) -> np.ndarray:
    return np.zeros((4, N), dtype=float)


def kinetic_band(N: int, omega: float = 1.0) -> np.ndarray:
    """Real bands of ``-d^2/dx^2``: diagonal ``omega (2k+1)/2``."""
    k = np.arange(N, dtype=float)
    out = _empty(N)
    out[0] = omega * (2 * k + 1) / 2
    out[2, : N - 2] = -omega * np.sqrt((k[: N - 2] + 1) * (k[: N - 2] + 2)) / 2
    return out


def x2_band(N: int, omega: float = 1.0) -> np.ndarray:
    """Real bands of ``x^2``: diagonal ``(2k+1)/(2 omega)``."""
    k = np.arange(N, dtype=float)
    out = _empty(N)
    out[0] = (2 * k + 1) / (2 * omega)
    out[2, : N - 2] = np.sqrt((k[: N - 2] + 1) * (k[: N - 2] + 2)) / (2 * omega)
    return out


def x3_band(N: int, omega: float = 1.0) -> np.ndarray:
    """Real bands of ``x^3``.

    Uses ``<k|(a+a^+)^3|k+1> = 3 (k+1)^{3/2}`` and
    ``<k|(a+a^+)^3|k+3> = sqrt((k+1)(k+2)(k+3))``.
    """
    k = np.arange(N, dtype=float)
    scale = (2 * omega) ** -1.5
    out = _empty(N)
    out[1, : N - 1] = 3 * (k[: N - 1] + 1) ** 1.5 * scale
    out[3, : N - 3] = np.sqrt((k[: N - 3] + 1) * (k[: N - 3] + 2) * (k[: N - 3] + 3)) * scale
    return out


def _check_size(N: int, omega: float):
    if N < 4:
        raise ValueError("basis size must be at least 4")
    if not omega > 0:
        raise ValueError("omega must be positive")


def assemble_cubic(beta: CutParameter, N: int, omega: float = 1.0, rotation: float = 0.0) -> BandedComplexMatrix:
    """Matrix of ``-d^2/dx^2 + x^2 + i sqrt(beta) x^3``.

    Parameters
    ----------
    beta : CutParameter
        Coupling; modulus zero gives the harmonic oscillator.
    N : int
        Basis size (at least 4).
    omega : float
        Basis frequency.
    rotation : float
        Optional complex rotation ``x -> exp(-i rotation) x``.  The rotated
        operator ``e^{2i a} P + e^{-2i a} x^2 + i sqrt(beta) e^{-3i a} x^3``
        has the same eigenvalues, and ``rotation = arg(beta)/10`` makes the
        Galerkin problem well conditioned off the positive axis.
    """
    _check_size(N, omega)
    a = float(rotation)
    c3 = 1j * beta.sqrt * np.exp(-3j * a)
    bands = (np.exp(2j * a) * kinetic_band(N, omega) + np.exp(-2j * a) * x2_band(N, omega)
             + c3 * x3_band(N, omega))
    return BandedComplexMatrix(bands)


def assemble_rotated(b: float, alpha: float, sign: int, N: int, omega: float = 1.0) -> BandedComplexMatrix:
    """Rotated boundary operator on the cut.

    ``e^{+-2i alpha} P + e^{-+2i alpha} x^2 -+ sqrt(b) e^{-+3i alpha} x^3``;
    its eigenvalues are the boundary values ``E^{+-}(-b)``.

    Raises
    ------
    ValueError
        If ``alpha`` is outside ``(0, pi/5)`` or ``sign`` is not +-1.
    """
    _check_size(N, omega)
    if not 0 < alpha < math.pi / 5:
        raise ValueError(f"rotation alpha must lie in (0, pi/5), got {alpha}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if b < 0:
        raise ValueError("b must be non-negative")
    s = sign
    bands = (np.exp(2j * s * alpha) * kinetic_band(N, omega)
             + np.exp(-2j * s * alpha) * x2_band(N, omega)
             - s * math.sqrt(b) * np.exp(-3j * s * alpha) * x3_band(N, omega))
    return BandedComplexMatrix(bands)


def assemble_limit(N: int, omega: float = 1.0, rotation: float = 0.0) -> BandedComplexMatrix:
    """Matrix of ``-d^2/dx^2 + i x^3`` (optionally rotated as in :func:`assemble_cubic`)."""
    _check_size(N, omega)
    a = float(rotation)
    bands = np.exp(2j * a) * kinetic_band(N, omega) + 1j * np.exp(-3j * a) * x3_band(N, omega)
    return BandedComplexMatrix(bands)


def evaluation_radius(N: int, omega: float = 1.0) -> float:
    """Radius of the disk where a size-``N`` expansion is trusted."""
    return 1.5 * math.sqrt(2 * N) / math.sqrt(omega)


def eigenfunction_value(coeffs, omega: float, x, check_disk: bool = True):
    """Evaluate ``sum_k c_k h_k(x)`` and its derivative.

    The three-term recurrence is run without the Gaussian factor and with
    periodic rescaling; the factor ``exp(-omega x^2 / 2)`` and the
    accumulated scale are applied in log space at the end.

    Parameters
    ----------
    coeffs : array_like
        Expansion coefficients.
    omega : float
        Basis frequency.
    x : complex or array_like
        Evaluation points.
    check_disk : bool
        Reject points outside :func:`evaluation_radius`.

    Returns
    -------
    value, derivative : complex or ndarray

    Raises
    ------
    ValueError
        Point outside the evaluation disk.
    EvaluationRangeError
        Result not representable in double precision.
    """
    c = np.asarray(coeffs, dtype=complex)
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    scalar = np.isscalar(x)
    xs = np.atleast_1d(np.asarray(x, dtype=complex))
    N = len(c)
    if check_disk and np.any(np.abs(xs) > evaluation_radius(max(N, 4), omega) * (1 + 1e-12)):
        raise ValueError("evaluation point outside the trusted disk of the expansion")
    s = math.sqrt(omega)
    xi = s * xs
    # psi_k(xi) = exp(-xi^2/2) * g_k(xi); run the recurrence on g_k.
    g_prev = np.zeros_like(xi)
    g_curr = np.full_like(xi, math.pi ** -0.25)
    log_scale = np.zeros(xi.shape, dtype=float)
    val = c[0] * g_curr
    # derivative: psi_k' = sqrt(k/2) psi_{k-1} - sqrt((k+1)/2) psi_{k+1}
    der = np.zeros_like(xi)
    for k in range(N):
        g_next = math.sqrt(2.0 / (k + 1)) * xi * g_curr - math.sqrt(k / (k + 1.0)) * g_prev
        # contributions of psi_{k+1} to the derivative sum of c_k
        der -= c[k] * math.sqrt((k + 1) / 2.0) * g_next
        if k + 1 < N:
            val += c[k + 1] * g_next
            der += c[k + 1] * math.sqrt((k + 1) / 2.0) * g_curr
        g_prev, g_curr = g_curr, g_next
        big = np.maximum(np.abs(g_curr), np.abs(g_prev))
        mask = big > 1e100
        if np.any(mask):
            f = big[mask]
            g_prev[mask] /= f
            g_curr[mask] /= f
            val[mask] /= f
            der[mask] /= f
            log_scale[mask] += np.log(f)
    gauss = -0.5 * xi * xi
    expo = gauss + log_scale
    with np.errstate(over="ignore", invalid="ignore"):
        mag_v = np.log(np.abs(val) + 1e-300) + expo.real
        mag_d = np.log(np.abs(der) + 1e-300) + expo.real
    if np.any(mag_v > 700) or np.any(mag_d > 700):
        raise EvaluationRangeError("Hermite expansion overflows at the requested point")
    factor = np.exp(expo)
    value = omega ** 0.25 * val * factor
    deriv = omega ** 0.25 * s * der * factor
    if scalar:
        return complex(value[0]), complex(deriv[0])
    return value, deriv
