"""Dense eigenvalues of complex non-Hermitian matrices and inverse iteration.

Two backends share one interface:

``"qr"``
    Householder reduction to Hessenberg form followed by the implicitly
    shifted complex QR iteration (Wilkinson shift from the trailing 2x2
    block, exceptional shifts on stagnation, deflation on negligible
    subdiagonals).  Written here in full so that every step is auditable.
``"lapack"``
    ``numpy.linalg.eigvals`` (LAPACK ``zgeev``).  Same algorithm family,
    compiled; this is the default because the spectral sweeps call the
    solver thousands of times.  The test-suite cross-checks both.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hermite_basis import BandedComplexMatrix

__all__ = [
    "EigenPair",
    "SolverReport",
    "AmbiguousShiftError",
    "ConvergenceWarning",
    "hessenberg",
    "qr_eigenvalues",
    "all_eigenvalues",
    "eigenvector_near",
    "default_method",
]

_EPS = np.finfo(float).eps


class AmbiguousShiftError(ValueError):
    """The shift sits nearly halfway between two eigenvalues."""

    def __init__(self, shift, first, second):
        self.shift = shift
        self.candidates = (first, second)
        super().__init__(
            f"shift {shift} is ambiguous between eigenvalues {first} and {second}")


class ConvergenceWarning(RuntimeWarning):
    """QR iteration stopped before every eigenvalue deflated."""


@dataclass
class EigenPair:
    """Eigenvalue with a unit eigenvector and its residual ``||M v - value v||_2``."""

    value: complex
    vector: np.ndarray
    residual: float
    iterations: int = 0


@dataclass
class SolverReport:
    """Diagnostics of one eigenvalue computation."""

    method: str
    iterations: int = 0
    deflations: int = 0
    achieved_tol: float = 0.0
    failed: bool = False
    unconverged: int = 0
    notes: list = field(default_factory=list)


def default_method() -> str:
    """Backend chosen by ``CUBIC_LAB_EIG`` (``lapack`` unless set to ``qr``)."""
    method = os.environ.get("CUBIC_LAB_EIG", "lapack").strip().lower()
    return method if method in ("qr", "lapack") else "lapack"


def _dense(M) -> np.ndarray:
    if isinstance(M, BandedComplexMatrix):
        return M.to_dense()
    A = np.array(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    return A


def balance(A) -> np.ndarray:
    """Diagonal similarity by powers of two equalising row and column norms.

    Non-normal Galerkin matrices lose several digits in QR without it.
    """
    B = _dense(A).copy()
    n = B.shape[0]
    radix = 2.0
    converged = False
    while not converged:
        converged = True
        for i in range(n):
            c = np.sum(np.abs(B[:, i])) - abs(B[i, i])
            r = np.sum(np.abs(B[i, :])) - abs(B[i, i])
            if c == 0.0 or r == 0.0:
                continue
            f = 1.0
            s = c + r
            while c < r / radix:
                c *= radix
                r /= radix
                f *= radix
            while c >= r * radix:
                c /= radix
                r *= radix
                f /= radix
            if (c + r) < 0.95 * s * 1.0 and f != 1.0:
                converged = False
                B[i, :] /= f
                B[:, i] *= f
    return B


def hessenberg(A) -> np.ndarray:
    """Upper Hessenberg form of ``A`` by Householder reflections.

    Returns a new array similar to ``A``.
    """
    H = _dense(A).copy()
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        # H <- (I - 2 v v^*) H (I - 2 v v^*) on the trailing block
        H[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _givens(a: complex, b: complex):
    """Rotation ``G = [[c, s], [-conj(s), c]]`` with ``G @ [a, b] = [r, 0]``."""
    if b == 0:
        return 1.0, 0j
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    na = abs(a)
    nrm = np.hypot(na, abs(b))
    c = na / nrm
    s = (a / na) * np.conj(b) / nrm
    return c, s


def _wilkinson(a, b, c, d):
    """Eigenvalue of ``[[a, b], [c, d]]`` closer to ``d``."""
    tr = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    l1, l2 = tr + disc, tr - disc
    return l1 if abs(l1 - d) < abs(l2 - d) else l2


def qr_eigenvalues(A, tol: float = 0.0, max_iter_per_eig: int = 60):
    """Eigenvalues by Hessenberg reduction and shifted QR.

    Parameters
    ----------
    A : array_like or BandedComplexMatrix
    tol : float
        Relative deflation threshold; ``0`` means machine precision.
    max_iter_per_eig : int
        Iteration cap per eigenvalue before giving up.

    Returns
    -------
    values : ndarray
        All ``N`` eigenvalues (unconverged diagonal entries included and
        flagged in the report).
    report : SolverReport
    """
    H = hessenberg(balance(A))
    n = H.shape[0]
    report = SolverReport(method="qr")
    thresh = max(tol, _EPS)
    norm = np.max(np.abs(H)) if n else 0.0
    hi = n - 1
    its_since = 0
    total_cap = max_iter_per_eig * max(n, 1)
    worst = 0.0
    while hi > 0:
        # locate the active block [lo, hi]
        lo = hi
        while lo > 0:
            sub = abs(H[lo, lo - 1])
            scale = abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])
            if scale == 0.0:
                scale = norm
            if sub <= thresh * scale:
                worst = max(worst, sub / max(norm, 1e-300))
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            report.deflations += 1
            its_since = 0
            continue
        if report.iterations >= total_cap or its_since >= max_iter_per_eig:
            report.failed = True
            report.unconverged = hi + 1
            report.notes.append(f"stalled with active block [{lo}, {hi}]")
            warnings.warn("QR iteration did not converge", ConvergenceWarning, stacklevel=2)
            break
        its_since += 1
        report.iterations += 1
        if its_since % 11 == 0:
            mu = H[hi, hi] + 1.5 * abs(H[hi, hi - 1]) * np.exp(1j * its_since)
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        # implicit single-shift bulge chase on the active block
        x = H[lo, lo] - mu
        y = H[lo + 1, lo]
        for k in range(lo, hi):
            c, s = _givens(x, y)
            cols = slice(max(k - 1, lo), hi + 1)
            r1 = H[k, cols].copy()
            r2 = H[k + 1, cols]
            H[k, cols] = c * r1 + s * r2
            H[k + 1, cols] = -np.conj(s) * r1 + c * r2
            rows = slice(lo, min(k + 3, hi + 1))
            c1 = H[rows, k].copy()
            c2 = H[rows, k + 1]
            H[rows, k] = c * c1 + np.conj(s) * c2
            H[rows, k + 1] = -s * c1 + c * c2
            if k < hi - 1:
                x = H[k + 1, k]
                y = H[k + 2, k]
    report.deflations += 1 if not report.failed else 0
    report.achieved_tol = max(worst, thresh)
    return np.diag(H).copy(), report


def all_eigenvalues(M, tol: float = 1e-13, method: str | None = None):
    """All eigenvalues of a square complex matrix.

    Parameters
    ----------
    M : array_like or BandedComplexMatrix
    tol : float
        Requested relative backward error (QR backend).
    method : {"lapack", "qr"}, optional
        Backend; defaults to :func:`default_method`.

    Returns
    -------
    values : ndarray of complex
    report : SolverReport
    """
    method = method or default_method()
    A = _dense(M)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if method == "qr":
        return qr_eigenvalues(A, tol=min(tol, 1e-13))
    if method != "lapack":
        raise ValueError(f"unknown eigenvalue backend {method!r}")
    values = np.linalg.eigvals(A)
    report = SolverReport(method="lapack", deflations=len(values), achieved_tol=_EPS)
    return values, report


def eigenvector_near(M, shift: complex, tol: float = 1e-12, spectrum=None,
                     max_iter: int = 50, seed: int = 0) -> EigenPair:
    """Inverse iteration for the eigenpair closest to ``shift``.

    Parameters
    ----------
    M : array_like or BandedComplexMatrix
        Band matrices use a banded LU solve.
    shift : complex
    tol : float
        Target residual relative to ``||M||_inf``.
    spectrum : array_like, optional
        Known eigenvalues.  When given, the shift is checked for ambiguity.
    max_iter : int
    seed : int
        Seed of the start vector.

    Raises
    ------
    AmbiguousShiftError
        If the two nearest eigenvalues are nearly equidistant from the shift.
    """
    shift = complex(shift)
    if spectrum is not None:
        ev = np.asarray(spectrum, dtype=complex)
        if len(ev) >= 2:
            d = np.abs(ev - shift)
            order = np.argsort(d)
            d1, d2 = d[order[0]], d[order[1]]
            if d2 - d1 < 0.1 * d2 and abs(ev[order[0]] - ev[order[1]]) > 0:
                raise AmbiguousShiftError(shift, complex(ev[order[0]]), complex(ev[order[1]]))
    banded = isinstance(M, BandedComplexMatrix)
    N = M.dimension if banded else np.asarray(M).shape[0]
    if banded:
        ab = M.to_lapack_banded()
        w = (ab.shape[0] - 1) // 2
        norm = M.norm_inf()
        apply = M.matvec
    else:
        A = _dense(M)
        norm = float(np.max(np.sum(np.abs(A), axis=1)))
        apply = A.__matmul__
    symmetric = banded or bool(np.allclose(A, A.T, rtol=0, atol=0))
    sigma = shift
    scale = max(norm, 1.0)
    for attempt in range(4):
        try:
            if banded:
                ab_s = ab.copy()
                ab_s[w] -= sigma
                solve = (lambda rhs, ab_s=ab_s: scipy.linalg.solve_banded((w, w), ab_s, rhs,
                                                                          check_finite=False))
                solve(np.ones(N, dtype=complex))
            else:
                lu = scipy.linalg.lu_factor(A - sigma * np.eye(N), check_finite=False)
                if np.min(np.abs(np.diag(lu[0]))) == 0:
                    raise np.linalg.LinAlgError("singular")
                solve = (lambda rhs, lu=lu: scipy.linalg.lu_solve(lu, rhs, check_finite=False))
            break
        except (np.linalg.LinAlgError, ValueError):
            sigma = shift + (10.0 ** (attempt - 12)) * scale * (1 + 1j)
    else:
        raise np.linalg.LinAlgError("shifted system is singular for every perturbed shift")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    v /= np.linalg.norm(v)
    value = shift
    residual = np.inf
    it = 0
    with np.errstate(all="ignore"):
        for it in range(1, max_iter + 1):
            w_vec = solve(v)
            nrm = np.linalg.norm(w_vec)
            if not np.isfinite(nrm) or nrm == 0:
                break
            v = w_vec / nrm
            Mv = apply(v)
            if symmetric:
                value = complex(v @ Mv / (v @ v))
            else:
                value = complex(np.vdot(v, Mv))
            residual = float(np.linalg.norm(Mv - value * v))
            if residual <= tol * scale:
                break
    return EigenPair(value, v, residual, it)
