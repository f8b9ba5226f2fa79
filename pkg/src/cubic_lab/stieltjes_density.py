"""Density ``rho_n(t) = Im E_n^+(-1/t) / pi`` on the cut and its Stieltjes transform.

The density is sampled at the nodes of Gauss-Legendre panels in ``ln t``,
so the bulk integrals are Gauss sums.  Two model pieces close the range:

* ``(0, t_min]``: ``rho = t^{-1/5} (c + c2 t^{4/5} + c3 t^{8/5})`` with ``c``
  fixed by the large-coupling limit and ``c2, c3`` fitted on the first
  decade, integrated by tanh-sinh quadrature;
* ``[t_max, inf)``: the fitted tunnelling law ``p t^q e^{-A t}``, with an
  incomplete-gamma majorant as its error budget.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import mpmath
import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from ._runtime import thread_count
from .model import CutParameter
from .spectrum import boundary_limit, limit_eigenvalue

__all__ = [
    "DensityTable",
    "TunnelingFit",
    "IntegralResult",
    "DensityError",
    "density_grid",
    "sample_density",
    "tunneling_fit",
    "tunneling_action",
    "dispersion_value",
    "moments",
    "small_t_slope",
]


class DensityError(RuntimeError):
    """A density integral cannot meet its error budget or a fit is unreliable."""


def density_grid(t_min: float = 1e-3, t_max: float = 40.0, window=(10.0, 40.0),
                 panels_per_decade: int = 2, window_panels: int = 2, order: int = 8):
    """Gauss-Legendre panels in ``ln t``.

    The panels below ``window[0]`` are log-uniform with
    ``panels_per_decade`` per decade; the fit window gets its own
    ``window_panels`` panels so it holds ``window_panels * order`` samples.

    Returns
    -------
    DensityGrid
        Nodes and weights for ``int f(t) dt`` over ``[t_min, t_max]``.
    """
    if not 0 < t_min < window[0] < window[1] <= t_max:
        raise ValueError("need 0 < t_min < window[0] < window[1] <= t_max")
    decades = math.log10(window[0] / t_min)
    k = max(1, int(math.ceil(decades * panels_per_decade)))
    edges = list(np.exp(np.linspace(math.log(t_min), math.log(window[0]), k + 1)))
    edges += list(np.exp(np.linspace(math.log(window[0]), math.log(window[1]), window_panels + 1)))[1:]
    if t_max > window[1]:
        edges.append(t_max)
    x, w = np.polynomial.legendre.leggauss(order)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        la, lb = math.log(a), math.log(b)
        u = 0.5 * (lb - la) * x + 0.5 * (lb + la)
        t = np.exp(u)
        ts.append(t)
        ws.append(0.5 * (lb - la) * w * t)
    return DensityGrid(np.concatenate(ts), np.concatenate(ws), float(edges[0]), float(edges[-1]))


class DensityGrid(NamedTuple):
    """Quadrature nodes, weights and the interval ``[lo, hi]`` they cover."""

    t: np.ndarray
    weights: np.ndarray
    lo: float
    hi: float


@dataclass
class DensityTable:
    """Samples ``(t_i, rho_i)`` with rotation-plateau deviations and quadrature weights.

    ``errors[i]`` holds the message of a failed sample (``rho`` is then NaN).
    """

    n: int
    t: np.ndarray
    rho: np.ndarray
    plateau: np.ndarray
    weights: np.ndarray
    errors: list = field(default_factory=list)
    tol: float = 1e-9
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.lo is None:
            self.lo = float(self.t[0])
        if self.hi is None:
            self.hi = float(self.t[-1])

    @property
    def ok(self) -> bool:
        return all(e is None for e in self.errors) and bool(np.all(self.rho > 0))

    @property
    def t_min(self) -> float:
        return float(self.t[0])

    @property
    def t_max(self) -> float:
        return float(self.t[-1])

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        buf.write(f"# interval {self.lo!r} {self.hi!r}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "rho", "plateau", "weight", "error"])
        for t, r, p, w, e in zip(self.t, self.rho, self.plateau, self.weights, self.errors):
            wr.writerow([repr(float(t)), repr(float(r)), repr(float(p)), repr(float(w)), e or ""])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n: int = 0, tol: float = 1e-9) -> "DensityTable":
        lo = hi = None
        for line in io.StringIO(text):
            if line.startswith("# interval"):
                lo, hi = (float(v) for v in line.split()[2:4])
        rows = [r for r in csv.reader(line for line in io.StringIO(text) if not line.startswith("#"))]
        body = rows[1:]
        t = np.array([float(r[0]) for r in body])
        rho = np.array([float(r[1]) for r in body])
        pl = np.array([float(r[2]) for r in body])
        w = np.array([float(r[3]) for r in body])
        err = [r[4] or None for r in body]
        return cls(n, t, rho, pl, w, err, tol, lo, hi)

    def sidecar(self, fit: "TunnelingFit | None" = None, extra: dict | None = None) -> dict:
        out = {"n": self.n, "samples": len(self.t), "t_min": self.t_min, "t_max": self.t_max,
               "max_plateau": float(np.nanmax(self.plateau)), "tol": self.tol,
               "failed_samples": sum(e is not None for e in self.errors)}
        if fit is not None:
            out["tunneling_fit"] = fit.to_dict()
        if extra:
            out.update(extra)
        return out


def _sample(n, t, tol):
    try:
        bv = boundary_limit(1.0 / t, +1, n, tol)
        return bv.energy.imag / math.pi, bv.stability / math.pi, None
    except Exception as exc:  # recorded per sample; the table flags the gap
        return float("nan"), float("nan"), f"{type(exc).__name__}: {exc}"


def sample_density(n: int, grid=None, weights=None, tol: float = 1e-9,
                   threads: int | None = None) -> DensityTable:
    """Sample ``rho_n`` at ``grid`` (default :func:`density_grid`).

    Without ``weights`` a custom grid gets trapezoidal weights in ``ln t``.
    Failed or non-positive samples are flagged in ``errors``.
    """
    if grid is None:
        grid = density_grid()
    lo = hi = None
    if isinstance(grid, DensityGrid):
        grid, weights, lo, hi = grid
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly increasing")
    if weights is None:
        u = np.log(grid)
        du = np.diff(u)
        weights = np.zeros_like(grid)
        weights[:-1] += 0.5 * du
        weights[1:] += 0.5 * du
        weights *= grid
    workers = thread_count() if threads is None else threads
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda t: _sample(n, float(t), tol), grid))
    rho = np.array([r[0] for r in results])
    plateau = np.array([r[1] for r in results])
    errors = [r[2] for r in results]
    for i, r in enumerate(rho):
        if errors[i] is None and not r > 0:
            errors[i] = f"non-positive density {r}"
    return DensityTable(n, grid, rho, plateau, np.asarray(weights, dtype=float), errors, tol, lo, hi)


@dataclass
class TunnelingFit:
    """``ln rho = ln p + q ln t - A t + sum_k c_k t^{-k}`` on ``window``.

    ``corrections`` is empty for the plain tunnelling law.
    """

    p: float
    q: float
    A: float
    window: tuple
    residual: float
    samples: int
    corrections: tuple = ()

    def density(self, t):
        t = np.asarray(t)
        extra = sum(c * t ** -(k + 1) for k, c in enumerate(self.corrections))
        return self.p * t ** self.q * np.exp(-self.A * t + extra)

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "A": self.A, "window": list(self.window),
                "residual": self.residual, "samples": self.samples,
                "corrections": list(self.corrections)}


def tunneling_fit(table, window=(10.0, 40.0), max_residual: float = 5e-2,
                  min_samples: int = 12, corrections: int = 0) -> TunnelingFit:
    """Least-squares fit of the tunnelling law on ``window``.

    ``table`` may be a :class:`DensityTable` or a pair ``(t, rho)``.
    ``corrections > 0`` adds the terms ``c_k t^{-k}``, ``k = 1..corrections``,
    as a diagnostic of the bias that subleading terms put on ``A``.

    Raises
    ------
    DensityError
        Too few samples or RMS residual above ``max_residual``.
    """
    t, rho = (table.t, table.rho) if isinstance(table, DensityTable) else map(np.asarray, table)
    m = (t >= window[0] * (1 - 1e-12)) & (t <= window[1] * (1 + 1e-12)) & (rho > 0)
    if np.count_nonzero(m) < min_samples:
        raise DensityError(f"fit window {window} holds {np.count_nonzero(m)} samples, "
                           f"need {min_samples}")
    tt, yy = t[m], np.log(rho[m])
    cols = [np.ones_like(tt), np.log(tt), -tt] + [tt ** -(k + 1) for k in range(corrections)]
    A_mat = np.vstack(cols).T
    coef, *_ = np.linalg.lstsq(A_mat, yy, rcond=None)
    lnp, q, A = coef[:3]
    resid = float(np.sqrt(np.mean((A_mat @ coef - yy) ** 2)))
    if resid > max_residual:
        raise DensityError(f"tunnelling fit residual {resid:.3g} exceeds {max_residual}")
    return TunnelingFit(float(math.exp(lnp)), float(q), float(A), tuple(window), resid, int(m.sum()),
                        tuple(float(c) for c in coef[3:]))


def tunneling_action() -> float:
    """``2 int_0^1 sqrt(y^2 - y^3) dy`` (equal to 8/15) by adaptive quadrature."""
    val, _ = integrate.quad(lambda y: y * math.sqrt(1.0 - y), 0.0, 1.0, epsabs=1e-14, epsrel=1e-14)
    return 2.0 * val


def small_t_slope(table: DensityTable, decades: float = 1.0) -> float:
    """Log-log slope of ``rho`` over the smallest ``decades`` of the table."""
    m = (table.t <= table.t_min * 10 ** decades) & (table.rho > 0)
    slope, _ = np.polyfit(np.log(table.t[m]), np.log(table.rho[m]), 1)
    return float(slope)


@dataclass
class IntegralResult:
    """Value of a density integral with its error budget."""

    value: complex
    budget: dict

    @property
    def error(self) -> float:
        return float(sum(self.budget.values()))

    def to_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag,
                "budget": dict(self.budget), "error": self.error}


def _kernel_bound(beta: CutParameter) -> float:
    """``sup_{t>0} 1/|1 + beta t|``."""
    if math.cos(beta.argument) >= 0:
        return 1.0
    s = abs(math.sin(beta.argument))
    if s == 0:
        raise ValueError("the kernel is singular on the cut")
    return 1.0 / s


def _integral(table: DensityTable, k: int, beta: CutParameter | None, fit: TunnelingFit,
              tail_tol: float) -> IntegralResult:
    if not table.ok:
        bad = [e for e in table.errors if e]
        raise DensityError(f"density table has {len(bad)} failed samples; first: {bad[0]}")
    bval = 0j if beta is None else beta.value

    def kern(t):
        return np.asarray(t) ** k / (1.0 + bval * np.asarray(t))

    t, rho, w = table.t, table.rho, table.weights
    bulk = complex(np.sum(w * rho * kern(t)))
    # second estimate: spline of ln rho in ln t on a fine composite rule
    cs = CubicSpline(np.log(t), np.log(rho))
    uu = np.linspace(math.log(t[0]), math.log(t[-1]), 20001)
    tt = np.exp(uu)
    alt = complex(np.trapezoid(np.exp(cs(uu)) * kern(tt) * tt, uu))
    lo_edge, hi_edge = table.lo, table.hi
    extra_lo = _head_piece(table, k, bval, t[0], lo_edge, cs)
    extra_hi = _hull_piece(fit, k, bval, t[-1], hi_edge)
    alt += extra_lo + extra_hi
    quad_err = abs(bulk - alt)
    plateau_err = float(np.sum(w * table.plateau * np.abs(kern(t))))

    # head (0, lo_edge]: rho ~ t^{-1/5} (c + c2 t^{4/5} + c3 t^{8/5}) with c fixed by
    # the large-coupling limit; the budget is the distance to the model without c3
    c, c2, c3 = _head_model(table)
    kb = 1.0 if beta is None else _kernel_bound(beta)
    with mpmath.workdps(30):
        head = complex(mpmath.quad(lambda s: _head_density(s, c, c2, c3) * s ** k / (1 + bval * s),
                                   [0, lo_edge]))
        diff = mpmath.quad(lambda s: abs(c3) * s ** (k + 1.4), [0, lo_edge])
    head_err = float(diff) * kb

    # tail [hi_edge, inf): fitted law, budget = incomplete-gamma majorant
    kb = 1.0 if beta is None else _kernel_bound(beta)
    with mpmath.workdps(30):
        tail = complex(mpmath.quad(lambda s: fit.p * s ** (fit.q + k) * mpmath.exp(-fit.A * s)
                                   / (1 + bval * s), [hi_edge, mpmath.inf]))
        a = fit.q + k + 1
        tail_bound = float(fit.p * mpmath.gammainc(a, fit.A * hi_edge) / fit.A ** a) * kb
    if tail_bound > tail_tol:
        raise DensityError(f"tail bound {tail_bound:.3g} above {tail_tol:.3g}; extend the grid "
                           f"beyond t = {hi_edge:.3g}")
    value = head + bulk + tail
    budget = {"quadrature": quad_err, "plateau": plateau_err, "head": head_err, "tail": tail_bound}
    return IntegralResult(value, budget)


@lru_cache(maxsize=None)
def _head_coefficient(n: int) -> float:
    """Leading small-t coefficient ``Im(L_n e^{i pi/5}) / pi`` of the density."""
    L = limit_eigenvalue(n).value
    return float((L * np.exp(1j * np.pi / 5)).imag / np.pi)


def _head_model(table: DensityTable, decades: float = 1.0):
    """Coefficients of ``rho t^{1/5} = c + c2 t^{4/5} + c3 t^{8/5}`` near ``t = 0``.

    ``c`` comes from the large-coupling limit eigenvalue; ``c2`` and ``c3`` are a
    least-squares fit over the smallest ``decades`` of the grid.
    """
    c = _head_coefficient(table.n)
    m = table.t <= table.t_min * 10 ** decades
    tt = table.t[m]
    A = np.vstack([tt ** 0.8, tt ** 1.6]).T
    (c2, c3), *_ = np.linalg.lstsq(A, table.rho[m] * tt ** 0.2 - c, rcond=None)
    return c, float(c2), float(c3)


def _head_density(s, c, c2, c3):
    return s ** -0.2 * (c + c2 * s ** 0.8 + c3 * s ** 1.6)


def _head_piece(table, k, bval, t0, lo, cs):
    c, c2, c3 = _head_model(table)
    with mpmath.workdps(20):
        return complex(mpmath.quad(lambda s: _head_density(s, c, c2, c3) * s ** k / (1 + bval * s),
                                   [lo, t0]))


def _hull_piece(fit, k, bval, tn, hi):
    with mpmath.workdps(20):
        return complex(mpmath.quad(lambda s: fit.p * s ** (fit.q + k) * mpmath.exp(-fit.A * s)
                                   / (1 + bval * s), [tn, hi]))


def dispersion_value(table: DensityTable, beta: CutParameter, fit: TunnelingFit | None = None,
                     tail_tol: float = 1e-3):
    """``E_n(0) + beta int rho(t) / (1 + beta t) dt`` with its error budget.

    Returns
    -------
    value : complex
    result : IntegralResult
        Integral and budget (the budget of ``value`` is ``|beta|`` times it).

    Raises
    ------
    ValueError
        On the cut.
    DensityError
        If the tail bound exceeds ``tail_tol``.
    """
    if beta.on_cut:
        raise ValueError("the dispersion integral is defined inside the cut plane")
    fit = fit or tunneling_fit(table)
    res = _integral(table, 0, beta, fit, tail_tol)
    E = (2 * table.n + 1) + beta.value * res.value
    return complex(E), res


def moments(table: DensityTable, kmax: int = 3, fit: TunnelingFit | None = None,
            tail_tol: float = 1e-2) -> list:
    """``int t^k rho(t) dt`` for ``k = 0..kmax`` as :class:`IntegralResult` objects."""
    fit = fit or tunneling_fit(table)
    return [_integral(table, k, None, fit, tail_tol) for k in range(kmax + 1)]
