"""Zeros of eigenfunctions in the complex plane by the argument principle.

Eigenfunctions are evaluated off the real axis by integrating the
differential equation ``psi'' = (V - E) psi`` along straight segments from a
far point deep inside one of the two decaying sectors.  A truncated Hermite
expansion cannot be used there: away from the real axis its terms grow like
``exp(|Im x| sqrt(2N))`` and cancel catastrophically.  The Galerkin
coefficients still serve as a consistency check through the logarithmic
derivative at the origin.

Both subdominant solutions (right and left sector) are available.  On an
eigenvalue they are proportional, so each segment of a contour may use
whichever is better conditioned there; the phase increments do not depend
on the normalisation.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .hermite_basis import eigenfunction_value
from .model import CutParameter

__all__ = [
    "NodeCountError",
    "NodeInvarianceError",
    "SectorSolutions",
    "HermiteEvaluator",
    "make_evaluator",
    "NodeContour",
    "NodeCount",
    "ClearanceReport",
    "winding_number",
    "count_nodes",
    "strip_clearance",
    "node_invariance",
    "locate_zeros",
    "contour_svg",
]


class NodeCountError(RuntimeError):
    """The argument-principle integral could not be resolved to an integer."""


class NodeInvarianceError(RuntimeError):
    """A node count along a path differs from the level index."""

    def __init__(self, message, waypoint=None, count=None, expected=None):
        super().__init__(message)
        self.waypoint = waypoint
        self.count = count
        self.expected = expected


class SectorSolutions:
    """Subdominant solutions of ``-psi'' + (c2 x^2 + c3 x^3) psi = E psi``.

    Parameters
    ----------
    c2, c3 : complex
        Potential coefficients; ``c3`` must be nonzero.
    E : complex
        Energy.
    cubic_arg : float, optional
        Argument of ``c3`` on the branch in use.  Needed on the cut where
        ``c3`` alone does not fix the side; defaults to ``angle(c3)``.
    action : float
        Real part of the WKB action between the far start point and the
        farthest evaluation point; 30 suppresses the dominant solution by
        ``exp(-60)`` relative to the subdominant one.
    reach : float, optional
        Radius that evaluation points will not exceed.  Fixing it keeps the
        normalisation identical across calls; otherwise it grows on demand
        (which resets the normalisation).
    rtol : float
        Relative tolerance of the integrator.
    """

    def __init__(self, c2, c3, E, cubic_arg=None, action: float = 30.0, rtol: float = 1e-10,
                 reach: float | None = None):
        self.c2 = complex(c2)
        self.c3 = complex(c3)
        if self.c3 == 0:
            raise ValueError("the cubic coefficient must be nonzero")
        self.E = complex(E)
        arg = cmath.phase(self.c3) if cubic_arg is None else float(cubic_arg)
        self.cubic_arg = arg
        self.right_angle = -arg / 5
        self.left_angle = (-arg - 4 * math.pi) / 5
        self.divider = cmath.exp(1j * ((-arg - 2 * math.pi) / 5 + math.pi))
        self.action = float(action)
        self.rtol = float(rtol)
        self._reach = None if reach is None else float(reach)
        self._far = {}
        self._link = None

    @classmethod
    def for_beta(cls, beta: CutParameter, E, **kw):
        return cls(1.0, 1j * beta.sqrt, E, cubic_arg=math.pi / 2 + beta.argument / 2, **kw)

    @classmethod
    def for_limit(cls, E, **kw):
        return cls(0.0, 1j, E, cubic_arg=math.pi / 2, **kw)

    def q(self, x):
        return self.c2 * x * x + self.c3 * x ** 3 - self.E

    def side_of(self, z):
        """``+1`` where the right-sector solution is used, ``-1`` otherwise."""
        return np.where((np.asarray(z) / self.divider).imag < 0, 1, -1)

    def _far_point(self, reach: float, angle: float) -> complex:
        d = cmath.exp(1j * angle)
        r0 = reach + 1.0
        L = r0 + 1.0
        while True:
            r = np.linspace(r0, L, 400)
            q = np.sqrt(self.q(r * d) + 0j) * d
            if np.trapezoid(np.abs(q.real), r) > self.action:
                return L * d
            L *= 1.2

    def evaluate(self, z, side: int, rtol: float | None = None):
        """``(psi, psi')`` of the subdominant solution of one sector.

        The normalisation ``psi = 1`` at the far point is shared by every
        point of the call and of later calls with the same ``reach``.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        angle = self.right_angle if side > 0 else self.left_angle
        reach = self._reach
        if reach is None or np.max(np.abs(z)) > reach:
            reach = max(float(np.max(np.abs(z))), 1.0)
            self._reach = reach
            self._far = {}
            self._link = None
        if side not in self._far:
            self._far[side] = self._far_point(reach, angle)
        xf = self._far[side]
        d = cmath.exp(1j * angle)
        s = cmath.sqrt(self.q(xf))
        if (s * d).real < 0:
            s = -s
        n = len(z)
        y0 = np.concatenate([np.ones(n, complex), np.full(n, -s, dtype=complex)])
        v = z - xf
        c2, c3, E = self.c2, self.c3, self.E

        def rhs(t, y):
            x = xf + t * v
            p = y[:n]
            dp = y[n:]
            return np.concatenate([v * dp, v * ((c2 * x + c3 * x * x) * x - E) * p])

        sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=rtol or self.rtol, atol=1e-300)
        if not sol.success:
            raise NodeCountError(f"sector integration failed: {sol.message}")
        return sol.y[:n, -1], sol.y[n:, -1]

    def __call__(self, z, rtol: float | None = None):
        """Values with the side chosen pointwise; returns ``(psi, psi', side)``.

        Right-sector values are rescaled by ``psi_left(0) / psi_right(0)`` so
        that the result is a single function across the divider.  The
        constant is fixed at the first call (at the default tolerance) and
        reused afterwards.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        side = self.side_of(z)
        psi = np.empty(len(z), complex)
        dpsi = np.empty(len(z), complex)
        if self._reach is None or np.max(np.abs(z)) > self._reach:
            self._reach = max(float(np.max(np.abs(z))), 1.0)
            self._far = {}
            self._link = None
        need_anchor = self._link is None
        for s in (1, -1):
            m = side == s
            pts = z[m]
            if need_anchor:
                pts = np.concatenate([pts, [0j]])
            if len(pts):
                p, d = self.evaluate(pts, s, rtol)
                if need_anchor:
                    if s == 1:
                        anchor_right = p[-1]
                    else:
                        anchor_left = p[-1]
                    p, d = p[:-1], d[:-1]
                psi[m], dpsi[m] = p, d
        if need_anchor:
            self._link = anchor_left / anchor_right
        m = side == 1
        psi[m] *= self._link
        dpsi[m] *= self._link
        return psi, dpsi, side

    def log_derivative_at_origin(self) -> complex:
        p, dp = self.evaluate(np.array([0j]), 1)
        return complex(dp[0] / p[0])


class HermiteEvaluator:
    """Evaluation through the truncated Hermite expansion (harmonic limit only)."""

    def __init__(self, coeffs, omega: float = 1.0):
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.omega = float(omega)

    def side_of(self, z):
        return np.ones(np.shape(np.atleast_1d(z)), dtype=int)

    def __call__(self, z, rtol=None):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        v, d = eigenfunction_value(self.coeffs, self.omega, z, check_disk=False)
        return np.asarray(v), np.asarray(d), self.side_of(z)


def make_evaluator(beta: CutParameter, E, coeffs=None, omega: float = 1.0, **kw):
    """Evaluator for ``psi_beta``: ODE sectors, or Hermite sums at ``beta = 0``."""
    if beta.is_zero:
        if coeffs is None:
            raise ValueError("the harmonic limit needs expansion coefficients")
        return HermiteEvaluator(coeffs, omega)
    return SectorSolutions.for_beta(beta, E, **kw)


@dataclass
class NodeContour:
    """Rectangle ``[-R, R] x [-R, top]`` and its adaptive discretisation.

    ``error_estimate`` is the largest relative evaluation error on the
    contour and ``margin`` the smallest ratio ``|psi| / error``.
    """

    top: float
    R: float
    bottom: float
    points: np.ndarray = field(repr=False, default=None)
    min_abs_psi: float = float("nan")
    error_estimate: float = float("nan")
    margin: float = float("nan")

    @property
    def corners(self):
        t, R, b = self.top, self.R, self.bottom
        return [R + 1j * t, -R + 1j * t, -R + 1j * b, R + 1j * b, R + 1j * t]


@dataclass
class NodeCount:
    """Result of :func:`count_nodes`."""

    count: int
    winding: float
    residual: float
    contour: NodeContour
    max_phase_step: float
    evaluations: int
    retries: int = 0

    def to_dict(self) -> dict:
        c = self.contour
        return {
            "count": self.count,
            "winding": self.winding,
            "residual": self.residual,
            "contour": {"top": c.top, "R": c.R, "bottom": c.bottom,
                        "points": int(len(c.points)) if c.points is not None else 0,
                        "min_abs_psi": c.min_abs_psi, "relative_error": c.error_estimate,
                        "margin": c.margin},
            "max_phase_step": self.max_phase_step,
            "evaluations": self.evaluations,
            "retries": self.retries,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _polyline(corners, h):
    pts = []
    for a, b in zip(corners[:-1], corners[1:]):
        m = max(8, int(math.ceil(abs(b - a) / h)))
        pts.append(a + (b - a) * np.arange(m) / m)
    pts.append(np.array([corners[-1]]))
    return np.concatenate(pts)


def winding_number(evaluator, z, max_rounds: int = 12, max_step: float = 0.8, tol: float = 0.3,
                   max_points: int = 200000):
    """Winding of ``psi`` along the closed polyline ``z`` with adaptive refinement.

    A segment is split while its phase increment exceeds ``max_step`` or the
    trapezoidal prediction of ``log psi`` from ``psi'/psi`` differs from the
    measured increment by more than ``tol``.

    Returns
    -------
    winding : float
    points, psi, dpsi, side : ndarray
        Final discretisation and values.
    max_jump : float
    """
    z = np.asarray(z, dtype=complex)
    psi, dpsi, side = evaluator(z)
    for _ in range(max_rounds):
        ratio, use = _segment_ratios(psi, dpsi, side, z, evaluator)
        dl = np.log(ratio)
        ld = use[1]
        pred = 0.5 * (ld[:-1] + ld[1:]) * np.diff(z)
        bad = (np.abs(dl.imag) > max_step) | (np.abs(pred - dl) > tol)
        if not np.any(bad):
            break
        if len(z) + np.count_nonzero(bad) > max_points:
            break
        idx = np.nonzero(bad)[0]
        mids = 0.5 * (z[idx] + z[idx + 1])
        p2, d2, s2 = evaluator(mids)
        z = np.insert(z, idx + 1, mids)
        psi = np.insert(psi, idx + 1, p2)
        dpsi = np.insert(dpsi, idx + 1, d2)
        side = np.insert(side, idx + 1, s2)
    ratio, _ = _segment_ratios(psi, dpsi, side, z, evaluator)
    dl = np.angle(ratio)
    return float(np.sum(dl) / (2 * math.pi)), z, psi, dpsi, side, float(np.max(np.abs(dl)))


def _segment_ratios(psi, dpsi, side, z, evaluator):
    """Consecutive ratios ``psi(z_{j+1}) / psi(z_j)`` and the log-derivative."""
    return psi[1:] / psi[:-1], (None, dpsi / psi)


def _contour_geometry(beta: CutParameter, E, n_hint: int = 0):
    if beta.is_zero:
        top = 1.0
        R = 1.5 * math.sqrt(abs(E)) + 2.0
    else:
        top = (2.0 / (3.0 * math.sqrt(beta.modulus))) * math.cos(beta.argument / 2)
        roots = np.roots([1j * beta.sqrt, 1.0, 0.0, -complex(E)])
        R = 1.5 * float(np.max(np.abs(roots))) + 2.0
    return top, R


def count_nodes(coeffs, omega: float, beta: CutParameter, E, *, R: float | None = None,
                top: float | None = None, h: float = 0.04, retries: int = 3,
                residual_tol: float = 0.05, check_seed: bool = True,
                rotation: float = 0.0) -> NodeCount:
    """Number of zeros of ``psi_beta`` in the open lower half-plane.

    The contour is the rectangle with top edge on the boundary of the
    zero-free strip, sides at ``+-R`` and bottom at ``-R``; it is traversed
    counterclockwise and the continuous change of ``arg psi`` is tracked.

    Parameters
    ----------
    coeffs : array_like or None
        Galerkin coefficients of the eigenvector.  Used for the harmonic
        limit and, when ``check_seed`` is set, to confirm that the
        expansion and the ODE solution describe the same function.
    omega : float
        Basis frequency of ``coeffs``.
    beta : CutParameter
    E : complex
        Eigenvalue.
    rotation : float
        Rotation ``a`` of the basis: ``coeffs`` expand ``psi(exp(-i a) y)``.
    R, top : float, optional
        Override the default contour geometry.
    h : float
        Initial spacing along the contour.
    retries : int
        Radius enlargements ``R <- 1.1 R`` after an unresolved count.

    Raises
    ------
    NodeCountError
        If the winding stays non-integer or the contour runs too close to a
        zero after all retries.
    """
    ev = make_evaluator(beta, E, coeffs, omega)
    top0, R0 = _contour_geometry(beta, E)
    top = top0 if top is None else top
    R = R0 if R is None else R
    if check_seed and coeffs is not None and isinstance(ev, SectorSolutions):
        _check_seed(ev, coeffs, omega, rotation)
    last = None
    for attempt in range(retries + 1):
        contour = NodeContour(top=top, R=R, bottom=-R)
        z0 = _polyline(contour.corners, h)
        w, z, psi, dpsi, side, jump = winding_number(ev, z0)
        count = int(round(w))
        resid = abs(w - count)
        contour.points = z
        contour.min_abs_psi = float(np.min(np.abs(psi)))
        if isinstance(ev, SectorSolutions):
            coarse, _, _ = ev(z, rtol=1e-8)
            # compare shapes, not normalisations: both runs share the far point
            err = np.abs(coarse - psi)
            contour.error_estimate = float(np.max(err / np.abs(psi)))
            margin = float(np.min(np.abs(psi) / np.maximum(err, 1e-300)))
        else:
            contour.error_estimate = 1e-13 * float(np.max(np.abs(psi)) / np.min(np.abs(psi)))
            margin = 1.0 / contour.error_estimate
        contour.margin = margin
        last = NodeCount(count, w, resid, contour, jump, len(z), attempt)
        if resid <= residual_tol and margin >= 10 and count >= 0:
            return last
        R *= 1.1
    raise NodeCountError(
        f"winding {last.winding:.4f} unresolved after {retries} retries (residual {last.residual:.3g})")


def _check_seed(ev: SectorSolutions, coeffs, omega: float, rotation: float = 0.0,
                tol: float = 1e-4):
    """Compare ``psi'/psi`` at the origin from the expansion and from the ODE."""
    v, d = eigenfunction_value(coeffs, omega, 0.0, check_disk=False)
    if abs(v) < 1e-8 * np.linalg.norm(coeffs):
        return
    ld_h = cmath.exp(1j * rotation) * d / v
    ld_o = ev.log_derivative_at_origin()
    if abs(ld_h - ld_o) > tol * (1 + abs(ld_o)):
        raise NodeCountError(
            f"expansion and ODE disagree at the origin: psi'/psi = {ld_h} vs {ld_o}")


@dataclass
class ClearanceReport:
    """Zero-free checks of the strip and of the two sector wedges.

    ``error_estimate`` is the largest pointwise relative difference between
    two integrator tolerances; a sampled value is trusted to be nonzero when
    it stays below 0.1.
    """

    strip_min: float
    strip_winding: float
    sector_min: float
    sector_windings: tuple
    error_estimate: float
    passed: bool
    location: complex | None = None

    def to_dict(self) -> dict:
        return {k: (str(v) if isinstance(v, complex) else v) for k, v in self.__dict__.items()}


def strip_clearance(coeffs, omega: float, beta: CutParameter, E, *, R: float | None = None,
                    samples: int = 41) -> ClearanceReport:
    """Check that ``psi`` has no zero in the strip and in the two sector wedges.

    The strip is ``|Re x| <= R``, ``0 <= Im x <= (2/(3 sqrt|beta|)) cos(theta/2)``;
    the wedges are ``0 < arg x < (pi - theta)/10`` and
    ``pi - (pi + theta)/10 < arg x < pi`` cut at ``|x| <= R``.  Each region is
    sampled on a grid and its boundary winding must vanish.
    """
    if beta.is_zero:
        raise ValueError("the strip is unbounded in the harmonic limit")
    ev = make_evaluator(beta, E, coeffs, omega)
    top, R0 = _contour_geometry(beta, E)
    R = R0 if R is None else R
    th = beta.argument
    X, Y = np.meshgrid(np.linspace(-R, R, 2 * samples + 1), np.linspace(0.0, top, samples))
    grid = (X + 1j * Y).ravel()
    p, _, _ = ev(grid)
    p_coarse, _, _ = ev(grid, rtol=1e-8)
    mags = np.abs(p)
    err = float(np.max(np.abs(p - p_coarse) / mags))
    k = int(np.argmin(mags))
    strip_min = float(mags[k])
    loc = complex(grid[k])
    rect = [R, -R + 0j, -R + 1j * top, R + 1j * top, R]
    ws, *_ = winding_number(ev, _polyline([complex(c) for c in rect], 0.1))

    wedges = [(0.0, (math.pi - th) / 10), (math.pi - (math.pi + th) / 10, math.pi)]
    sector_min = float("inf")
    windings = []
    for a0, a1 in wedges:
        rr, aa = np.meshgrid(np.linspace(0.05, R, samples), np.linspace(a0, a1, 9)[1:-1])
        pts = (rr * np.exp(1j * aa)).ravel()
        pw, _, _ = ev(pts)
        pwc, _, _ = ev(pts, rtol=1e-8)
        err = max(err, float(np.max(np.abs(pw - pwc) / np.abs(pw))))
        j = int(np.argmin(np.abs(pw)))
        if abs(pw[j]) < sector_min:
            sector_min = float(abs(pw[j]))
            if sector_min < strip_min:
                loc = complex(pts[j])
        boundary = [0j, R * cmath.exp(1j * a0), R * cmath.exp(1j * (a0 + a1) / 2),
                    R * cmath.exp(1j * a1), 0j]
        wz, *_ = winding_number(ev, _polyline(boundary, 0.1))
        windings.append(wz)
    passed = (err < 0.1 and abs(ws) < 0.05
              and all(abs(w) < 0.05 for w in windings))
    return ClearanceReport(strip_min, ws, sector_min, tuple(windings), err, passed,
                           None if passed else loc)


def node_invariance(path, n: int, tol: float = 1e-9, levels=None):
    """Count nodes at every waypoint of ``path`` and require ``n`` each time.

    Parameters
    ----------
    path : ParameterPath
    n : int
    tol : float
        Tolerance passed to the continuation.
    levels : list of LevelValue, optional
        Precomputed levels along the path (continuation is skipped).

    Returns
    -------
    list of (CutParameter, int)

    Raises
    ------
    NodeInvarianceError
        At the first waypoint whose count differs from ``n``.
    """
    from .spectrum import continue_level

    if levels is None:
        levels = continue_level(path, n, tol=tol, checkpoint_every=0)
    report = []
    for lv in levels:
        nc = count_nodes(lv.coeffs, lv.omega, lv.beta, lv.energy, rotation=lv.rotation)
        report.append((lv.beta, nc.count))
        if nc.count != n:
            raise NodeInvarianceError(
                f"node count {nc.count} differs from {n} at beta = {lv.beta}",
                waypoint=lv.beta, count=nc.count, expected=n)
    return report


def locate_zeros(evaluator, lower_left: complex, upper_right: complex, min_size: float = 1e-3,
                 newton_tol: float = 1e-12, max_depth: int = 14):
    """Zeros of ``psi`` inside a rectangle by winding subdivision and Newton.

    Returns
    -------
    list of complex
    """
    found = []

    def rect(a, b):
        return [complex(b.real, a.imag), complex(b.real, b.imag), complex(a.real, b.imag),
                complex(a.real, a.imag), complex(b.real, a.imag)]

    def newton(z0, a, b):
        z = z0
        for _ in range(60):
            p, d, _ = evaluator(np.array([z]))
            step = p[0] / d[0]
            z = z - step
            if abs(step) < newton_tol * max(1.0, abs(z)):
                break
        if a.real - 1e-9 <= z.real <= b.real + 1e-9 and a.imag - 1e-9 <= z.imag <= b.imag + 1e-9:
            return complex(z)
        return complex(z0)

    def visit(a, b, depth):
        size = max(b.real - a.real, b.imag - a.imag)
        w, *_ = winding_number(evaluator, _polyline(rect(a, b), size / 16))
        k = int(round(w))
        if k <= 0:
            return
        if k == 1 and (size < 0.25 or depth >= max_depth):
            found.append(newton(0.5 * (a + b), a, b))
            return
        if size < min_size or depth >= max_depth:
            found.extend([0.5 * (a + b)] * k)
            return
        m = 0.5 * (a + b)
        # small offsets keep subdivision lines away from zeros on grid lines
        m = m + 1e-3 * size * (0.37 + 0.23j)
        visit(a, m, depth + 1)
        visit(complex(m.real, a.imag), complex(b.real, m.imag), depth + 1)
        visit(complex(a.real, m.imag), complex(m.real, b.imag), depth + 1)
        visit(m, b, depth + 1)

    visit(complex(lower_left), complex(upper_right), 0)
    return found


def contour_svg(count: NodeCount, zeros=(), size: int = 480) -> str:
    """SVG drawing of a node contour and located zeros."""
    pts = count.contour.points
    xs = np.concatenate([pts.real, np.real(zeros)]) if len(zeros) else pts.real
    ys = np.concatenate([pts.imag, np.imag(zeros)]) if len(zeros) else pts.imag
    x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
    span = max(x1 - x0, y1 - y0) or 1.0
    pad = 0.05 * span

    def tx(z):
        return ((z.real - x0 + pad) / (span + 2 * pad) * size,
                (y1 + pad - z.imag) / (span + 2 * pad) * size)

    path = " ".join(f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}" for i, (x, y) in enumerate(map(tx, pts)))
    axis_y = tx(0j)[1]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<line x1="0" y1="{axis_y:.2f}" x2="{size}" y2="{axis_y:.2f}" stroke="#bbb"/>',
             f'<path d="{path}" fill="none" stroke="#225" stroke-width="1"/>']
    for z in zeros:
        x, y = tx(complex(z))
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="#c22"/>')
    parts.append(f'<text x="8" y="16" font-size="12">nodes: {count.count}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
