"""Semiclassical geometry in a scaling frame.

For the frame polynomial ``Q(y) = c3 y^3 + c2 y^2 - lam`` the WKB solutions
behave like ``exp(+-S(y)/h)`` with ``S(y) = int_{y_t}^y sqrt(Q)``.  Zeros of
eigenfunctions accumulate where the two exponentials balance, that is on the
curves ``Re S = 0`` issuing from the turning points ``y_t``; these are the
anti-Stokes lines traced here.  Far away ``S ~ (2/5) sqrt(c3) y^{5/2}``, so
the unbounded lines approach the directions ``(pi - arg c3 + 2 pi m) / 5``,
which for ``c3 = i`` are the Sibuya directions ``(4j - 3) pi / 10``.

The branch of ``sqrt(Q)`` is carried by continuity along each trace.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .model import CutParameter, ScalingFrame, make_frame, polynomial_roots

__all__ = [
    "AntiStokesLine",
    "AntiStokesDiagram",
    "Sector",
    "DensityEstimate",
    "AppendixReport",
    "LadderReport",
    "WKBError",
    "trace_diagram",
    "asymptotic_directions",
    "sibuya_directions",
    "far_axis_sectors",
    "identify_zero_line",
    "point_on_line",
    "zero_density",
    "loop_integral",
    "appendix_bound_check",
    "appendix_ladder",
    "zero_count_ladder",
    "quantized_energy",
    "shoot_eigenvalue",
    "hausdorff_distance",
    "tunneling_action_integral",
    "diagram_svg",
]


class WKBError(RuntimeError):
    """A geometric precondition fails (point off a line, trace stalls)."""


def sibuya_directions() -> np.ndarray:
    """``(4j - 3) pi / 10`` for ``j = 1..5``."""
    return np.array([(4 * j - 3) * math.pi / 10 for j in range(1, 6)])


def asymptotic_directions(c3: complex) -> np.ndarray:
    """Directions ``(pi - arg c3 + 2 pi m) / 5`` of unbounded lines, ``m = 0..4``."""
    a = cmath.phase(c3)
    return np.array([(math.pi - a + 2 * math.pi * m) / 5 for m in range(5)])


def _wrap(a):
    return (np.asarray(a) + math.pi) % (2 * math.pi) - math.pi


@dataclass(eq=False)
class AntiStokesLine:
    """One traced line.

    Attributes
    ----------
    start : complex
        Turning point the line issues from.
    points : ndarray
        Polyline, first point ``start``.
    tangents : ndarray
        Unit tangents at the points (used for Hermite densification).
    action : ndarray
        ``S`` along the trace; ``Re S`` vanishes on the line.
    kind : {"bounded", "asymptotic"}
    end : complex or None
        Turning point reached by a bounded line.
    direction : float or None
        Index into :func:`asymptotic_directions` for an asymptotic line.
    angle_error : float or None
        Distance of the final argument from that direction.
    departure : float
        Local departure angle at ``start``.
    """

    start: complex
    points: np.ndarray = field(repr=False)
    tangents: np.ndarray = field(repr=False)
    action: np.ndarray = field(repr=False)
    kind: str
    end: complex | None
    direction: int | None
    angle_error: float | None
    departure: float

    @property
    def max_real_action(self) -> float:
        return float(np.max(np.abs(self.action.real)))

    def to_dict(self) -> dict:
        return {"start": [self.start.real, self.start.imag], "kind": self.kind,
                "end": None if self.end is None else [self.end.real, self.end.imag],
                "direction": self.direction, "angle_error": self.angle_error,
                "departure": self.departure,
                "points": [[p.real, p.imag] for p in self.points]}


@dataclass
class AntiStokesDiagram:
    """Turning points and the three lines from each of them.

    ``lower`` holds ``(y_plus, y_minus)`` below ``Im y = C h^{2/5}`` and
    ``upper`` the remaining turning point.
    """

    frame: ScalingFrame
    lam: complex
    c3: complex
    c2: complex
    turning_points: tuple
    lower: tuple
    upper: complex
    lines: dict = field(repr=False)
    radius: float = 0.0

    def q(self, y):
        return self.c3 * y ** 3 + self.c2 * y ** 2 - self.lam

    @property
    def y_plus(self) -> complex:
        return self.lower[0]

    @property
    def y_minus(self) -> complex:
        return self.lower[1]

    def all_lines(self):
        for tp in self.turning_points:
            yield from self.lines[tp]

    def to_dict(self) -> dict:
        return {"lam": [self.lam.real, self.lam.imag], "c3": [self.c3.real, self.c3.imag],
                "c2": [self.c2.real, self.c2.imag],
                "turning_points": [[t.real, t.imag] for t in self.turning_points],
                "y_plus": [self.y_plus.real, self.y_plus.imag],
                "y_minus": [self.y_minus.real, self.y_minus.imag],
                "lines": [ln.to_dict() for ln in self.all_lines()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def _branch(value, previous):
    """``sqrt(value)`` on the branch closest to ``previous``."""
    s = np.sqrt(complex(value))
    return s if abs(s - previous) <= abs(s + previous) else -s


def _segment_integral(q, a, b, sa):
    """``int_a^b sqrt(Q)`` along the chord, the branch continued from ``sa`` at ``a``.

    Returns the integral and the branch value at ``b``.
    """
    d = b - a
    total = 0j
    prev = sa
    # nodes in increasing order so the branch can be followed
    for x, w in zip(_GL_X, _GL_W):
        y = a + 0.5 * (x + 1) * d
        prev = _branch(q(y), prev)
        total += w * prev
    sb = _branch(q(b), prev)
    return 0.5 * d * total, sb


def _trace(q, dq, tp, others, departure, scale, far, step, max_steps=200000):
    """Trace the line ``Re S = 0`` from turning point ``tp`` leaving at ``departure``."""
    eps = 1e-3 * scale
    u = eps * cmath.exp(1j * departure)
    y = tp + u
    s = cmath.sqrt(q(y))
    S = _local_action(q, tp, y)
    for _ in range(4):
        delta = -S.real / s
        dS, s = _segment_integral(q, y, y + delta, s)
        y += delta
        S += dS
    # orientation: move away from the turning point
    tangent = 1j / s
    sigma = 1.0 if (tangent * u.conjugate()).real > 0 else -1.0
    pts, tans, acts = [tp, y], [cmath.exp(1j * departure)] * 2, [0j, S]
    for _ in range(max_steps):
        dist_other = min((abs(y - o) for o in others), default=np.inf)
        h = min(step * max(scale, abs(y)), 0.3 * dist_other)
        h = max(h, 1e-6 * scale)
        t1 = sigma * 1j / s
        t1 /= abs(t1)
        ymid = y + 0.5 * h * t1
        smid = _branch(q(ymid), s)
        t2 = sigma * 1j / smid
        t2 /= abs(t2)
        y_new = y + h * t2
        dS, s_new = _segment_integral(q, y, y_new, s)
        S_new = S + dS
        for _ in range(3):
            if abs(S_new.real) < 1e-14 * max(1.0, abs(S_new)):
                break
            delta = -S_new.real / s_new
            dS2, s_fix = _segment_integral(q, y_new, y_new + delta, s_new)
            y_new += delta
            S_new += dS2
            s_new = s_fix
        y, s, S = y_new, s_new, S_new
        tan = sigma * 1j / s
        pts.append(y)
        tans.append(tan / abs(tan))
        acts.append(S)
        for o in others:
            if abs(y - o) < max(1e-4 * scale, 2e-3 * abs(o - tp)):
                pts.append(o)
                tans.append(tans[-1])
                acts.append(S)
                return pts, tans, acts, "bounded", o
        if abs(y) > far:
            return pts, tans, acts, "asymptotic", None
    raise WKBError(f"trace from {tp} stalled after {max_steps} steps")


def trace_diagram(frame: ScalingFrame, lam: complex | None = None, drop_h_terms: bool = False,
                  far: float = 60.0, step: float = 0.01) -> AntiStokesDiagram:
    """Trace the anti-Stokes lines of ``Q = c3 y^3 + c2 y^2 - lam``.

    Parameters
    ----------
    frame : ScalingFrame
        Supplies ``c3`` (``frame.cubic``), ``c2`` (``frame.quadratic``) and
        the default ``lam``.
    lam : complex, optional
        Spectral parameter on the frame's unit circle; ``Re lam > 0``.
    drop_h_terms : bool
        Drop the ``h^{2/5} y^2`` term (the limiting polynomial).
    far : float
        Lines are followed to ``|y| = far * scale`` with ``scale`` the
        largest turning-point modulus.
    step : float
        Step as a fraction of ``max(scale, |y|)``.

    Raises
    ------
    ValueError
        If ``Re lam <= 0``.
    """
    lam = frame.lam if lam is None else complex(lam)
    if lam.real <= 0:
        raise ValueError("the frame analysis needs Re lam > 0")
    c3 = complex(frame.cubic)
    c2 = 0j if drop_h_terms else complex(frame.quadratic)
    roots = polynomial_roots(c3, c2, 0.0, -lam).roots
    level = frame.strip_constant * frame.h ** 0.4
    lower = sorted([r for r in roots if r.imag < level], key=lambda r: -r.real)
    upper = [r for r in roots if r.imag >= level]
    if len(lower) != 2:
        # fall back on the two lowest roots
        srt = sorted(roots, key=lambda r: r.imag)
        lower = sorted(srt[:2], key=lambda r: -r.real)
        upper = [srt[2]]
    scale = max(abs(r) for r in roots)

    def q(y):
        return c3 * y ** 3 + c2 * y ** 2 - lam

    def dq(y):
        return 3 * c3 * y ** 2 + 2 * c2 * y

    lines = {}
    for tp in roots:
        others = [r for r in roots if r is not tp and abs(r - tp) > 0]
        a = cmath.phase(dq(tp))
        deps = [float(_wrap((math.pi - a) / 3 + 2 * math.pi * k / 3)) for k in range(3)]
        traced = []
        for dep in deps:
            pts, tans, acts, kind, end = _trace(q, dq, tp, others, dep, scale, far * scale, step)
            direction = angle_error = None
            if kind == "asymptotic":
                dirs = asymptotic_directions(c3)
                diff = np.abs(_wrap(cmath.phase(pts[-1]) - dirs))
                direction = int(np.argmin(diff))
                angle_error = float(diff[direction])
            traced.append(AntiStokesLine(tp, np.array(pts), np.array(tans), np.array(acts), kind,
                                         end, direction, angle_error, dep))
        lines[tp] = traced
    return AntiStokesDiagram(frame, lam, c3, c2, tuple(roots), tuple(lower), upper[0], lines,
                             far * scale)


def _densify(line: AntiStokesLine, sub: int = 16) -> np.ndarray:
    """Cubic Hermite resampling of a trace using its tangents."""
    p = line.points
    t = line.tangents
    out = [p[0]]
    for i in range(len(p) - 1):
        a, b = p[i], p[i + 1]
        L = abs(b - a)
        ta, tb = t[i] * L, t[i + 1] * L
        for k in range(1, sub + 1):
            s = k / sub
            h00 = 2 * s ** 3 - 3 * s ** 2 + 1
            h10 = s ** 3 - 2 * s ** 2 + s
            h01 = -2 * s ** 3 + 3 * s ** 2
            h11 = s ** 3 - s ** 2
            out.append(h00 * a + h10 * ta + h01 * b + h11 * tb)
    return np.array(out)


def _point_polyline_distance(z, poly):
    a, b = poly[:-1], poly[1:]
    d = b - a
    L2 = np.maximum(np.abs(d) ** 2, 1e-300)
    s = np.clip(((z - a) * d.conjugate()).real / L2, 0.0, 1.0)
    return float(np.min(np.abs(a + s * d - z)))


def hausdorff_distance(a: AntiStokesLine, b: AntiStokesLine, radius: float | None = None,
                       sub: int = 16) -> float:
    """Symmetric Hausdorff distance of two traces inside ``|y| <= radius``.

    Both traces are densified by cubic Hermite interpolation first.
    """
    pa, pb = _densify(a, sub), _densify(b, sub)
    r = np.inf if radius is None else radius
    d1 = max(_point_polyline_distance(z, pb) for z in a.points[np.abs(a.points) <= r])
    d2 = max(_point_polyline_distance(z, pa) for z in b.points[np.abs(b.points) <= r])
    return max(d1, d2)


def _inside(polygon: np.ndarray, z: complex) -> bool:
    """Point-in-polygon test by the winding of the closed polyline."""
    v = polygon - z
    ang = np.angle(np.roll(v, -1) / v)
    return abs(np.sum(ang)) > math.pi


@dataclass
class Sector:
    """Open sector at a turning point between two consecutive unbounded lines."""

    turning_point: complex
    lines: tuple
    contains_positive_axis: bool
    contains_negative_axis: bool
    other_turning_points_inside: int

    def to_dict(self) -> dict:
        return {"turning_point": [self.turning_point.real, self.turning_point.imag],
                "lines": list(self.lines), "contains_positive_axis": self.contains_positive_axis,
                "contains_negative_axis": self.contains_negative_axis,
                "other_turning_points_inside": self.other_turning_points_inside}


def far_axis_sectors(diagram: AntiStokesDiagram) -> list:
    """Sectors attached to ``y_plus`` or ``y_minus`` bounded by two unbounded lines.

    Each sector is closed by the arc at the tracing radius, sweeping
    counterclockwise (as seen from the turning point) from the first line
    to the second.
    """
    out = []
    R = diagram.radius
    for tp in diagram.lower:
        lines = sorted(diagram.lines[tp], key=lambda ln: ln.departure)
        for i in range(3):
            l1, l2 = lines[i], lines[(i + 1) % 3]
            if l1.kind != "asymptotic" or l2.kind != "asymptotic":
                continue
            a1 = cmath.phase(l1.points[-1])
            a2 = cmath.phase(l2.points[-1])
            sweep = (a2 - a1) % (2 * math.pi)
            arc = R * np.exp(1j * (a1 + np.linspace(0, sweep, 200)))
            poly = np.concatenate([l1.points, arc, l2.points[::-1]])
            pos = _inside(poly, 0.9 * R)
            neg = _inside(poly, -0.9 * R)
            others = sum(_inside(poly, o) for o in diagram.turning_points if o != tp)
            out.append(Sector(tp, (lines.index(l1), lines.index(l2)), pos, neg, int(others)))
    return out


def identify_zero_line(diagram: AntiStokesDiagram):
    """The line ``L`` opposite a far-axis sector, where zeros accumulate.

    Returns
    -------
    turning_point : complex
    line : AntiStokesLine
    sector : Sector
        The clean sector (far real axis inside, no other turning point).

    Raises
    ------
    WKBError
        If no sector of ``y_plus`` or ``y_minus`` contains the far real axis.
    """
    for sec in far_axis_sectors(diagram):
        if (sec.contains_positive_axis or sec.contains_negative_axis) and sec.other_turning_points_inside == 0:
            lines = sorted(diagram.lines[sec.turning_point], key=lambda ln: ln.departure)
            idx = ({0, 1, 2} - set(sec.lines)).pop()
            return sec.turning_point, lines[idx], sec
    raise WKBError("no sector at the lower turning points contains the far real axis")


def _local_action(q, tp, y, dps=30):
    """``int_{tp}^{y} sqrt(Q)`` along the chord with the branch continued from ``y``."""
    ref = cmath.sqrt(q(y))

    def f(t):
        z = tp + t * (y - tp)
        return complex(mpmath.sqrt(q(complex(z))))

    with mpmath.workdps(dps):
        # sqrt(Q) = sqrt(Q(y)) * sqrt(Q(z)/Q(y)); the ratio stays off the cut near the chord
        val = mpmath.quad(lambda t: mpmath.sqrt(q(complex(tp + t * (y - tp))) / q(y)), [0, 1])
    return complex(val) * ref * (y - tp)


def point_on_line(diagram: AntiStokesDiagram, line: AntiStokesLine, distance: float) -> complex:
    """Point of ``line`` at ``distance`` from its turning point, polished onto ``Re S = 0``."""
    pts = line.points
    r = np.abs(pts - line.start)
    k = int(np.searchsorted(r, distance))
    if k >= len(pts):
        raise WKBError("line shorter than the requested distance")
    a0 = cmath.phase(pts[k] - line.start)
    tp = line.start

    def g(a):
        return _local_action(diagram.q, tp, tp + distance * cmath.exp(1j * a)).real

    a1 = a0 + 1e-3
    g0, g1 = g(a0), g(a1)
    for _ in range(50):
        if g1 == g0:
            break
        a2 = a1 - g1 * (a1 - a0) / (g1 - g0)
        a0, g0 = a1, g1
        a1, g1 = a2, g(a2)
        if abs(g1) < 1e-15:
            break
    return tp + distance * cmath.exp(1j * a1)


def loop_integral(q, tp, y0, nodes: int = 96) -> complex:
    """``(1/(2 pi i)) * oint sqrt(Q)`` around the circle through ``y0`` centred at ``tp``.

    The loop starts and ends at ``y0``; ``sqrt(Q)`` is continued along it,
    so it changes sign once.  Written as ``sqrt(y - tp) * sqrt(R(y))`` with
    ``R = Q / (y - tp)`` analytic and nonvanishing inside the circle.
    """
    d = abs(y0 - tp)
    a0 = cmath.phase(y0 - tp)
    x, w = np.polynomial.legendre.leggauss(nodes)
    th = a0 + math.pi * (x + 1)
    y = tp + d * np.exp(1j * th)
    R = q(y) / (y - tp)
    R0 = complex(q(tp + 1e-8 * d) / (1e-8 * d))
    sqrtR = cmath.sqrt(R0) * np.sqrt(R / R0)
    sqrt_lin = math.sqrt(d) * np.exp(0.5j * th)
    dy = 1j * d * np.exp(1j * th)
    total = np.sum(w * sqrt_lin * sqrtR * dy) * math.pi
    return complex(total / (2j * math.pi))


@dataclass
class DensityEstimate:
    """Zero-density estimate near a turning point.

    ``N0`` is the closed leading-order value, ``loop`` the numeric loop
    integral and ``correction = loop - N0``.
    """

    N0: float
    h: float
    predicted_count: float
    y_plus: complex
    y0: complex
    loop: float
    correction: float

    @property
    def relative_difference(self) -> float:
        return abs(self.correction) / self.loop

    def to_dict(self) -> dict:
        return {"N0": self.N0, "h": self.h, "predicted_count": self.predicted_count,
                "y_plus": [self.y_plus.real, self.y_plus.imag], "y0": [self.y0.real, self.y0.imag],
                "loop": self.loop, "correction": self.correction,
                "relative_difference": self.relative_difference}


def zero_density(b: float, lam: complex, y0: complex, h: float, y_plus: complex | None = None,
                 line_tol: float = 1e-6) -> DensityEstimate:
    """``N0 = 2 b^{1/12} |y_plus - y0|^{3/2} / (pi sqrt 3)`` with its loop-integral check.

    Parameters
    ----------
    b : float
        Modulus of the coupling; the polynomial is ``i sqrt(b) y^3 - lam``.
    lam : complex
    y0 : complex
        Point on the zero line issuing from ``y_plus``.
    h : float
        Semiclassical parameter; the predicted count is ``N0 / h``.
    y_plus : complex, optional
        Defaults to ``b^{-1/6} e^{i(2 arg lam - pi)/6}``, polished as a root.

    Raises
    ------
    WKBError
        If ``y0`` is farther than ``line_tol`` from the line ``Re S = 0``.
    """
    c3 = 1j * math.sqrt(b)
    lam = complex(lam)

    def q(y):
        return c3 * y ** 3 - lam

    if y_plus is None:
        guess = b ** (-1 / 6) * cmath.exp(1j * (2 * cmath.phase(lam) - math.pi) / 6)
        roots = polynomial_roots(c3, 0.0, 0.0, -lam).roots
        y_plus = min(roots, key=lambda r: abs(r - guess))
    S = _local_action(q, y_plus, y0)
    off = abs(S.real) / abs(cmath.sqrt(q(y0)))
    if off > line_tol:
        raise WKBError(f"y0 lies {off:.3g} off the anti-Stokes line")
    d = abs(y_plus - y0)
    N0 = 2 * b ** (1 / 12) / (math.pi * math.sqrt(3)) * d ** 1.5
    loop = abs(loop_integral(q, y_plus, y0))
    return DensityEstimate(N0, h, N0 / h, complex(y_plus), complex(y0), loop, loop - N0)


def tunneling_action_integral() -> float:
    """``2 int_0^1 sqrt(y^2 - y^3) dy`` by tanh-sinh quadrature."""
    with mpmath.workdps(30):
        return float(2 * mpmath.quad(lambda y: y * mpmath.sqrt(1 - y), [0, 1]))


@dataclass
class AppendixReport:
    """Largest ``h |phi'/phi|`` away from ``delta h``-disks around zeros."""

    h: float
    delta: float
    cleared_max: float
    inside_min: float | None
    zeros: int
    samples: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def appendix_bound_check(evaluator, frame: ScalingFrame, delta: float = 0.5, zeros=None,
                         box=None, grid: int = 41) -> AppendixReport:
    """Sample ``h |phi'/phi|`` with ``phi(y) = psi(x_map y)`` on a grid in ``y``.

    Parameters
    ----------
    evaluator : callable
        ``evaluator(x) -> (psi, psi', ...)`` in the original variable, as
        built by :func:`cubic_lab.nodes.make_evaluator`.
    frame : ScalingFrame
    delta : float
        Grid points closer than ``delta h`` to a zero are excluded.
    zeros : sequence of complex, optional
        Zeros of ``psi`` in ``x``; located in the box when omitted.
    box : tuple, optional
        ``(lower_left, upper_right)`` in ``y``; defaults to the lower half of
        the disk holding the turning points, with margin.
    """
    from .nodes import locate_zeros

    roots = polynomial_roots(frame.cubic, frame.quadratic, 0.0, -frame.lam).roots
    s = max(abs(r) for r in roots)
    if box is None:
        box = (complex(-1.6 * s, -1.2 * s), complex(1.6 * s, 0.2 * s))
    lo, hi = box
    if zeros is None:
        corners = [frame.from_frame(lo), frame.from_frame(hi),
                   frame.from_frame(complex(lo.real, hi.imag)), frame.from_frame(complex(hi.real, lo.imag))]
        xr = [c.real for c in corners]
        xi = [c.imag for c in corners]
        zeros = locate_zeros(evaluator, complex(min(xr) - 0.1, min(xi) - 0.1),
                             complex(max(xr) + 0.1, min(max(xi), -1e-9)))
    zy = np.array([frame.to_frame(z) for z in zeros], dtype=complex)
    gx = np.linspace(lo.real, hi.real, grid)
    gy = np.linspace(lo.imag, hi.imag, grid)
    Y = (gx[None, :] + 1j * gy[:, None]).ravel()
    if len(zy):
        dist = np.min(np.abs(Y[:, None] - zy[None, :]), axis=1)
        Y = Y[dist >= delta * frame.h]
    psi, dpsi, *_ = evaluator(frame.from_frame(Y))
    vals = frame.h * np.abs(frame.x_map * dpsi / psi)
    inside = None
    if len(zy):
        probe = zy + 0.1 * delta * frame.h
        p2, d2, *_ = evaluator(frame.from_frame(probe))
        inside = float(np.min(frame.h * np.abs(frame.x_map * d2 / p2)))
    return AppendixReport(float(frame.h), float(delta), float(np.max(vals)), inside, len(zy), len(Y))


@dataclass
class LadderReport:
    """Ladder of a scalar diagnostic against the semiclassical parameter ``h``."""

    label: str
    parameters: list
    h: list
    values: list
    ratio: float
    limit: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def appendix_ladder(moduli=(10.0, 100.0, 1000.0), n: int = 2, delta: float = 0.5,
                    limit: float = 3.0) -> LadderReport:
    """:func:`appendix_bound_check` along a ladder of positive couplings.

    ``passed`` holds when the cleared-set maxima vary by less than ``limit``.
    """
    from .nodes import make_evaluator
    from .spectrum import level

    hs, vals = [], []
    for m in moduli:
        beta = CutParameter(float(m), 0.0)
        lv = level(beta, n, verify_nodes=False)
        frame = make_frame("energy-dominant", lv.energy, beta)
        rep = appendix_bound_check(make_evaluator(beta, lv.energy), frame, delta)
        hs.append(rep.h)
        vals.append(rep.cleared_max)
    ratio = max(vals) / min(vals)
    return LadderReport("h*max|phi'/phi|", list(moduli), hs, vals, ratio, limit, ratio < limit)


def _bs_integral(beta: CutParameter, E: complex) -> complex:
    """``int sqrt(V - E) dx`` between the two lower turning points, along the chord."""
    c3 = 1j * beta.sqrt
    roots = sorted(polynomial_roots(c3, 1.0, 0.0, -complex(E)).roots, key=lambda r: r.imag)
    xa, xb = sorted(roots[:2], key=lambda r: r.real)
    x3 = roots[2]
    d = xb - xa
    mid = xa + 0.5 * d
    ref = cmath.sqrt(-c3 * (mid - x3))

    def f(t):
        x = xa + t * d
        return mpmath.sqrt(t * (1 - t)) * mpmath.sqrt(-c3 * (x - x3) / ref ** 2)

    with mpmath.workdps(20):
        val = complex(mpmath.quad(f, [0, 0.5, 1]))
    return val * ref * d * d


def quantized_energy(beta: CutParameter, n: int, tol: float = 1e-11) -> complex:
    """Level ``n`` for ``beta > 0`` from WKB quantization polished by shooting.

    The guess solves ``|int sqrt(V - E) dx| = pi (n + 1/2)`` between the lower
    turning points; the polish is :func:`shoot_eigenvalue`.
    Intended for high levels, where the Galerkin matrix is ill conditioned.
    """
    from .nodes import SectorSolutions

    if beta.argument != 0 or beta.is_zero:
        raise ValueError("quantized_energy is restricted to the positive coupling axis")
    target = math.pi * (n + 0.5)
    E0 = (2 * n + 1.0) * 1.0
    E1 = E0 * 1.5
    f0 = abs(_bs_integral(beta, E0)) - target
    f1 = abs(_bs_integral(beta, E1)) - target
    for _ in range(60):
        if f1 == f0:
            break
        E0, E1 = E1, E1 - f1 * (E1 - E0) / (f1 - f0)
        f0, f1 = f1, abs(_bs_integral(beta, E1)) - target
        if abs(f1) < 1e-10 * target:
            break

    return shoot_eigenvalue(1.0, 1j * beta.sqrt, complex(E1), tol=tol,
                            cubic_arg=math.pi / 2 + beta.argument / 2)


def shoot_eigenvalue(c2: complex, c3: complex, E0: complex, tol: float = 1e-11,
                     cubic_arg: float | None = None, max_iter: int = 60) -> complex:
    """Eigenvalue of ``-psi'' + (c2 x^2 + c3 x^3) psi = E psi`` near ``E0`` by shooting.

    Secant iteration on the Wronskian of the two subdominant solutions
    (integrated in from their sectors), normalised by the solution values
    and taken midway between the two lower turning points, where both
    solutions are of comparable size.
    """
    from .nodes import SectorSolutions

    def mismatch(E):
        roots = sorted(polynomial_roots(c3, c2, 0.0, -complex(E)).roots, key=lambda r: r.imag)
        xm = np.array([0.5 * (roots[0] + roots[1])])
        ev = SectorSolutions(c2, c3, E, cubic_arg=cubic_arg, rtol=1e-12)
        pr, dr = ev.evaluate(xm, 1)
        pl, dl = ev.evaluate(xm, -1)
        return complex(dr[0] * pl[0] - dl[0] * pr[0]) / complex(pr[0] * pl[0])

    a, b = complex(E0), complex(E0) * (1 + 1e-4) + 1e-6
    fa, fb = mismatch(a), mismatch(b)
    for _ in range(max_iter):
        if fb == fa:
            break
        a, b = b, b - fb * (b - a) / (fb - fa)
        fa, fb = fb, mismatch(b)
        if abs(b - a) < tol * max(1.0, abs(b)):
            break
    return complex(b)


def zero_count_ladder(levels_=(8, 16, 32), beta: CutParameter | None = None, fraction: float = 0.5,
                      band: float = 0.1, limit: float = 0.2) -> LadderReport:
    """Count zeros near the zero line against ``1/h`` over a ladder of levels.

    For each level the energy-dominant frame gives ``h``; zeros of ``psi``
    within ``band`` (in ``y``) of the traced zero line between its turning
    point and the point at ``fraction`` of its length are counted.  The
    normalised counts ``h * count`` should agree across the ladder within
    ``limit`` (relative), and approach ``(1/pi)|int sqrt(Q)|`` along the
    segment.
    """
    from .nodes import locate_zeros, make_evaluator

    beta = beta or CutParameter(1.0, 0.0)
    hs, vals, params = [], [], []
    for n in levels_:
        E = quantized_energy(beta, n)
        frame = make_frame("energy-dominant", E, beta)
        diag = trace_diagram(frame, step=0.005)
        tp, line, _ = identify_zero_line(diag)
        if line.kind == "bounded":
            seg = line.points
        else:
            seg = line.points[np.abs(line.points) <= 2 * max(abs(t) for t in diag.turning_points)]
        arc = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(seg)))])
        seg = seg[arc <= fraction * arc[-1]]
        xs = frame.from_frame(seg)
        pad = band * abs(frame.x_map) + 0.2
        lo = complex(np.min(xs.real) - pad, np.min(xs.imag) - pad)
        hi = complex(np.max(xs.real) + pad, min(np.max(xs.imag) + pad, -1e-9))
        zeros = locate_zeros(make_evaluator(beta, E), lo, hi)
        zy = np.array([frame.to_frame(z) for z in zeros])
        near = [z for z in zy if _point_polyline_distance(z, seg) <= band]
        hs.append(frame.h)
        vals.append(frame.h * len(near))
        params.append(n)
    ratio = max(vals) / min(vals) - 1 if min(vals) > 0 else float("inf")
    return LadderReport("h*count", params, hs, vals, ratio, limit, ratio <= limit)


def diagram_svg(diagram: AntiStokesDiagram, size: int = 480, window: float = 2.5) -> str:
    """SVG of the turning points, traced lines and Sibuya rays."""
    scale = max(abs(t) for t in diagram.turning_points)
    W = window * scale

    def tx(z):
        return ((z.real + W) / (2 * W) * size, (W - z.imag) / (2 * W) * size)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<line x1="0" y1="{size / 2}" x2="{size}" y2="{size / 2}" stroke="#ddd"/>',
             f'<line x1="{size / 2}" y1="0" x2="{size / 2}" y2="{size}" stroke="#ddd"/>']
    for a in asymptotic_directions(diagram.c3):
        x, y = tx(1.5 * W * cmath.exp(1j * a))
        parts.append(f'<line x1="{size / 2}" y1="{size / 2}" x2="{x:.2f}" y2="{y:.2f}" '
                     'stroke="#cce" stroke-dasharray="4,4"/>')
    for ln in diagram.all_lines():
        pts = ln.points[np.abs(ln.points) <= 1.5 * W]
        d = " ".join(f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}" for i, (x, y) in enumerate(map(tx, pts)))
        color = "#c22" if ln.kind == "bounded" else "#225"
        parts.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    for t in diagram.turning_points:
        x, y = tx(t)
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="#000"/>')
    parts.append("</svg>")
    return "\n".join(parts)
