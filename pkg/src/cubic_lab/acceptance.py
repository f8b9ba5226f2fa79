"""Acceptance criteria as callable checks.

Each ``criterion_k`` returns a :class:`CriterionResult`; :func:`run` executes
a selection and :func:`report_lines` formats one line per criterion.  The
same functions back the test suite and ``cubic-lab accept``.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .model import CutParameter, make_frame, polynomial_roots
from .nodes import count_nodes
from .pade import build_pade, evaluate_complex, hankel_report
from .rs_series import rs_coefficients
from .spectrum import (ParameterPath, boundary_limit, continue_level, level, levels,
                       limit_eigenvalue, richardson_derivative, scaling_check)
from .stieltjes_density import (dispersion_value, moments, sample_density, small_t_slope,
                                tunneling_action, tunneling_fit)
from .wkb import identify_zero_line, point_on_line, shoot_eigenvalue, trace_diagram, zero_density

__all__ = ["CriterionResult", "CRITERIA", "run", "report_lines", "golden"]

# Independent reference values (shooting on the ODE, exact rationals).
golden = {
    "E0(1)": 1.29175416197406,
    "L0": 1.15626707198813,
    "L1": 4.10922875280966,
    "e01": Fraction(11, 16),
}


@dataclass
class CriterionResult:
    """Outcome of one acceptance criterion."""

    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0
    budget_seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d} {self.title} ({self.seconds:.1f} s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "seconds": round(self.seconds, 3), "budget_seconds": self.budget_seconds,
                "detail": _plain(self.detail)}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return x


def _neville_at_zero(xs, ys):
    y = list(ys)
    n = len(xs)
    for m in range(1, n):
        for i in range(n - m):
            y[i] = (-xs[i + m] * y[i] + xs[i] * y[i + 1]) / (xs[i] - xs[i + m])
    return y[0]


def criterion_1() -> CriterionResult:
    """Harmonic limit: polynomial extrapolation of ``E_n`` on ``beta = 0.01 / 2^k`` to zero."""
    betas = [0.01 / 2 ** k for k in range(5)]
    table = np.array([[lv.energy for lv in levels(CutParameter(b), 6, tol=1e-11, verify_nodes=False)]
                      for b in betas])
    errs = [abs(_neville_at_zero(betas, table[:, n]) - (2 * n + 1)) for n in range(6)]
    return CriterionResult(1, "harmonic limit", max(errs) <= 1e-4,
                           {"betas": betas, "errors": errs, "tolerance": 1e-4})


def criterion_2() -> CriterionResult:
    """RS anchor: exact ``e_{0,1}`` and a Richardson derivative at ``h = 1e-4``."""
    e01 = rs_coefficients(0, 2)[1]
    deriv = richardson_derivative(0, h=1e-4)
    err = abs(deriv - 11 / 16)
    return CriterionResult(2, "RS anchor", e01 == Fraction(11, 16) and err <= 1e-6,
                           {"e01": e01, "derivative": deriv, "error": err, "tolerance": 1e-6})


def criterion_3() -> CriterionResult:
    """Reality of the spectrum on the positive axis."""
    worst = 0.0
    rows = []
    for m in (0.1, 1.0, 10.0, 100.0):
        for lv in levels(CutParameter(m), 6, verify_nodes=False):
            ratio = abs(lv.energy.imag) / (1 + abs(lv.energy))
            worst = max(worst, ratio)
            rows.append((m, lv.n, lv.energy))
    return CriterionResult(3, "reality on the positive axis", worst <= 1e-8,
                           {"max |Im E|/(1+|E|)": worst, "levels": rows, "tolerance": 1e-8})


def criterion_4() -> CriterionResult:
    """Node labels on the coupling grid."""
    failures = []
    worst = 0.0
    checked = 0
    args = (0.0, math.pi / 2, -math.pi / 2, math.pi - 0.05, -(math.pi - 0.05))
    for m in (0.05, 1.0, 10.0, 100.0):
        for a in args:
            beta = CutParameter(m, a)
            for lv in levels(beta, 6, verify_nodes=False):
                nc = count_nodes(lv.coeffs, lv.omega, beta, lv.energy, rotation=lv.rotation)
                checked += 1
                worst = max(worst, nc.residual)
                if nc.count != lv.n or nc.residual > 0.05:
                    failures.append((str(beta), lv.n, nc.count, nc.residual))
    return CriterionResult(4, "node labeling", not failures,
                           {"checked": checked, "max winding residual": worst, "failures": failures})


def criterion_5(j_max: int = 12) -> CriterionResult:
    """Diagonal Pade convergence at ``beta = 1`` and negative poles."""
    beta = CutParameter(1.0)
    detail = {}
    ok = True
    for n in range(3):
        series = rs_coefficients(n)
        E = level(beta, n, tol=1e-11, verify_nodes=False).energy.real
        errs = []
        poles_ok = True
        for j in range(1, j_max + 1):
            ap = build_pade(series, j, check_stieltjes=False)
            errs.append(abs(evaluate_complex(ap, beta) - E) / abs(E))
            roots = [complex(r) for r in ap.q_roots]
            poles_ok &= all(abs(r.imag) <= 1e-12 * max(1.0, abs(r)) and r.real < 0 for r in roots)
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
        good = decreasing and errs[-1] <= 1e-4 and poles_ok
        ok &= good
        detail[f"n={n}"] = {"relative errors": errs, "decreasing": decreasing,
                            "Q roots negative": poles_ok, f"error at j={j_max}": errs[-1]}
    return CriterionResult(5, "Pade convergence", ok, detail)


def criterion_6() -> CriterionResult:
    """Both Hankel families positive through order 10."""
    detail = {}
    ok = True
    for n in range(3):
        rep = hankel_report(rs_coefficients(n), 10)
        detail[f"n={n}"] = {"positive": rep.positive, "first failure": rep.first_failure()}
        ok &= rep.positive
    return CriterionResult(6, "Hankel positivity", ok, detail)


def criterion_7() -> CriterionResult:
    """Rotation plateau and sign of the boundary values."""
    rows = []
    ok = True
    for b in (0.1, 1.0):
        for n in range(4):
            bv = boundary_limit(b, +1, n)
            good = bv.stability <= 1e-6 and bv.energy.imag > 0
            ok &= good
            rows.append({"b": b, "n": n, "E": bv.energy, "plateau": bv.stability, "ok": good})
    return CriterionResult(7, "boundary limits", ok, {"rows": rows})


@lru_cache(maxsize=2)
def _density_table(n: int = 0):
    return sample_density(n)


def criterion_8() -> CriterionResult:
    """Moments of the density against the perturbation coefficients."""
    table = _density_table(0)
    series = rs_coefficients(0, 5)
    rows = []
    ok = table.ok
    for k, res in enumerate(moments(table, 3)):
        exact = abs(float(series[k + 1]))
        rel = abs(res.value.real - exact) / exact
        ok &= rel <= 0.02
        rows.append({"k": k, "moment": res.value.real, "exact": exact, "relative": rel,
                     "budget": res.error})
    return CriterionResult(8, "moment identities", ok, {"rows": rows, "samples": len(table.t)})


def criterion_9() -> CriterionResult:
    """Tunnelling slope from the fit window and the action integral."""
    table = _density_table(0)
    fit = tunneling_fit(table)
    A = tunneling_action()
    ok = 0.53 <= fit.A <= 0.54 and abs(A - 8 / 15) <= 1e-12
    diag = tunneling_fit(table, corrections=1)
    return CriterionResult(9, "tunneling slope", ok,
                           {"fitted A": fit.A, "q": fit.q, "residual": fit.residual,
                            "action integral error": abs(A - 8 / 15),
                            "A with 1/t correction (diagnostic)": diag.A})


def criterion_10() -> CriterionResult:
    """Small-t exponent of the density."""
    slope = small_t_slope(_density_table(0))
    return CriterionResult(10, "small-t law", abs(slope + 0.2) <= 0.02, {"slope": slope})


def _shooting_limit(n: int, guess: complex) -> complex:
    return shoot_eigenvalue(0.0, 1j, guess, cubic_arg=math.pi / 2)


def criterion_11() -> CriterionResult:
    """Large-coupling scaling against the limit operator."""
    rows = []
    ok = True
    for n in range(4):
        lim = limit_eigenvalue(n)
        shot = _shooting_limit(n, lim.value)
        cross = abs(shot - lim.value)
        ok &= cross <= 1e-6
        for arg in (0.0, math.pi / 2):
            pt = scaling_check([1e7], n, arg, tol=1e-10, limit=lim)[0]
            ok &= pt.deviation <= 1e-3
            rows.append({"n": n, "arg": arg, "L": lim.value, "shooting": shot,
                         "cross-check": cross, "scaled": pt.scaled, "deviation": pt.deviation})
    return CriterionResult(11, "large-beta scaling", ok, {"rows": rows})


def criterion_12(n_max: int = 3) -> CriterionResult:
    """Continuation around a closed rectangle returns every level."""
    path = ParameterPath.rectangle(0.5, 5.0, -2.8, 2.8)
    rows = []
    ok = True
    for n in range(n_max + 1):
        traj = continue_level(path, n, tol=1e-10, checkpoint_every=10)
        E0, E1 = traj[0].energy, traj[-1].energy
        counts = sorted({lv.node_count for lv in traj if lv.node_count is not None})
        diff = abs(E1 - E0)
        good = diff <= 1e-6 * max(1.0, abs(E0)) and counts == [n]
        ok &= good
        rows.append({"n": n, "start": E0, "end": E1, "difference": diff, "node counts": counts,
                     "waypoints": len(traj)})
    return CriterionResult(12, "monodromy loop", ok, {"rows": rows})


def criterion_13() -> CriterionResult:
    """Dispersion integral against the direct level at ``beta = 1``."""
    beta = CutParameter(1.0)
    E_disp, res = dispersion_value(_density_table(0), beta)
    E = level(beta, 0, tol=1e-11, verify_nodes=False).energy
    rel = abs(E_disp - E) / abs(E)
    budget_rel = abs(beta.value) * res.error / abs(E)
    ok = rel <= 0.02 and budget_rel <= 0.02
    return CriterionResult(13, "dispersion identity", ok,
                           {"dispersion": E_disp, "level": E, "relative": rel,
                            "budget (relative)": budget_rel, "budget": res.budget})


def criterion_14() -> CriterionResult:
    """Turning points of ``i y^3 = 1`` and the zero-density closed form."""
    expected = [cmath.exp(-1j * math.pi / 6), cmath.exp(-5j * math.pi / 6), cmath.exp(1j * math.pi / 2)]
    roots = polynomial_roots(1j, 0.0, 0.0, -1.0).roots
    tp_err = max(min(abs(r - e) for r in roots) for e in expected)
    frame = make_frame("energy-dominant", 1.0, CutParameter(1.0))
    diagram = trace_diagram(frame, drop_h_terms=True)
    tp, line, _ = identify_zero_line(diagram)
    y0 = point_on_line(diagram, line, 0.05)
    est = zero_density(1.0, 1.0, y0, frame.h, y_plus=tp)
    ok = tp_err <= 1e-10 and est.relative_difference <= 0.01
    return CriterionResult(14, "WKB geometry", ok,
                           {"turning point error": tp_err, "zero line departure": line.departure,
                            "N0": est.N0, "loop": est.loop,
                            "relative difference": est.relative_difference})


TITLES = {
    1: "harmonic limit", 2: "RS anchor", 3: "reality on the positive axis", 4: "node labeling",
    5: "Pade convergence", 6: "Hankel positivity", 7: "boundary limits", 8: "moment identities",
    9: "tunneling slope", 10: "small-t law", 11: "large-beta scaling", 12: "monodromy loop",
    13: "dispersion identity", 14: "WKB geometry",
}

CRITERIA = {
    1: (criterion_1, 60), 2: (criterion_2, 60), 3: (criterion_3, 300), 4: (criterion_4, 900),
    5: (criterion_5, 600), 6: (criterion_6, 300), 7: (criterion_7, 300), 8: (criterion_8, 1200),
    9: (criterion_9, 600), 10: (criterion_10, 1200), 11: (criterion_11, 600),
    12: (criterion_12, 600), 13: (criterion_13, 1200), 14: (criterion_14, 60),
}


def run_one(number: int) -> CriterionResult:
    """Run a criterion, timing it; exceptions turn into failures with the message."""
    fn, budget = CRITERIA[number]
    t0 = time.perf_counter()
    try:
        res = fn()
    except Exception as exc:  # a crash is a failed criterion, reported with its cause
        res = CriterionResult(number, TITLES[number], False,
                              {"error": f"{type(exc).__name__}: {exc}"})
    res.seconds = time.perf_counter() - t0
    res.budget_seconds = budget
    return res


def run(numbers=None) -> list:
    """Run the selected criteria (all by default) in order."""
    numbers = sorted(CRITERIA) if numbers is None else list(numbers)
    return [run_one(k) for k in numbers]


def report_lines(results) -> list:
    return [r.line() for r in results]
