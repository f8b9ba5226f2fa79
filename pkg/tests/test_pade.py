import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy.interpolate import pade as scipy_pade

from cubic_lab.model import CutParameter
from cubic_lab.pade import (PadeStructureError, build_pade, epsilon_value, evaluate, evaluate_complex,
                            hankel_report)
from cubic_lab.rs_series import rs_coefficients


def test_against_float_pade():
    s = rs_coefficients(0, 9)
    c = [float(x) for x in s.coefficients]
    p, q = scipy_pade(c[:7], 3, 3)
    ap = build_pade(s, 3)
    z = 0.4
    assert evaluate_complex(ap, CutParameter(z)) == pytest.approx(1 + z * p(z) / q(z), rel=1e-10)


def test_exact_matching_and_normalisation():
    ap = build_pade(rs_coefficients(1), 6)
    assert ap.exact and ap.q[0] == 1 and len(ap.p) == len(ap.q) == 7
    c = list(rs_coefficients(1).coefficients)
    # P - F Q = O(beta^{2j+1})
    for m in range(13):
        conv = sum(c[m - i] * ap.q[i] for i in range(min(m, 6) + 1))
        assert conv == (ap.p[m] if m <= 6 else 0)


def test_epsilon_cross_check():
    s = rs_coefficients(0, 11)
    ap = build_pade(s, 5)
    beta = 0.8 + 0.3j
    eps = complex(epsilon_value(list(s.coefficients), beta, 5))
    val = evaluate_complex(ap, CutParameter(abs(beta), math.atan2(beta.imag, beta.real)))
    assert val == pytest.approx(1 + beta * eps, rel=1e-12)


def test_high_precision_mode_agrees_with_exact():
    s = rs_coefficients(0, 25)
    exact = build_pade(s, 8)
    floaty = build_pade(s, 8, exact_max_j=4, precision_bits=320)
    assert not floaty.exact
    b = CutParameter(2.0, 1.0)
    assert evaluate_complex(floaty, b) == pytest.approx(evaluate_complex(exact, b), rel=1e-30 + 1e-14)


def test_stieltjes_poles_negative():
    ap = build_pade(rs_coefficients(2), 10)
    assert all(r < 0 for r in ap.q_roots)


def test_non_stieltjes_series_rejected():
    # F = 1 / (1 - beta) has its pole at +1
    with pytest.raises(PadeStructureError):
        build_pade([Fraction(1)] * 5, 2)
    assert build_pade([Fraction(1)] * 5, 2, check_stieltjes=False).degenerate


def test_degenerate_rational_series():
    # F = 1 / (1 + beta) is reproduced exactly by [1/1]
    c = [Fraction((-1) ** k) for k in range(9)]
    ap = build_pade(c, 4)
    assert ap.degenerate
    with mpmath.workdps(30):
        assert complex(evaluate(ap, CutParameter(3.0))) == pytest.approx(1 + 3 / 4)


def test_cut_rejected_and_argument_checks():
    ap = build_pade(rs_coefficients(0), 2)
    with pytest.raises(ValueError):
        evaluate(ap, CutParameter(1.0, math.pi))
    with pytest.raises(ValueError):
        build_pade(rs_coefficients(0, 4), 3)


def test_conjugation_symmetry():
    ap = build_pade(rs_coefficients(0), 7)
    b = CutParameter(5.0, 2.0)
    assert evaluate_complex(ap, b.conjugate()) == pytest.approx(evaluate_complex(ap, b).conjugate())


def test_hankel_against_float_determinants():
    # moments of exp(-t): k!
    a = [math.factorial(k) for k in range(12)]
    rep = hankel_report(a, 6)
    assert rep.positive and rep.first_failure() is None
    for j in range(1, 6):
        H = np.array([[a[i + k] for k in range(j)] for i in range(j)], dtype=float)
        assert float(rep.dets0[j - 1]) == pytest.approx(np.linalg.det(H), rel=1e-8)


def test_hankel_detects_failure():
    rep = hankel_report([1, 1, 1, 1], 2)  # point mass: H^(0)_2 = 0
    assert not rep.positive
    assert rep.first_failure() == (2, 0)
    assert hankel_report(rs_coefficients(0, 20), 10).positive
