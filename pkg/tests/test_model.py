import cmath
import math

import numpy as np
import pytest

import oracles
from cubic_lab.model import (FRAME_KINDS, CutParameter, Potential, make_frame, polynomial_roots,
                             turning_points)


@pytest.mark.parametrize("text, modulus, argument", [
    ("1.0@0", 1.0, 0.0),
    ("2.5@3.14159", 2.5, 3.14159),
    ("1.0@pi", 1.0, math.pi),
    ("1.0@-pi", 1.0, -math.pi),
    ("3", 3.0, 0.0),
])
def test_parse(text, modulus, argument):
    b = CutParameter.parse(text)
    assert (b.modulus, b.argument) == (modulus, argument)
    assert CutParameter.parse(str(b)) == b


def test_cut_sides_are_distinct():
    up, down = CutParameter.parse("1@pi"), CutParameter.parse("1@-pi")
    assert up != down and up.on_cut and down.on_cut
    assert up.sqrt == pytest.approx(1j) and down.sqrt == pytest.approx(-1j)
    assert up.conjugate() == down


@pytest.mark.parametrize("bad", ["-1@0", "1@4", "nan@0", "1@x"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        CutParameter.parse(bad)


def test_potential_and_derivative():
    p = Potential(CutParameter(4.0, 0.3))
    x, h = 0.7 - 0.2j, 1e-6
    assert p.value(x) == pytest.approx(x * x + 1j * cmath.sqrt(4 * cmath.exp(0.3j)) * x ** 3)
    assert p.derivative(x) == pytest.approx((p.value(x + h) - p.value(x - h)) / (2 * h), rel=1e-8)


@pytest.mark.parametrize("beta", [CutParameter(1.0), CutParameter(0.3, 2.0), CutParameter(50.0, -1.2)])
def test_turning_points_match_companion_oracle(beta):
    E = 2.0 + 0.5j
    tp = turning_points(Potential(beta), E)
    ref = oracles.turning_points_oracle(1j * beta.sqrt, 1.0, 0.0, -E)
    assert len(tp) == 3
    for r in ref:
        assert min(abs(r - t) for t in tp) < 1e-10 * max(1, abs(r))
    assert max(tp.residuals) < 1e-10


def test_roots_sorted_by_argument():
    roots = polynomial_roots(1j, 0, 0, -1).roots
    args = [cmath.phase(r) for r in roots]
    assert args == sorted(args)


@pytest.mark.parametrize("kind", FRAME_KINDS)
def test_frames_are_exact_rescalings(kind):
    beta, E = CutParameter(3.0, 0.4), 5.0 - 1.0j
    f = make_frame(kind, E, beta)
    ys = np.array([0.3 + 0.1j, -0.7 + 0.2j, 1.1 - 0.5j])
    lhs = Potential(beta).value(f.from_frame(ys)) - E
    if kind == "beta-large":
        # energy stays unscaled in this frame: P(y) - beta^{-1/5} E
        rhs = f.frame_polynomial(ys) + f.lam - E * beta.power(-0.2)
    else:
        rhs = f.frame_polynomial(ys)
        assert abs(f.lam) == pytest.approx(1.0)
    ratio = lhs / rhs
    assert np.allclose(ratio, ratio[0], rtol=1e-12)
    # -d^2/dx^2 = -x_map^{-2} d^2/dy^2 carries the same overall factor
    h2 = f.h ** 2 if kind != "beta-large" else 1.0
    assert ratio[0] * h2 * f.kinetic_phase == pytest.approx(f.x_map ** -2, rel=1e-12)


def test_frame_rejects_unknown_kind():
    with pytest.raises(ValueError):
        make_frame("nope", 1.0, CutParameter(1.0))
