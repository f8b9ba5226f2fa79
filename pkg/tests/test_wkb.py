import cmath
import json
import math

import mpmath
import numpy as np
import pytest

import oracles
from cubic_lab.model import CutParameter, make_frame
from cubic_lab.spectrum import level
from cubic_lab.wkb import (WKBError, appendix_ladder, asymptotic_directions, diagram_svg,
                           hausdorff_distance, identify_zero_line, point_on_line, quantized_energy,
                           shoot_eigenvalue, sibuya_directions, trace_diagram, tunneling_action_integral,
                           zero_count_ladder, zero_density)


@pytest.fixture(scope="module")
def diagram():
    frame = make_frame("energy-dominant", 1.0, CutParameter(1.0))
    return trace_diagram(frame, drop_h_terms=True)


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def test_sibuya_directions_match_unbounded_lines():
    sib = np.sort(_wrap(sibuya_directions()))
    asy = np.sort(_wrap(asymptotic_directions(1j)))
    np.testing.assert_allclose(sib, asy, atol=1e-14)


def test_turning_points_and_lines(diagram):
    expected = [cmath.exp(-1j * math.pi / 6), cmath.exp(-5j * math.pi / 6), 1j]
    for e in expected:
        assert min(abs(t - e) for t in diagram.turning_points) < 1e-12
    assert diagram.y_plus == pytest.approx(expected[0]) and diagram.y_minus == pytest.approx(expected[1])
    lines = list(diagram.all_lines())
    assert len(lines) == 9
    for ln in lines:
        # Re S = 0 along the trace
        assert ln.max_real_action < 1e-9
        if ln.kind == "asymptotic":
            assert ln.angle_error < 1e-3
    bounded = [ln for ln in lines if ln.kind == "bounded"]
    assert len(bounded) == 2  # y+ -> y- traced from both ends
    json.loads(diagram.to_json())


def test_mirror_symmetry(diagram):
    # Q(-conj y) = conj Q(y) for lam = 1: the diagram is symmetric under y -> -conj(y)
    pts = np.concatenate([ln.points for ln in diagram.all_lines()])
    small = pts[np.abs(pts) < 3]
    mirrored = -small.conj()
    d = np.array([np.min(np.abs(pts - z)) for z in mirrored[::25]])
    assert np.max(d) < 0.02


def test_step_refinement_converges():
    frame = make_frame("energy-dominant", 1.0, CutParameter(1.0))
    a = trace_diagram(frame, drop_h_terms=True, step=0.01)
    b = trace_diagram(frame, drop_h_terms=True, step=0.005)
    la = next(ln for ln in a.all_lines() if ln.kind == "bounded")
    lb = next(ln for ln in b.all_lines() if ln.kind == "bounded")
    assert hausdorff_distance(la, lb) < 1e-5


def test_zero_line_and_density(diagram):
    tp, line, sector = identify_zero_line(diagram)
    assert tp == pytest.approx(cmath.exp(-1j * math.pi / 6))
    assert math.degrees(line.departure) == pytest.approx(170.0, abs=1e-6)
    y0 = point_on_line(diagram, line, 0.05)
    assert abs(y0 - tp) == pytest.approx(0.05, rel=1e-9)
    est = zero_density(1.0, 1.0, y0, 1.0, y_plus=tp)
    assert est.N0 == pytest.approx(2 / (math.pi * math.sqrt(3)) * 0.05 ** 1.5, rel=1e-12)
    # straight-segment oracle for (1/pi) |int_{y+}^{y0} sqrt(Q)|, Q = i y^3 - 1
    d = y0 - tp
    phase = cmath.sqrt(3j * tp ** 2)
    with mpmath.workdps(25):
        f = lambda s: mpmath.sqrt(s) * mpmath.sqrt((1j * (tp + s * d) ** 3 - 1) / (s * d) / phase ** 2)
        val = complex(mpmath.quad(f, [0, 1])) * phase * cmath.sqrt(d) * d
    assert est.loop == pytest.approx(abs(val) / math.pi, rel=1e-8)
    with pytest.raises(WKBError):
        zero_density(1.0, 1.0, tp + 0.05, 1.0, y_plus=tp)


def test_shooting_against_oracle():
    L0 = shoot_eigenvalue(0.0, 1j, 1.15, cubic_arg=math.pi / 2)
    assert L0 == pytest.approx(oracles.limit_oracle(0, 1.15), rel=1e-11)


def test_quantized_energy_matches_galerkin():
    beta = CutParameter(1.0)
    assert quantized_energy(beta, 4) == pytest.approx(level(beta, 4, tol=1e-11).energy, rel=1e-10)
    with pytest.raises(ValueError):
        quantized_energy(CutParameter(1.0, 0.5), 0)


def test_action_integral():
    assert tunneling_action_integral() == pytest.approx(8 / 15, abs=1e-15)


def test_svg(diagram):
    svg = diagram_svg(diagram)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_appendix_ladder_bounded():
    rep = appendix_ladder()
    assert rep.passed and rep.ratio < rep.limit


def test_zero_count_scales_with_inverse_h():
    rep = zero_count_ladder()
    assert rep.passed
    assert all(v > 0 for v in rep.values)
