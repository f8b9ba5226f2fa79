import json
import math

import numpy as np
import pytest

from cubic_lab.hermite_basis import eigenfunction_value
from cubic_lab.model import CutParameter
from cubic_lab.nodes import (SectorSolutions, contour_svg, count_nodes, locate_zeros, make_evaluator,
                             strip_clearance)
from cubic_lab.spectrum import level, levels

BETA = CutParameter(1.0)


@pytest.fixture(scope="module")
def low_levels():
    return levels(BETA, 4, tol=1e-11, verify_nodes=False)


def test_sector_solution_solves_ode(low_levels):
    ss = SectorSolutions.for_beta(BETA, low_levels[1].energy, reach=6.0)
    z, h = np.array([0.4 - 0.9j]), 1e-4
    for side in (1, -1):
        p, d = ss.evaluate(z, side)
        _, dp = ss.evaluate(z + h, side)
        _, dm = ss.evaluate(z - h, side)
        second = (dp - dm) / (2 * h)
        assert second[0] == pytest.approx(ss.q(z[0]) * p[0], rel=1e-6)


def test_sides_proportional_only_on_eigenvalues(low_levels):
    z = np.array([0.3 - 0.5j, -0.8 - 1.1j, 1.2 - 0.2j])

    def spread(E):
        ss = SectorSolutions.for_beta(BETA, E, reach=4.0)
        pr, _ = ss.evaluate(z, 1)
        pl, _ = ss.evaluate(z, -1)
        r = pr / pl
        return float(np.max(np.abs(r - r[0])) / abs(r[0]))

    assert spread(low_levels[0].energy) < 1e-6
    assert spread(low_levels[0].energy + 0.3) > 1e-2


def test_log_derivative_matches_expansion(low_levels):
    lv = low_levels[2]
    v, d = eigenfunction_value(lv.coeffs, lv.omega, 0.0)
    ss = SectorSolutions.for_beta(BETA, lv.energy)
    assert ss.log_derivative_at_origin() == pytest.approx(complex(d / v), rel=1e-6)


@pytest.mark.parametrize("n", range(4))
def test_counts_label_levels(low_levels, n):
    lv = low_levels[n]
    nc = count_nodes(lv.coeffs, lv.omega, BETA, lv.energy, rotation=lv.rotation)
    assert nc.count == n and nc.residual < 0.05
    json.loads(nc.to_json())


def test_count_off_axis():
    beta = CutParameter(10.0, 2.5)
    lv = level(beta, 3, verify_nodes=False)
    nc = count_nodes(lv.coeffs, lv.omega, beta, lv.energy, rotation=lv.rotation)
    assert nc.count == 3


def test_located_zeros_are_mirror_symmetric(low_levels):
    lv = low_levels[2]
    ev = make_evaluator(BETA, lv.energy)
    zeros = locate_zeros(ev, -4 - 4j, 4 - 1e-3j)
    assert len(zeros) == 2
    p, d, _ = ev(np.array(zeros))
    assert np.all(np.abs(p / d) < 1e-9)
    # PT symmetry for real beta: zeros are invariant under z -> -conj(z)
    a, b = sorted(zeros, key=lambda z: z.real)
    assert a == pytest.approx(-b.conjugate(), abs=1e-8)
    assert all(z.imag < 0 for z in zeros)
    svg = contour_svg(count_nodes(lv.coeffs, lv.omega, BETA, lv.energy), zeros)
    assert svg.startswith("<svg") and svg.count("<circle") >= 2


def test_strip_is_zero_free(low_levels):
    lv = low_levels[3]
    rep = strip_clearance(lv.coeffs, lv.omega, BETA, lv.energy)
    assert rep.passed and rep.location is None


def test_harmonic_limit_needs_coefficients():
    with pytest.raises(ValueError):
        make_evaluator(CutParameter(0.0), 1.0)
    with pytest.raises(ValueError):
        SectorSolutions(1.0, 0.0, 1.0)
    assert math.isfinite(abs(SectorSolutions.for_limit(1.156).log_derivative_at_origin()))
