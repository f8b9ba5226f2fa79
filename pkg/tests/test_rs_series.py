from fractions import Fraction

import numpy as np
import pytest

import oracles
from cubic_lab.rs_series import (RationalSeries, carleman_partial_sums, default_order, growth_fit,
                                 rs_coefficients)
from cubic_lab.spectrum import level
from cubic_lab.model import CutParameter


def test_anchor_values():
    s = rs_coefficients(0, 3)
    assert s[0] == 1
    assert s[1] == Fraction(11, 16)
    assert s[2] == Fraction(-465, 256)


@pytest.mark.parametrize("n", [0, 1, 2, 4])
def test_first_order_matches_sum_over_states(n):
    assert float(rs_coefficients(n, 1)[1]) == pytest.approx(oracles.second_order_coefficient(n),
                                                            rel=1e-13)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_matches_float_recursion(n):
    s = rs_coefficients(n, 10)
    ref = oracles.rs_float_coefficients(n, 10)
    for k in range(1, 11):
        assert float(s[k]) == pytest.approx(ref[k - 1], rel=1e-12)


def test_second_order_against_levels():
    # (E(b) - 1 - e1 b) / b^2 -> e2 as b -> 0
    b = 1e-3
    E = level(CutParameter(b), 0, tol=1e-12, verify_nodes=False).energy.real
    s = rs_coefficients(0, 3)
    est = (E - 1 - float(s[1]) * b) / b ** 2
    assert est == pytest.approx(float(s[2]) + float(s[3]) * b, rel=1e-3)


def test_sign_pattern_and_defaults():
    s = rs_coefficients(1)
    assert s.K == default_order(1) == 40
    assert s.alternates()
    assert all(m > 0 for m in s.moments())
    assert default_order(5) == 25


def test_serialization_roundtrip():
    s = rs_coefficients(2, 12)
    back = RationalSeries.from_json(s.to_json())
    assert back == s
    assert s.to_dict()["coefficients"][0]["value"] == f"{s[1].numerator}/{s[1].denominator}"


def test_index_bounds():
    s = rs_coefficients(0, 4)
    with pytest.raises(IndexError):
        s[5]


def test_factorial_growth():
    fit = growth_fit(rs_coefficients(0, 40))
    assert fit.trend_monotone()
    # every coefficient obeys the fitted bound
    s = rs_coefficients(0, 40)
    assert all(abs(float(s[k])) <= fit.bound(k) * (1 + 1e-12) for k in range(1, 41))
    assert 0 < fit.C < 10
    with pytest.raises(ValueError):
        growth_fit(rs_coefficients(0, 5))


def test_carleman_sums_grow():
    sums = carleman_partial_sums(rs_coefficients(0, 30))
    assert np.all(np.diff(sums) > 0)
