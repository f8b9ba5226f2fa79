import math

import mpmath
import numpy as np
import pytest

from cubic_lab.model import CutParameter
from cubic_lab.spectrum import boundary_limit
from cubic_lab.stieltjes_density import (DensityError, DensityTable, _head_coefficient, density_grid,
                                         dispersion_value, moments, sample_density, small_t_slope,
                                         tunneling_action, tunneling_fit)

A_TRUE = 0.9


@pytest.fixture(scope="module")
def synthetic():
    """``rho = c t^{-1/5} exp(-A t)`` with the physical small-t constant ``c``."""
    c = _head_coefficient(0)
    g = density_grid()
    rho = c * g.t ** -0.2 * np.exp(-A_TRUE * g.t)
    table = DensityTable(0, g.t, rho, np.zeros_like(rho), g.weights, [None] * len(rho), 1e-9, g.lo, g.hi)
    return c, table


def test_grid_integrates_exactly():
    g = density_grid()
    assert np.sum(g.weights) == pytest.approx(g.hi - g.lo, rel=1e-13)
    assert np.sum(g.weights * g.t ** -0.2) == pytest.approx((g.hi ** 0.8 - g.lo ** 0.8) / 0.8, rel=1e-13)
    assert np.count_nonzero((g.t >= 10) & (g.t <= 40)) == 16
    with pytest.raises(ValueError):
        density_grid(t_min=20.0)


def test_fit_recovers_synthetic_law(synthetic):
    c, table = synthetic
    fit = tunneling_fit(table)
    assert fit.A == pytest.approx(A_TRUE, abs=1e-6)
    assert fit.q == pytest.approx(-0.2, abs=1e-6)
    assert fit.p == pytest.approx(c, rel=1e-6)
    assert fit.residual < 1e-10
    assert fit.density(20.0) == pytest.approx(c * 20 ** -0.2 * math.exp(-A_TRUE * 20), rel=1e-9)


def test_fit_correction_terms_and_guards(synthetic):
    _, table = synthetic
    t = table.t
    rho = table.rho * np.exp(-3.0 / t)
    fit = tunneling_fit((t, rho), corrections=1)
    assert fit.corrections[0] == pytest.approx(-3.0, rel=1e-6)
    assert fit.A == pytest.approx(A_TRUE, abs=1e-6)
    with pytest.raises(DensityError):
        tunneling_fit(table, window=(30.0, 31.0))
    noisy = table.rho * np.exp(0.5 * np.sin(37 * table.t))
    with pytest.raises(DensityError):
        tunneling_fit((table.t, noisy))


@pytest.mark.parametrize("k", range(4))
def test_moments_of_synthetic_density(synthetic, k):
    c, table = synthetic
    exact = c * math.gamma(k + 0.8) / A_TRUE ** (k + 0.8)
    res = moments(table, 3)[k]
    assert res.value.real == pytest.approx(exact, rel=1e-6)
    assert abs(res.value.real - exact) <= res.error


def test_dispersion_of_synthetic_density(synthetic):
    c, table = synthetic
    beta = CutParameter(1.5, 0.7)
    bv = beta.value
    with mpmath.workdps(30):
        ref = complex(mpmath.quad(lambda t: c * t ** -0.2 * mpmath.exp(-A_TRUE * t) / (1 + bv * t),
                                  [0, 1, 10, mpmath.inf]))
    E, res = dispersion_value(table, beta)
    assert E == pytest.approx(1 + bv * ref, rel=1e-6)
    assert abs(E - (1 + bv * ref)) <= abs(bv) * res.error
    assert set(res.budget) == {"quadrature", "plateau", "head", "tail"}
    with pytest.raises(ValueError):
        dispersion_value(table, CutParameter(1.0, math.pi))


def test_small_t_slope(synthetic):
    _, table = synthetic
    assert small_t_slope(table) == pytest.approx(-0.2, abs=5e-3)


def test_action_integral():
    assert tunneling_action() == pytest.approx(8 / 15, abs=1e-14)


def test_head_coefficient_from_limit():
    # rho ~ Im(L_0 e^{i pi/5}) t^{-1/5} / pi with L_0 real
    assert _head_coefficient(0) == pytest.approx(1.15626707198813 * math.sin(math.pi / 5) / math.pi,
                                                 rel=1e-12)


def test_sampling_small_grid_and_csv_roundtrip():
    grid = np.array([0.5, 1.0, 2.0])
    table = sample_density(0, grid, threads=2)
    assert table.ok
    ref = boundary_limit(1.0, +1, 0).energy.imag / math.pi
    assert table.rho[1] == pytest.approx(ref, rel=1e-12)
    assert np.all(table.plateau < 1e-8)
    back = DensityTable.from_csv(table.to_csv(["note"]))
    np.testing.assert_array_equal(back.rho, table.rho)
    assert (back.lo, back.hi) == (table.lo, table.hi)
    assert back.sidecar()["failed_samples"] == 0
    with pytest.raises(ValueError):
        sample_density(0, np.array([1.0, 0.5]))
