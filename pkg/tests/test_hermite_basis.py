import math

import numpy as np
import pytest

import oracles
from cubic_lab.hermite_basis import (BandedComplexMatrix, EvaluationRangeError, assemble_cubic,
                                     assemble_limit, assemble_rotated, eigenfunction_value,
                                     evaluation_radius, kinetic_band, x2_band, x3_band)
from cubic_lab.model import CutParameter


def _dense_from_bands(bands):
    return BandedComplexMatrix(np.asarray(bands, dtype=complex)).to_dense()


def test_bands_match_ladder_products():
    N, K = 40, 30  # compare away from the truncation edge
    x = oracles.ladder_x(N)
    H0 = np.diag(2 * np.arange(N) + 1.0)
    np.testing.assert_allclose(_dense_from_bands(x2_band(N))[:K, :K], (x @ x)[:K, :K], atol=1e-12)
    np.testing.assert_allclose(_dense_from_bands(x3_band(N))[:K, :K], (x @ x @ x)[:K, :K], atol=1e-12)
    np.testing.assert_allclose(_dense_from_bands(kinetic_band(N))[:K, :K], (H0 - x @ x)[:K, :K],
                               atol=1e-12)


def test_harmonic_diagonal_is_exact():
    M = assemble_cubic(CutParameter(0.0), 20)
    assert np.array_equal(M.diagonal(0).real, 2 * np.arange(20) + 1.0)
    assert np.all(M.diagonal(1) == 0)


def test_frequency_scaling():
    # x -> x / sqrt(omega) scales x^2 by 1/omega and -d^2 by omega
    N, w = 30, 1.7
    np.testing.assert_allclose(x2_band(N, w), x2_band(N) / w)
    np.testing.assert_allclose(kinetic_band(N, w), kinetic_band(N) * w)
    np.testing.assert_allclose(x3_band(N, w), x3_band(N) / w ** 1.5)


def test_complex_symmetric_and_matvec():
    M = assemble_cubic(CutParameter(2.0, 1.0), 25, omega=1.3, rotation=0.1)
    A = M.to_dense()
    assert np.array_equal(A, A.T)
    v = np.random.default_rng(0).standard_normal(25) + 1j
    np.testing.assert_allclose(M.matvec(v), A @ v, rtol=1e-13)
    assert M.norm_inf() == pytest.approx(np.max(np.sum(np.abs(A), axis=1)))
    np.testing.assert_array_equal(M.transpose().to_dense(), A)


def test_rotation_preserves_low_eigenvalues():
    beta = CutParameter(1.0, 0.5)
    a = np.linalg.eigvals(assemble_cubic(beta, 160).to_dense())
    b = np.linalg.eigvals(assemble_cubic(beta, 160, rotation=0.05).to_dense())
    # spurious Galerkin eigenvalues have large modulus; the physical ones are smallest
    np.testing.assert_allclose(sorted(a, key=abs)[:3], sorted(b, key=abs)[:3], rtol=1e-9)


def test_rotated_boundary_and_limit_validate():
    with pytest.raises(ValueError):
        assemble_rotated(1.0, 0.0, 1, 10)
    with pytest.raises(ValueError):
        assemble_rotated(1.0, 0.1, 0, 10)
    with pytest.raises(ValueError):
        assemble_limit(3)
    A = assemble_rotated(1.0, 0.1, 1, 12).to_dense()
    B = assemble_rotated(1.0, 0.1, -1, 12).to_dense()
    # the two sides are conjugate after the parity x -> -x
    P = np.diag((-1.0) ** np.arange(12))
    np.testing.assert_allclose(A, P @ B.conj() @ P, atol=1e-14)


def test_ground_state_values():
    c = np.zeros(10)
    c[0] = 1.0
    x = np.array([0.0, 0.5, -1.2 + 0.3j])
    val, der = eigenfunction_value(c, 1.0, x)
    ref = math.pi ** -0.25 * np.exp(-x ** 2 / 2)
    np.testing.assert_allclose(val, ref, rtol=1e-13)
    np.testing.assert_allclose(der, -x * ref, rtol=1e-13, atol=1e-15)


def test_eigenfunction_derivative_consistent():
    c = np.random.default_rng(1).standard_normal(30) * 0.5 ** np.arange(30)
    z, h = 0.7 - 0.4j, 1e-5
    v1, _ = eigenfunction_value(c, 1.4, z + h)
    v0, _ = eigenfunction_value(c, 1.4, z - h)
    _, d = eigenfunction_value(c, 1.4, z)
    assert d == pytest.approx((v1 - v0) / (2 * h), rel=1e-8)


def test_evaluation_disk_guard():
    c = np.ones(8)
    with pytest.raises(ValueError):
        eigenfunction_value(c, 1.0, 2 * evaluation_radius(8))
    assert issubclass(EvaluationRangeError, ArithmeticError)
