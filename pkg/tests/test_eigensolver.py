import numpy as np
import pytest

from cubic_lab.eigensolver import (AmbiguousShiftError, all_eigenvalues, balance, default_method,
                                   eigenvector_near, hessenberg, qr_eigenvalues)
from cubic_lab.hermite_basis import assemble_cubic
from cubic_lab.model import CutParameter


def _match(a, b):
    """Largest distance from each of ``a`` to its nearest in ``b``."""
    return max(np.min(np.abs(np.asarray(b) - z)) for z in a)


@pytest.fixture
def random_matrix():
    rng = np.random.default_rng(42)
    return rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))


def test_hessenberg_form_and_similarity(random_matrix):
    H = hessenberg(random_matrix)
    assert np.all(np.abs(np.tril(H, -2)) < 1e-12)
    assert _match(np.linalg.eigvals(H), np.linalg.eigvals(random_matrix)) < 1e-10


def test_balance_is_similarity():
    A = np.diag([1.0, 2.0, 3.0]).astype(complex)
    A[0, 2], A[2, 0] = 1e6, 1e-6
    B = balance(A)
    assert _match(np.linalg.eigvals(B), np.linalg.eigvals(A)) < 1e-9
    assert abs(B[0, 2]) < abs(A[0, 2])


def test_qr_matches_lapack_on_random(random_matrix):
    vals, rep = qr_eigenvalues(random_matrix)
    assert not rep.failed and len(vals) == 30
    assert _match(vals, np.linalg.eigvals(random_matrix)) < 1e-10


def test_qr_on_cubic_galerkin_matrix():
    M = assemble_cubic(CutParameter(1.0, 0.7), 60, rotation=0.07)
    v_qr, rep = all_eigenvalues(M, method="qr")
    v_la, _ = all_eigenvalues(M, method="lapack")
    low = sorted(v_la, key=lambda z: z.real)[:5]
    assert _match(low, v_qr) < 1e-9 * max(abs(z) for z in low)
    assert rep.method == "qr"


def test_default_backend(monkeypatch):
    monkeypatch.delenv("CUBIC_LAB_EIG", raising=False)
    assert default_method() == "lapack"
    monkeypatch.setenv("CUBIC_LAB_EIG", "qr")
    assert default_method() == "qr"


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        all_eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValueError):
        all_eigenvalues(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        all_eigenvalues(np.eye(2), method="nope")


def test_inverse_iteration_banded_and_dense():
    M = assemble_cubic(CutParameter(1.0), 80)
    vals, _ = all_eigenvalues(M)
    E = min(vals, key=lambda z: z.real)
    pair = eigenvector_near(M, E + 1e-3, spectrum=vals)
    assert pair.value == pytest.approx(E, rel=1e-10)
    assert pair.residual < 1e-10 * M.norm_inf()
    dense = eigenvector_near(M.to_dense(), E + 1e-3)
    assert dense.value == pytest.approx(E, rel=1e-10)


def test_ambiguous_shift():
    A = np.diag([0.0, 1.0, 5.0]).astype(complex)
    with pytest.raises(AmbiguousShiftError):
        eigenvector_near(A, 0.5, spectrum=np.diag(A))
