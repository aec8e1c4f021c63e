import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secnoma.errors import IndefiniteMatrixError, NotHermitianError
from secnoma.hermitian import (
    check_hermitian,
    derealify,
    max_eigenpair,
    psd_part,
    rank_one_defect,
    realify,
    stack_real,
)

from conftest import cn, random_psd


def test_identity_eigenpair():
    lam, v = max_eigenpair(np.eye(3))
    assert lam == pytest.approx(1.0)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    k = np.argmax(np.abs(v) > 1e-12)
    assert v[k].imag == 0 and v[k].real > 0


def test_diag_eigenpair():
    lam, v = max_eigenpair(np.diag([3.0, 1.0]))
    assert lam == pytest.approx(3.0)
    np.testing.assert_allclose(v, [1, 0], atol=1e-12)


def test_outer_product_eigenpair():
    w = np.array([1, 1j]) / np.sqrt(2)
    lam, v = max_eigenpair(2 * np.outer(w, w.conj()))
    assert lam == pytest.approx(2.0)
    np.testing.assert_allclose(v, w, atol=1e-12)  # first entry already positive real


def test_eigenpair_phase_is_deterministic(rng):
    A = random_psd(rng, 5)
    _, v1 = max_eigenpair(A)
    _, v2 = max_eigenpair(A.copy())
    np.testing.assert_array_equal(v1, v2)
    # a global phase on the eigenvector is removed by the sign rule
    _, v3 = max_eigenpair(A * (1 + 0j))
    k = np.argmax(np.abs(v1) > 1e-12)
    assert v3[k].imag == 0 and v3[k].real > 0


@pytest.mark.parametrize(
    "W, want",
    [(np.eye(2), 1.0), (np.diag([3.0, 1.0]), 1.0), (np.outer([1, 2j], [1, -2j]), 0.0)],
)
def test_rank_one_defect_examples(W, want):
    assert rank_one_defect(W) == pytest.approx(want, abs=1e-12)


def test_rank_one_defect_rejects_indefinite():
    with pytest.raises(IndefiniteMatrixError):
        rank_one_defect(np.diag([1.0, -1.0]))


def test_check_hermitian_rejects():
    with pytest.raises(NotHermitianError):
        check_hermitian(np.array([[1, 2], [0, 1]]))
    with pytest.raises(NotHermitianError):
        check_hermitian(np.ones((2, 3)))
    with pytest.raises(NotHermitianError):
        check_hermitian(np.array([[np.nan, 0], [0, 1]]))


def test_realify_real_symmetric_is_block_diagonal():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    R = realify(A)
    np.testing.assert_array_equal(R, np.block([[A, np.zeros((2, 2))], [np.zeros((2, 2)), A]]))


def test_realify_spectrum_example():
    A = np.array([[2, 1j], [-1j, 2]])
    np.testing.assert_allclose(np.linalg.eigvalsh(A), [1, 3], atol=1e-12)
    np.testing.assert_allclose(np.linalg.eigvalsh(realify(A)), [1, 1, 3, 3], atol=1e-12)


def test_realify_zero():
    np.testing.assert_array_equal(realify(np.zeros((3, 3))), np.zeros((6, 6)))


hermitian = st.integers(1, 8).flatmap(
    lambda n: st.integers(0, 2**32 - 1).map(lambda s: (lambda A: 0.5 * (A + A.conj().T))(cn(np.random.default_rng(s), n, n)))
)


@settings(max_examples=100, deadline=None)
@given(hermitian)
def test_realify_properties(A):
    R = realify(A)
    n = A.shape[0]
    ev = np.linalg.eigvalsh(A)
    np.testing.assert_allclose(np.linalg.eigvalsh(R), np.sort(np.repeat(ev, 2)), atol=1e-10)
    assert np.trace(R) == pytest.approx(2 * np.trace(A).real, abs=1e-12)
    x = cn(np.random.default_rng(n), n)
    xr = stack_real(x)
    assert xr @ R @ xr == pytest.approx(np.vdot(x, A @ x).real, abs=1e-10)
    np.testing.assert_allclose(derealify(R), A, atol=1e-14)
    # PSD both ways
    assert (ev[0] >= -1e-12) == (np.linalg.eigvalsh(R)[0] >= -1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_defect_and_lemma1(n, seed):
    rng = np.random.default_rng(seed)
    X, Y = random_psd(rng, n, int(rng.integers(1, n + 1))), random_psd(rng, n)
    assert rank_one_defect(X) >= 0
    w = cn(rng, n)
    assert rank_one_defect(np.outer(w, w.conj())) <= 1e-12 * np.vdot(w, w).real
    lx, _ = max_eigenpair(X)
    ly, y = max_eigenpair(Y)
    assert lx - ly >= np.vdot(y, (X - Y) @ y).real - 1e-9


def test_psd_part_clips():
    P = psd_part(np.diag([2.0, -1.0]))
    np.testing.assert_allclose(P, np.diag([2.0, 0.0]), atol=1e-15)
