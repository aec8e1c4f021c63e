"""Dense complex Hermitian helpers: dominant eigenpairs, rank-one defect and the
real symmetric embedding used to hand complex LMIs to a real conic solver."""

import numpy as np

from .errors import IndefiniteMatrixError, NotHermitianError

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-9


def hermitian_deviation(A) -> float:
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(A - A.conj().T)))


def check_hermitian(A, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``A`` symmetrized, raising if it is not Hermitian within ``tol``."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NotHermitianError("matrix has non-finite entries")
    dev = hermitian_deviation(A)
    if dev > tol:
        raise NotHermitianError(f"matrix deviates from Hermitian by {dev:.3e}")
    return 0.5 * (A + A.conj().T)


def min_eigenvalue(A) -> float:
    A = check_hermitian(A)
    if A.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(A)[0])


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # first entry that is not negligible becomes positive real
    mags = np.abs(v)
    k = int(np.argmax(mags > 1e-12 * mags.max()))
    return v * (np.conj(v[k]) / mags[k])


def max_eigenpair(A):
    """Largest eigenvalue of a Hermitian matrix and a unit eigenvector.

    The eigenvector's first non-negligible entry is made positive real, so the
    result is reproducible across runs. For a repeated top eigenvalue the vector
    LAPACK lists first is used.
    """
    A = check_hermitian(A)
    vals, vecs = np.linalg.eigh(A)
    lam = float(vals[-1])
    v = vecs[:, -1]
    v = _fix_phase(v / np.linalg.norm(v))
    return lam, v


def rank_one_defect(W, tol: float = PSD_TOL) -> float:
    """``Tr(W) - lambda_max(W)``; zero exactly when ``W`` has rank at most one."""
    W = check_hermitian(W)
    vals = np.linalg.eigvalsh(W)
    scale = max(1.0, float(np.max(np.abs(vals)))) if vals.size else 1.0
    if vals.size and vals[0] < -tol * scale:
        raise IndefiniteMatrixError(f"matrix has eigenvalue {vals[0]:.3e} < 0")
    # sum of all but the largest eigenvalue is better conditioned than trace minus max
    return max(0.0, float(np.sum(vals[:-1])))


def realify(A) -> np.ndarray:
    """``[[Re A, -Im A], [Im A, Re A]]``; PSD iff ``A`` is, with each eigenvalue doubled."""
    A = check_hermitian(A)
    re, im = A.real, A.imag
    return np.block([[re, -im], [im, re]])


def derealify(R) -> np.ndarray:
    """Inverse of :func:`realify` for a possibly unstructured real symmetric matrix.

    The two diagonal blocks are averaged and the off-diagonal blocks
    antisymmetrized, which maps PSD matrices to PSD matrices.
    """
    R = np.asarray(R, dtype=float)
    n = R.shape[0] // 2
    if R.shape != (2 * n, 2 * n):
        raise ValueError(f"expected an even square matrix, got shape {R.shape}")
    R = 0.5 * (R + R.T)
    a, b = R[:n, :n], R[:n, n:]
    c, d = R[n:, :n], R[n:, n:]
    X = 0.5 * (a + d) + 0.5j * (c - b)
    return 0.5 * (X + X.conj().T)


def stack_real(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return np.concatenate([x.real, x.imag])


def psd_part(A) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped)."""
    A = check_hermitian(A)
    vals, vecs = np.linalg.eigh(A)
    vals = np.clip(vals, 0.0, None)
    X = (vecs * vals) @ vecs.conj().T
    return 0.5 * (X + X.conj().T)
