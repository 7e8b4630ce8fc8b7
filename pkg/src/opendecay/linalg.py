"""Dense complex linear algebra used throughout the toolkit.

Matrices are plain numpy arrays of dtype complex128.  The vectorization
convention is column stacking, vec([[a, b], [c, d]]) = (a, c, b, d), for
which vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotHermitianError

__all__ = [
    "HermitianEigen",
    "adjoint",
    "as_matrix",
    "expm",
    "frobenius",
    "hermitian_eig",
    "kron",
    "matmul",
    "min_eigenvalue_hermitian",
    "unvec",
    "vec",
]


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a 2-D complex128 array, rejecting NaN/Inf entries."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got array of ndim {a.ndim}")
    if not np.isfinite(a).all():
        raise ValueError("matrix contains non-finite entries")
    return a


def adjoint(m) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(m).conj().T


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit shape check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a, b) -> np.ndarray:
    """Kronecker product: (a kron b)[i*p + k, j*q + l] = a[i, j] * b[k, l]."""
    return np.kron(as_matrix(a), as_matrix(b))


def vec(m) -> np.ndarray:
    """Column-stacking vectorization."""
    return as_matrix(m).reshape(-1, order="F")


def unvec(v, rows: int, cols: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`; ``cols`` defaults to ``rows``."""
    if cols is None:
        cols = rows
    a = np.asarray(v, dtype=np.complex128).reshape(-1)
    if a.size != rows * cols:
        raise DimensionError(f"cannot reshape length {a.size} into {rows}x{cols}")
    return a.reshape((rows, cols), order="F")


def frobenius(m) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(np.asarray(m)))


def _require_square(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")


def _require_hermitian(a: np.ndarray, tol: float) -> None:
    # Deviation gate scaled by max(1, ||a||_F) so tiny and large inputs are
    # judged consistently.
    dev = float(np.linalg.norm(a - a.conj().T))
    bound = tol * max(1.0, float(np.linalg.norm(a)))
    if dev > bound:
        raise NotHermitianError(
            f"matrix deviates from hermiticity by {dev:.3e} (allowed {bound:.3e})"
        )


@dataclass(frozen=True)
class HermitianEigen:
    """Spectral data of a hermitian matrix: eigenvalues ascending, orthonormal
    eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitian_eig(m, tol: float = 1e-10) -> HermitianEigen:
    """Eigendecomposition of a hermitian matrix.

    Each eigenvector is rotated by a global phase so that its largest-magnitude
    component is real and positive, making the output deterministic enough for
    golden tests.
    """
    a = as_matrix(m)
    _require_square(a)
    _require_hermitian(a, tol)
    sym = 0.5 * (a + a.conj().T)
    lam, v = np.linalg.eigh(sym)
    v = v.copy()
    for j in range(v.shape[1]):
        k = int(np.argmax(np.abs(v[:, j])))
        v[:, j] /= v[k, j] / abs(v[k, j])
    return HermitianEigen(eigenvalues=lam, eigenvectors=v)


def min_eigenvalue_hermitian(m, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of a hermitian matrix."""
    a = as_matrix(m)
    _require_square(a)
    _require_hermitian(a, tol)
    return float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])


# Coefficients of the diagonal order-6 Pade approximant of exp.
_PADE6 = (1.0, 1.0 / 2.0, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0)


def expm(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring.

    The input is halved until its 1-norm is at most 0.5, a diagonal Pade
    approximant of order 6 is evaluated, and the result is squared back up.
    """
    a = as_matrix(m)
    _require_square(a)
    n = a.shape[0]
    norm = float(np.linalg.norm(a, 1)) if n else 0.0
    squarings = 0
    if norm > 0.5:
        squarings = int(np.ceil(np.log2(norm / 0.5)))
        a = a / (2.0**squarings)
    eye = np.eye(n, dtype=np.complex128)
    c = _PADE6
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    odd = a @ (c[1] * eye + c[3] * a2 + c[5] * a4)
    even = c[0] * eye + c[2] * a2 + c[4] * a4 + c[6] * a6
    result = np.linalg.solve(even - odd, even + odd)
    for _ in range(squarings):
        result = result @ result
    return result
