"""Dense complex linear algebra for the 2x2 and 3x3 matrices of the model.

Matrices and vectors are plain ``numpy`` arrays (complex128).  The helpers
here exist so the physics modules share one set of conventions: row-major
matrices, eigenvalues in ascending order, eigenvectors as columns.
"""

from __future__ import annotations

import numpy as np

from .errors import DimMismatch, NotHermitian

HERMITICITY_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    """Coerce to a square complex matrix of dimension 2 or 3."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] not in (2, 3):
        raise DimMismatch(f"only dim 2 and 3 are supported, got {m.shape[0]}")
    return m


def adjoint(a) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(a).conj().T


def trace(a) -> complex:
    """Sum of diagonal entries."""
    return complex(np.trace(as_matrix(a)))


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b


def add(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    return a + b


def scale(alpha: complex, a) -> np.ndarray:
    return complex(alpha) * as_matrix(a)


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b + b @ a


def hermiticity_defect(a) -> float:
    """Max-norm distance from a to its adjoint."""
    a = as_matrix(a)
    return float(np.max(np.abs(a - a.conj().T)))


def hermitian_eigs(a, tol: float = HERMITICITY_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` real and ascending and
    eigenvectors as the columns of ``v`` (orthonormal).  Raises
    :class:`NotHermitian` when ``max|A - A^dag|`` is not below ``tol``.
    """
    a = as_matrix(a)
    defect = hermiticity_defect(a)
    if not defect < tol:
        raise NotHermitian(f"hermiticity defect {defect:.3e} >= {tol:.1e}")
    w, v = np.linalg.eigh(a)
    return w, v
